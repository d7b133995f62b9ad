// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pvlab/diffcore/matrix.hpp"
#include "pvlab/generator/frames.hpp"
#include "pvlab/metrics/landmarks.hpp"
#include "pvlab/synthcorpus/universe.hpp"

namespace pvlab {

struct LanguageSpec {
  std::string name;
  std::vector<std::size_t> subset;  // global phoneme ids
  Matrix transition;                // row-stochastic, |subset| x |subset|
  std::size_t T = 50;
  std::size_t utterances = 200;
  double sigma_p = 0.5;
  double sigma_v = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  // Also checks that the subset lives inside the universe.
  void validate(const Universe& u) const;
};

struct Utterance {
  std::vector<std::size_t> phonemes;
  Matrix z_p;  // T x d_p
  Matrix z_v;  // T x d_v
  LandmarkSequence landmarks;
  FrameSequence frames;

  std::size_t length() const { return phonemes.size(); }
  std::size_t viseme(std::size_t t, const Universe& u) const { return u.correspondence[phonemes[t]]; }
};

struct Language {
  LanguageSpec spec;
  std::vector<Utterance> utterances;
};

Utterance generate_utterance(const LanguageSpec& spec, const Universe& u, std::size_t index);
std::vector<Utterance> generate_language(const LanguageSpec& spec, const Universe& u);

// Random sticky Markov chain over a random subset of the universe.
LanguageSpec random_language_spec(const std::string& name, std::size_t K_true, std::size_t subset_size, double stay,
                                  std::uint64_t seed);

std::pair<std::vector<Language>, std::vector<Language>> split_seen_unseen(
    const std::vector<Language>& languages, const std::vector<std::string>& unseen, const Universe& u);

}  // namespace pvlab
