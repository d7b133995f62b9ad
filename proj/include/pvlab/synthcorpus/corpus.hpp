// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pvlab/synthcorpus/language.hpp"
#include "pvlab/synthcorpus/universe.hpp"

namespace pvlab {

struct CorpusSpec {
  std::size_t K_true = 8;
  std::size_t d_p = 16;
  std::size_t d_v = 12;
  double sigma_p = 0.5;
  double sigma_v = 0.5;
  double spread = 1.0;
  std::size_t languages = 5;
  std::size_t utterances = 200;
  std::size_t T = 50;
  std::size_t subset_size = 6;
  double stay = 0.7;
  std::vector<std::string> unseen{"lang4"};
  std::uint64_t seed = 0;

  void validate() const;
};

struct Corpus {
  CorpusSpec spec;
  Universe universe;
  std::vector<Language> languages;

  const Language& language(const std::string& name) const;
  std::vector<const Language*> seen() const;
  std::vector<const Language*> unseen() const;
};

// Language i is named "lang<i>". Seen languages jointly cover the universe.
Corpus build_corpus(const CorpusSpec& spec);

// Layout: <dir>/manifest.json and one directory per language holding
// utt_NNNN.json (ids, features), utt_NNNN.landmarks.json and
// utt_NNNN.frames.{bin,json}. Returns the content hash.
std::string save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

// FNV-1a over every corpus file except the manifest, in path order.
std::string corpus_content_hash(const std::filesystem::path& dir);

// Empty when the corpus is internally consistent.
std::vector<std::string> validate_corpus(const Corpus& corpus);

}  // namespace pvlab
