// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvlab/diffcore/matrix.hpp"
#include "pvlab/harness/model.hpp"
#include "pvlab/metrics/sync_metrics.hpp"
#include "pvlab/synthcorpus/corpus.hpp"

namespace pvlab {

inline constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

// Maximum-weight assignment of rows to columns. Each row gets a distinct
// column; with more rows than columns the surplus rows get kUnassigned.
std::vector<std::size_t> hungarian_max(const Matrix& weight);

// Learned phoneme code -> viseme code pairing plus the identification of
// viseme codes with true viseme classes.
struct CorrespondenceMap {
  std::vector<std::size_t> phoneme_to_viseme_code;
  std::vector<std::size_t> viseme_code_label;

  std::size_t predict(std::size_t phoneme_code) const {
    return viseme_code_label[phoneme_to_viseme_code[phoneme_code]];
  }
};

// Codes index [0, K); true visemes index [0, K_true).
CorrespondenceMap fit_correspondence(const std::vector<std::size_t>& phoneme_codes,
                                     const std::vector<std::size_t>& viseme_codes,
                                     const std::vector<std::size_t>& true_visemes, std::size_t K,
                                     std::size_t K_true);

double correspondence_accuracy(const CorrespondenceMap& map, const std::vector<std::size_t>& phoneme_codes,
                               const std::vector<std::size_t>& true_visemes);

// I(X;Y) / mean(H(X), H(Y)); 0 when both entropies vanish.
double normalized_mutual_information(const std::vector<std::size_t>& xs, const std::vector<std::size_t>& ys);

// Per-frame outputs of a trained model on a list of utterances.
struct Inference {
  std::vector<std::size_t> phoneme_codes;
  std::vector<std::size_t> viseme_codes;
  std::vector<std::size_t> true_phonemes;
  std::vector<std::size_t> true_visemes;
  std::vector<std::size_t> top_expert;
  std::vector<std::size_t> usage;  // selections per expert
  double lse_d = 0.0;              // mean over utterances
  TmdcResult tmdc;                 // mean over utterances
};


// generate = false skips decoding and the landmark metrics.
Inference infer(const Model& model, const std::vector<const Utterance*>& utts, const Universe& universe,
                bool generate);

struct SetMetrics {
  std::string name;
  std::size_t frames = 0;
  double alignment_accuracy = 0.0;
  double nmi = 0.0;
  double lse_d = 0.0;
  double tmdc = 0.0;
  std::array<double, kMouthFeatures> r{};
  std::vector<std::size_t> usage;

  nlohmann::json to_json() const;
  static SetMetrics from_json(const nlohmann::json& j);
  bool operator==(const SetMetrics&) const = default;
};

SetMetrics summarize(const std::string& name, const Inference& inf, const CorrespondenceMap& map);

}  // namespace pvlab
