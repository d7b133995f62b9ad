// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "pvlab/common/errors.hpp"
#include "pvlab/harness/config.hpp"
#include "pvlab/harness/model.hpp"
#include "pvlab/harness/report.hpp"
#include "pvlab/synthcorpus/corpus.hpp"

namespace pvlab {

// Seen-language utterances split into training and held-out parts; unseen
// languages are only ever evaluated.
struct DataSplit {
  std::vector<const Utterance*> train;
  std::vector<const Utterance*> held_out;
  std::vector<const Utterance*> zero_shot;
};

DataSplit split_corpus(const Corpus& corpus, double holdout_fraction);

struct TrainOptions {
  // Directory for report and checkpoints; nothing is written when empty.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Raised when the objective turns non-finite; the last good checkpoint is
// left in <out>/checkpoint.
class TrainingAborted : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct TrainResult {
  RunReport report;
  Model model;
};

TrainResult train(const ExperimentConfig& cfg, const Corpus& corpus, const TrainOptions& options = {});

}  // namespace pvlab
