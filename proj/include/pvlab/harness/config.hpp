// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvlab/synthcorpus/corpus.hpp"

namespace pvlab {

struct ExperimentConfig {
  // corpus generation
  CorpusSpec corpus_spec;

  // paths
  std::string corpus = "corpus";
  std::string out = "run";

  // prototypes
  std::size_t K = 8;
  double tau = 0.5;
  std::size_t refit_period = 10;

  // routing
  std::size_t S = 2;
  std::size_t M = 4;
  double beta = 0.5;
  bool flip_entropy_sign = false;

  // objective
  double lambda_neg = 0.1;
  double lambda_util = 0.01;
  double lambda_ent = 0.001;
  double lambda_task = 1.0;
  double lambda1 = 1.0;
  double lambdap = 0.1;
  double lambdat = 0.5;
  bool freeze_raw_estimator = false;

  // optimisation
  double lr = 1e-3;
  double disc_lr = 3e-3;
  std::size_t epochs = 30;
  std::size_t batch = 64;
  std::size_t window = 16;
  std::size_t steps_per_epoch = 200;  // 0: one pass over the training windows
  std::uint64_t seed = 0;

  // architecture
  std::size_t embed_dim = 16;
  std::size_t expert_width = 16;
  std::size_t disc_hidden = 32;
  std::size_t kmeans_restarts = 4;

  // evaluation
  double holdout_fraction = 0.1;

  // ablations
  bool disable_moe = false;
  bool disable_pv_align = false;
  bool disable_phoneme_guidance = false;

  // Throws ConfigError naming the offending key.
  void validate() const;

  void set(const std::string& key, const std::string& value);
  // key=value lines; '#' starts a comment.
  static ExperimentConfig parse(const std::string& text, const std::string& source = "<config>");
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_text() const;
  nlohmann::json to_json() const;

  static const std::vector<std::string>& keys();
};

}  // namespace pvlab
