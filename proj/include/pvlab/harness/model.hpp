// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pvlab/align/js_mi.hpp"
#include "pvlab/diffcore/mlp.hpp"
#include "pvlab/diffcore/tape.hpp"
#include "pvlab/generator/frames.hpp"
#include "pvlab/generator/generation_loss.hpp"
#include "pvlab/harness/config.hpp"
#include "pvlab/prototypes/prototype_bank.hpp"
#include "pvlab/router/router.hpp"

namespace pvlab {

struct Model {
  ExperimentConfig cfg;
  std::size_t d_p = 0;
  std::size_t d_v = 0;

  Mlp enc_p;  // speech features -> embedding (tanh-squashed)
  Mlp enc_v;  // visual features -> embedding (tanh-squashed)
  std::optional<PrototypeBank> bank_p;
  std::optional<PrototypeBank> bank_v;
  MIEstimator est_proto;
  MIEstimator est_raw;
  RouterConfig router;
  Gates gates;
  std::vector<Mlp> experts;
  Mlp decoder;
  PerceptualNet phi;

  static Model create(const ExperimentConfig& cfg, std::size_t d_p, std::size_t d_v);

  bool routed() const { return !cfg.disable_moe; }

  // Updated by the model objective.
  std::vector<std::pair<std::string, ParameterBlock*>> model_blocks();
  // Updated by the estimator (ascent) objective.
  std::vector<std::pair<std::string, ParameterBlock*>> estimator_blocks();
  std::size_t parameter_count() const;

  Matrix encode_p(const Matrix& x) const;
  Matrix encode_v(const Matrix& x) const;

  void save(const std::filesystem::path& dir) const;
  // Restores parameters and banks into a model created from the same config.
  void load(const std::filesystem::path& dir);
};

// One forward pass over B time-aligned rows.
struct Pass {
  Node x_p, e_p, e_v, q_p, q_v;
  Node moe_out;
  Node frames;
  std::optional<RouterForward> routing;
  std::vector<std::size_t> rows_evaluated;  // per expert
};

Pass run_model(Tape& tape, const Model& model, const Matrix& x_p, const Matrix& x_v);

struct StepTerms {
  double l_align = 0.0;
  double l_router = 0.0;
  double l_gen = 0.0;
  double total = 0.0;
  double mi_proto = 0.0;
  double mi_raw = 0.0;
  double route = 0.0;
  double utilization = 0.0;
  double entropy = 0.0;
  double gen_l1 = 0.0;
  double gen_perceptual = 0.0;
  double gen_temporal = 0.0;
  std::size_t clamped = 0;
};

struct StepLosses {
  Node total;
  std::optional<Node> estimator_objective;  // maximised by the estimators
  StepTerms terms;
};

// segment: rows per independent clip for the temporal term.
StepLosses step_losses(Tape& tape, const Model& model, const Pass& pass, const Matrix& real_frames,
                       std::size_t segment, const std::vector<std::size_t>& shuffle);

}  // namespace pvlab
