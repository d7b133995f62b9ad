// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "pvlab/align/pair_batch.hpp"
#include "pvlab/diffcore/adam.hpp"
#include "pvlab/diffcore/mlp.hpp"
#include "pvlab/diffcore/tape.hpp"

namespace pvlab {

// Logits are clamped to +-kLogitClamp before the log-sigmoid terms.
inline constexpr double kLogitClamp = 30.0;

// Binary discriminator over the concatenation [x; y] -> one logit.
struct MIEstimator {
  Mlp discriminator;

  static MIEstimator create(std::size_t x_width, std::size_t y_width, std::size_t hidden,
                            std::uint64_t seed);
  std::size_t input_width() const { return discriminator.spec.input_width(); }
};

struct MIEstimate {
  double value = 0.0;
  std::size_t clamped = 0;
};

// Jensen-Shannon bound:
//   mean_P log sigma(D([x;y])) + mean_N log(1 - sigma(D([x;y]))).
// Always <= 0.
MIEstimate estimate_js_mi(const MIEstimator& est, const PairBatch& batch);

struct TapeMI {
  Node value;
  std::size_t clamped = 0;
};

// Same estimate recorded on the tape; differentiable in the discriminator
// parameters (unless frozen) and in both inputs.
TapeMI js_mi(Tape& tape, const MIEstimator& est, Node xs, Node ys,
             const std::vector<std::size_t>& shuffle, bool frozen = false);

// One gradient-ascent step on the estimate for a fixed batch. Returns the
// estimate before the update.
double train_estimator_step(MIEstimator& est, AdamState& state, const PairBatch& batch,
                            const AdamConfig& cfg);

struct AlignmentTerms {
  double loss = 0.0;
  double mi_prototype = 0.0;
  double mi_raw = 0.0;
  std::size_t clamped = 0;
};

// L_align = -I(q_p; q_v) + lambda_neg * I(z_p; z_v). The prototype-level
// inputs are the per-timestep soft-assignment rows.
AlignmentTerms alignment_loss(const Matrix& q_p_soft, const Matrix& q_v_soft, const Matrix& z_p,
                              const Matrix& z_v, const MIEstimator& est_proto,
                              const MIEstimator& est_raw, double lambda_neg, std::uint64_t seed);

struct TapeAlignment {
  Node loss;
  Node mi_prototype;
  Node mi_raw;
  std::size_t clamped = 0;
};

TapeAlignment alignment_loss(Tape& tape, Node q_p_soft, Node q_v_soft, Node z_p, Node z_v,
                             const MIEstimator& est_proto, const MIEstimator& est_raw,
                             double lambda_neg, const std::vector<std::size_t>& shuffle,
                             bool freeze_raw_estimator = false);

}  // namespace pvlab
