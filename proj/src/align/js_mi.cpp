// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/align/js_mi.hpp"

#include <cmath>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/log.hpp"

namespace pvlab {

MIEstimator MIEstimator::create(std::size_t x_width, std::size_t y_width, std::size_t hidden,
                                std::uint64_t seed) {
  return MIEstimator{Mlp::create(MLPSpec::one_hidden(x_width + y_width, hidden, 1), seed)};
}

namespace {

void check_shuffle(const std::vector<std::size_t>& shuffle, std::size_t rows) {
  if (shuffle.size() != rows) throw DimensionError(dimension_message("negative shuffle length", rows, shuffle.size()));
  if (rows < 2) throw ConfigError("JS-MI needs B >= 2");
  for (std::size_t i = 0; i < rows; ++i) {
    if (shuffle[i] >= rows) throw DimensionError("negative shuffle index out of range");
  }
}

std::size_t count_clamped(const Matrix& logits) {
  std::size_t n = 0;
  for (double l : logits.data)
    if (std::abs(l) > kLogitClamp) ++n;
  return n;
}

}  // namespace

TapeMI js_mi(Tape& tape, const MIEstimator& est, Node xs, Node ys,
             const std::vector<std::size_t>& shuffle, bool frozen) {
  const Matrix& xv = tape.value(xs);
  const Matrix& yv = tape.value(ys);
  if (xv.rows != yv.rows) throw DimensionError(dimension_message("JS-MI pair rows", xv.rows, yv.rows));
  if (xv.cols + yv.cols != est.input_width()) {
    throw DimensionError(dimension_message("JS-MI discriminator input width", est.input_width(), xv.cols + yv.cols));
  }
  check_shuffle(shuffle, xv.rows);

  const auto& d = est.discriminator;
  auto forward = [&](Node in) {
    return frozen ? mlp_forward_frozen(tape, d.params, d.spec, in) : d.record(tape, in);
  };
  Node pos_logit = forward(tape.concat_cols(xs, ys));
  Node neg_logit = forward(tape.concat_cols(xs, tape.gather_rows(ys, shuffle)));
  const std::size_t clamped = count_clamped(tape.value(pos_logit)) + count_clamped(tape.value(neg_logit));

  Node pos = tape.mean(tape.log_sigmoid(tape.clamp(pos_logit, -kLogitClamp, kLogitClamp)));
  // log(1 - sigma(l)) = log sigma(-l)
  Node neg = tape.mean(tape.log_sigmoid(tape.scale(tape.clamp(neg_logit, -kLogitClamp, kLogitClamp), -1.0)));
  return TapeMI{tape.add(pos, neg), clamped};
}

MIEstimate estimate_js_mi(const MIEstimator& est, const PairBatch& batch) {
  Tape tape;
  const TapeMI mi = js_mi(tape, est, tape.constant(batch.xs), tape.constant(batch.ys), batch.shuffle, true);
  if (mi.clamped > 0) log::debug("estimate_js_mi: " + std::to_string(mi.clamped) + " logits clamped");
  return MIEstimate{tape.scalar(mi.value), mi.clamped};
}

double train_estimator_step(MIEstimator& est, AdamState& state, const PairBatch& batch,
                            const AdamConfig& cfg) {
  Tape tape;
  const TapeMI mi = js_mi(tape, est, tape.constant(batch.xs), tape.constant(batch.ys), batch.shuffle);
  const double value = tape.scalar(mi.value);
  tape.backward(tape.scale(mi.value, -1.0));
  adam_step(est.discriminator.params, tape.gradient(est.discriminator.params), state, cfg);
  return value;
}

TapeAlignment alignment_loss(Tape& tape, Node q_p_soft, Node q_v_soft, Node z_p, Node z_v,
                             const MIEstimator& est_proto, const MIEstimator& est_raw,
                             double lambda_neg, const std::vector<std::size_t>& shuffle,
                             bool freeze_raw_estimator) {
  if (!(lambda_neg >= 0.0)) throw ConfigError("alignment_loss: lambda_neg must be >= 0");
  const std::size_t T = tape.value(q_p_soft).rows;
  for (Node n : {q_v_soft, z_p, z_v}) {
    if (tape.value(n).rows != T) {
      throw DimensionError(dimension_message("alignment sequence length", T, tape.value(n).rows));
    }
  }
  const TapeMI proto = js_mi(tape, est_proto, q_p_soft, q_v_soft, shuffle);
  const TapeMI raw = js_mi(tape, est_raw, z_p, z_v, shuffle, freeze_raw_estimator);
  Node loss = tape.add(tape.scale(proto.value, -1.0), tape.scale(raw.value, lambda_neg));
  return TapeAlignment{loss, proto.value, raw.value, proto.clamped + raw.clamped};
}

AlignmentTerms alignment_loss(const Matrix& q_p_soft, const Matrix& q_v_soft, const Matrix& z_p,
                              const Matrix& z_v, const MIEstimator& est_proto,
                              const MIEstimator& est_raw, double lambda_neg, std::uint64_t seed) {
  const std::size_t T = q_p_soft.rows;
  for (const Matrix* m : {&q_v_soft, &z_p, &z_v}) {
    if (m->rows != T) throw DimensionError(dimension_message("alignment sequence length", T, m->rows));
  }
  Tape tape;
  const auto shuffle = random_derangement(T, seed);
  const TapeAlignment a = alignment_loss(tape, tape.constant(q_p_soft), tape.constant(q_v_soft),
                                         tape.constant(z_p), tape.constant(z_v), est_proto, est_raw,
                                         lambda_neg, shuffle);
  return AlignmentTerms{tape.scalar(a.loss), tape.scalar(a.mi_prototype), tape.scalar(a.mi_raw), a.clamped};
}

}  // namespace pvlab
