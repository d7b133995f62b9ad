// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/generator/generation_loss.hpp"

#include <cmath>
#include <vector>

#include "pvlab/common/errors.hpp"

namespace pvlab {
namespace {

void check_weights(const GenerationWeights& w) {
  if (!(w.l1 >= 0.0) || !(w.perceptual >= 0.0) || !(w.temporal >= 0.0)) {
    throw ConfigError("generation loss weights must be >= 0");
  }
}

std::vector<std::size_t> diff_rows(std::size_t T, std::size_t segment, bool upper) {
  if (segment == 0) segment = T;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < T; start += segment) {
    const std::size_t end = std::min(T, start + segment);
    for (std::size_t t = start; t + 1 < end; ++t) idx.push_back(upper ? t + 1 : t);
  }
  return idx;
}

}  // namespace

GenerationTerms generation_loss(const FrameSequence& gen, const FrameSequence& real,
                                const PerceptualNet& phi, const GenerationWeights& w) {
  Tape tape;
  return generation_loss(tape, tape.constant(gen.as_matrix()), real.as_matrix(), phi, w).values;
}

TapeGeneration generation_loss(Tape& tape, Node gen, const Matrix& real, const PerceptualNet& phi,
                               const GenerationWeights& w, std::size_t segment_length) {
  check_weights(w);
  const Matrix& gv = tape.value(gen);
  if (!gv.same_shape(real)) {
    throw DimensionError("generation_loss: shape mismatch (" + std::to_string(gv.rows) + "x" + std::to_string(gv.cols) +
                         " vs " + std::to_string(real.rows) + "x" + std::to_string(real.cols) + ")");
  }
  if (gv.cols != kFramePixels) throw DimensionError(dimension_message("generation_loss frame width", kFramePixels, gv.cols));
  if (gv.rows == 0) throw ConfigError("generation_loss: empty sequence");

  Node real_n = tape.constant(real);
  Node l1 = tape.mean(tape.abs(tape.sub(gen, real_n)));

  Node phi_gen = phi.features(tape, gen);
  Node phi_real = phi.features(tape, real_n);
  Node perc = tape.mean(tape.square(tape.sub(phi_gen, phi_real)));

  Node total = tape.add(tape.scale(l1, w.l1), tape.scale(perc, w.perceptual));
  GenerationTerms terms;
  terms.l1 = tape.scalar(l1);
  terms.perceptual = tape.scalar(perc);

  const auto up = diff_rows(gv.rows, segment_length, true);
  if (!up.empty()) {
    const auto lo = diff_rows(gv.rows, segment_length, false);
    Node dgen = tape.sub(tape.gather_rows(gen, up), tape.gather_rows(gen, lo));
    Node dreal = tape.sub(tape.gather_rows(real_n, up), tape.gather_rows(real_n, lo));
    Node temp = tape.mean(tape.abs(tape.sub(dgen, dreal)));
    terms.temporal = tape.scalar(temp);
    total = tape.add(total, tape.scale(temp, w.temporal));
  } else if (w.temporal > 0.0) {
    throw ConfigError("generation_loss: temporal term needs T >= 2 within a segment");
  }
  terms.total = tape.scalar(total);
  return TapeGeneration{total, terms};
}

double total_loss(double l_align, double l_router, double l_gen, double lambda_task) {
  if (!std::isfinite(l_align)) throw NumericalError("total_loss: L_align is not finite");
  if (!std::isfinite(l_router)) throw NumericalError("total_loss: L_router is not finite");
  if (!std::isfinite(l_gen)) throw NumericalError("total_loss: L_gen is not finite");
  if (!std::isfinite(lambda_task)) throw NumericalError("total_loss: lambda_task is not finite");
  return l_align + l_router + lambda_task * l_gen;
}

}  // namespace pvlab
