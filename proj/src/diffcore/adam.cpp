// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/diffcore/adam.hpp"

#include <cmath>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/log.hpp"
#include "pvlab/diffcore/matrix.hpp"

namespace pvlab {

AdamState AdamState::for_block(const ParameterBlock& block) {
  return AdamState{std::vector<double>(block.size(), 0.0), std::vector<double>(block.size(), 0.0), 0};
}

bool adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (grads.size() != params.size()) {
    throw DimensionError(dimension_message("adam gradient length", params.size(), grads.size()));
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (!all_finite(grads)) {
    log::warn("adam_step: non-finite gradient, step skipped");
    return false;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
  return true;
}

bool adam_step(ParameterBlock& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
  return adam_step(params.values(), grads, state, cfg);
}

}  // namespace pvlab
