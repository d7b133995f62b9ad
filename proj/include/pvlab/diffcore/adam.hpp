// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pvlab/diffcore/parameter_block.hpp"

namespace pvlab {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  static AdamState for_block(const ParameterBlock& block);
};

// Returns false (and leaves params/state untouched) when any gradient entry is
// non-finite.
bool adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);
bool adam_step(ParameterBlock& params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace pvlab
