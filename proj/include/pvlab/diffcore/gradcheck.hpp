// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pvlab/diffcore/parameter_block.hpp"

namespace pvlab {

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

using ScalarFn = std::function<double(std::span<const double>)>;
using Objective = std::function<ValueAndGradient(std::span<const double>)>;

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// max_i |analytic_i - central_i| / (|central_i| + 1e-12) with central
// differences of step h around `point`. Throws NumericalError on any
// non-finite evaluation.
GradcheckResult finite_diff_check(const ScalarFn& value, std::span<const double> analytic,
                                  std::span<const double> point, double h);

GradcheckResult finite_diff_check(const Objective& f, std::span<const double> point, double h);

double finite_diff_check(const std::function<double(const ParameterBlock&)>& value,
                         const std::function<std::vector<double>(const ParameterBlock&)>& gradient,
                         const ParameterBlock& params, double h);

}  // namespace pvlab
