// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/diffcore/gradcheck.hpp"

#include <cmath>
#include <string>

#include "pvlab/common/errors.hpp"

namespace pvlab {

GradcheckResult finite_diff_check(const ScalarFn& value, std::span<const double> analytic,
                                  std::span<const double> point, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_check: h must be > 0");
  if (analytic.size() != point.size()) {
    throw DimensionError(dimension_message("finite_diff_check gradient length", point.size(), analytic.size()));
  }
  std::vector<double> x(point.begin(), point.end());
  if (!std::isfinite(value(x))) throw NumericalError("finite_diff_check: non-finite objective at base point");
  GradcheckResult result;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = value(x);
    x[i] = saved - h;
    const double down = value(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("finite_diff_check: non-finite objective perturbing index " + std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(analytic[i] - numeric) / (std::abs(numeric) + 1e-12);
    if (i == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
      result.analytic = analytic[i];
      result.numeric = numeric;
    }
  }
  return result;
}

GradcheckResult finite_diff_check(const Objective& f, std::span<const double> point, double h) {
  const ValueAndGradient base = f(point);
  if (!std::isfinite(base.value)) throw NumericalError("finite_diff_check: non-finite objective at base point");
  return finite_diff_check([&f](std::span<const double> x) { return f(x).value; }, base.gradient, point, h);
}

double finite_diff_check(const std::function<double(const ParameterBlock&)>& value,
                         const std::function<std::vector<double>(const ParameterBlock&)>& gradient,
                         const ParameterBlock& params, double h) {
  ParameterBlock work = params;
  const std::vector<double> analytic = gradient(params);
  ScalarFn f = [&](std::span<const double> x) {
    work.assign(x);
    return value(work);
  };
  return finite_diff_check(f, analytic, params.values(), h).max_relative_error;
}

}  // namespace pvlab
