// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pvlab {

struct GradcheckRow {
  std::string family;
  std::vector<double> errors;  // one per seed
  double max_error = 0.0;
  bool passed = false;
};

struct GradcheckOptions {
  std::vector<std::uint64_t> seeds{0, 1, 2};
  double h = 1e-5;
  double tolerance = 1e-4;
  // Test hook: scales one analytic gradient entry of the named family.
  std::string corrupt_family;
};

// Families: align, js_mi, router, gen.
const std::vector<std::string>& gradcheck_families();
std::vector<GradcheckRow> run_gradcheck_suite(const GradcheckOptions& options = {});
std::string gradcheck_table(const std::vector<GradcheckRow>& rows);

}  // namespace pvlab
