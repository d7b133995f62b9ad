// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pvlab/harness/config.hpp"
#include "pvlab/harness/gradcheck_suite.hpp"
#include "pvlab/harness/sweep.hpp"

namespace pvlab {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerification = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNumerical = 4,
};

inline constexpr const char* kOutputRootEnv = "PVLAB_OUT";

// Relative paths are placed under $PVLAB_OUT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& p);

// Runs fn, mapping exceptions to exit codes and printing them to err.
int run_guarded(const std::function<int()>& fn, std::ostream& err);

int cmd_synth(const ExperimentConfig& cfg, std::ostream& out);
int cmd_train(const ExperimentConfig& cfg, std::ostream& out);

struct EvalRequest {
  // Files, or directories whose *.json files are paired by name.
  std::vector<std::filesystem::path> real;
  std::vector<std::filesystem::path> generated;
  bool normalize = false;
  std::optional<std::filesystem::path> csv;  // stdout when empty
};
int cmd_eval(const EvalRequest& request, std::ostream& out);

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out);
int cmd_sweep(const ExperimentConfig& cfg, const SweepAxes& axes, std::ostream& out);
int cmd_report(const std::filesystem::path& run_dir, bool as_json, std::ostream& out);

}  // namespace pvlab
