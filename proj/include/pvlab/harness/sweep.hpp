// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pvlab/harness/config.hpp"
#include "pvlab/harness/report.hpp"
#include "pvlab/synthcorpus/corpus.hpp"

namespace pvlab {

struct SweepAxes {
  std::vector<std::size_t> S;
  std::vector<std::size_t> M;
  std::vector<std::size_t> K;
};

// "1,2,3" or "2..6"; mixed forms like "1,3..5" are accepted.
std::vector<std::size_t> parse_axis(const std::string& text, const std::string& name);

struct SweepRow {
  std::size_t S = 0, M = 0, K = 0;
  bool skipped = false;
  std::string reason;
  double l_align = 0.0;
  double l_router = 0.0;
  double l_gen = 0.0;
  double total = 0.0;
  double alignment_accuracy = 0.0;
  double tokens_per_sec = 0.0;
  std::size_t parameter_count = 0;
  std::optional<RunReport> report;
};

struct SweepOptions {
  // Each valid combination writes a run directory S<s>_M<m>_K<k> here.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const SweepRow&)> on_row;
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const Corpus& corpus, const SweepAxes& axes,
                                const SweepOptions& options = {});

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace pvlab
