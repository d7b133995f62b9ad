// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvlab/harness/evaluation.hpp"

namespace pvlab {

struct EpochRecord {
  std::size_t epoch = 0;
  double l_align = 0.0;
  double l_router = 0.0;
  double l_gen = 0.0;
  double total = 0.0;
  double mi_proto = 0.0;
  double mi_raw = 0.0;
  double route = 0.0;
  double utilization = 0.0;
  double entropy = 0.0;
  double alignment_accuracy = 0.0;  // held-out seen utterances
  bool refit = false;
  std::size_t skipped_steps = 0;

  bool operator==(const EpochRecord&) const = default;
};

struct RunReport {
  nlohmann::json config;
  std::string status = "ok";
  std::vector<EpochRecord> epochs;
  double train_accuracy = 0.0;
  SetMetrics held_out;
  SetMetrics zero_shot;
  std::size_t steps = 0;
  std::size_t tokens = 0;
  std::size_t parameter_count = 0;
  // Wall-clock fields; excluded from determinism comparisons.
  double wall_clock_s = 0.0;
  double tokens_per_sec = 0.0;

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
  std::string table() const;
  std::string epochs_csv() const;

  bool same_results(const RunReport& other) const;
  bool operator==(const RunReport&) const = default;
};

void write_report(const RunReport& report, const std::filesystem::path& dir);
RunReport read_report(const std::filesystem::path& path);

}  // namespace pvlab
