// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pvlab/metrics/landmarks.hpp"
#include "pvlab/metrics/sync_metrics.hpp"

namespace pvlab {

// {"fps": f64, "anchors": {"left","right","top","bottom"}, "frames": [[[x,y] x 26] x T]}
nlohmann::json landmarks_to_json(const LandmarkSequence& seq);
// Parse errors throw ConfigError naming `source` and the offending frame.
LandmarkSequence landmarks_from_json(const nlohmann::json& doc, LandmarkRole role, const std::string& source = "<json>");

void save_landmarks(const std::filesystem::path& path, const LandmarkSequence& seq);
LandmarkSequence load_landmarks(const std::filesystem::path& path, LandmarkRole role = LandmarkRole::real);

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& id, double lse, const TmdcResult& tm);

}  // namespace pvlab
