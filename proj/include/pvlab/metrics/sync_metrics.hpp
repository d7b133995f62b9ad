// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pvlab/metrics/landmarks.hpp"

namespace pvlab {

inline constexpr double kMouthEpsilon = 1e-8;
inline constexpr std::size_t kMouthFeatures = 5;

enum class MouthFeature { width = 0, height, area, aspect_ratio, openness };
std::string to_string(MouthFeature f);

// rows[f][t], row order width, height, area, aspect ratio, openness.
struct MouthFeatureSeries {
  std::array<std::vector<double>, kMouthFeatures> rows;
  std::size_t frames() const { return rows[0].size(); }
  const std::vector<double>& operator[](MouthFeature f) const { return rows[static_cast<std::size_t>(f)]; }
};

double lse_d(const LandmarkSequence& real, const LandmarkSequence& gen);

MouthFeatureSeries mouth_features(const LandmarkSequence& seq);

// Zero (with a warning) when either series has no variance. Passing
// `zero_variance` reports the case to the caller instead of logging it.
double pearson(std::span<const double> x, std::span<const double> y, bool* zero_variance = nullptr);

struct TmdcResult {
  double score = 0.0;
  std::array<double, kMouthFeatures> r{};
  std::size_t zero_variance = 0;  // rows that fell back to r = 0
};

TmdcResult tmdc_detail(const MouthFeatureSeries& real, const MouthFeatureSeries& gen, bool warn = true);
TmdcResult tmdc_detail(const LandmarkSequence& real, const LandmarkSequence& gen, bool warn = true);
double tmdc(const LandmarkSequence& real, const LandmarkSequence& gen);

}  // namespace pvlab
