// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/metrics/sync_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/log.hpp"
#include "pvlab/metrics/geometry.hpp"

namespace pvlab {

std::string to_string(MouthFeature f) {
  switch (f) {
    case MouthFeature::width: return "width";
    case MouthFeature::height: return "height";
    case MouthFeature::area: return "area";
    case MouthFeature::aspect_ratio: return "aspect_ratio";
    case MouthFeature::openness: return "openness";
  }
  return "?";
}

double lse_d(const LandmarkSequence& real, const LandmarkSequence& gen) {
  if (real.frames() != gen.frames()) {
    throw DimensionError(dimension_message("lse_d frame count", real.frames(), gen.frames()));
  }
  if (real.frames() == 0) throw ConfigError("lse_d: empty sequences");
  double total = 0.0;
  for (std::size_t t = 0; t < real.frames(); ++t) {
    double frame = 0.0;
    for (std::size_t i = 0; i < kLipLandmarks; ++i) {
      const Point2 a = real.point(t, i);
      const Point2 b = gen.point(t, i);
      frame += std::hypot(a.x - b.x, a.y - b.y);
    }
    total += frame / kLipLandmarks;
  }
  return total / static_cast<double>(real.frames());
}

MouthFeatureSeries mouth_features(const LandmarkSequence& seq) {
  const auto& a = seq.anchors();
  MouthFeatureSeries out;
  for (auto& row : out.rows) row.resize(seq.frames());
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    const Point2 l = seq.point(t, a.left), r = seq.point(t, a.right);
    const Point2 top = seq.point(t, a.top), bot = seq.point(t, a.bottom);
    const double w = std::hypot(l.x - r.x, l.y - r.y);
    const double h = std::hypot(top.x - bot.x, top.y - bot.y);
    const auto pts = seq.frame(t);
    out.rows[0][t] = w;
    out.rows[1][t] = h;
    out.rows[2][t] = convex_hull_area(pts);
    out.rows[3][t] = w / (h + kMouthEpsilon);
    out.rows[4][t] = h / (w + kMouthEpsilon);
  }
  return out;
}

namespace {

bool constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y, bool* zero_variance) {
  if (x.size() != y.size()) throw DimensionError(dimension_message("pearson length", x.size(), y.size()));
  if (x.size() < 2) throw ConfigError("pearson needs at least 2 samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const bool degenerate = constant(x) || constant(y) || sxx == 0.0 || syy == 0.0;
  if (zero_variance) *zero_variance = degenerate;
  if (degenerate) {
    if (!zero_variance) log::warn("pearson: zero-variance series, correlation set to 0");
    return 0.0;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

TmdcResult tmdc_detail(const MouthFeatureSeries& real, const MouthFeatureSeries& gen, bool warn) {
  if (real.frames() != gen.frames()) {
    throw DimensionError(dimension_message("tmdc frame count", real.frames(), gen.frames()));
  }
  TmdcResult res;
  for (std::size_t k = 0; k < kMouthFeatures; ++k) {
    bool flat = false;
    res.r[k] = pearson(real.rows[k], gen.rows[k], &flat);
    res.zero_variance += flat ? 1 : 0;
    res.score += res.r[k];
  }
  res.score /= kMouthFeatures;
  if (warn && res.zero_variance > 0) {
    log::warn("tmdc: " + std::to_string(res.zero_variance) + " zero-variance feature row(s) scored as r = 0");
  }
  return res;
}

TmdcResult tmdc_detail(const LandmarkSequence& real, const LandmarkSequence& gen, bool warn) {
  if (real.frames() != gen.frames()) {
    throw DimensionError(dimension_message("tmdc frame count", real.frames(), gen.frames()));
  }
  if (real.frames() < 2) throw ConfigError("tmdc needs T >= 2");
  return tmdc_detail(mouth_features(real), mouth_features(gen), warn);
}

double tmdc(const LandmarkSequence& real, const LandmarkSequence& gen) { return tmdc_detail(real, gen).score; }

}  // namespace pvlab
