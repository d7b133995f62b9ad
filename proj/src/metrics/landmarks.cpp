// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/metrics/landmarks.hpp"

#include <cmath>
#include <set>

#include "pvlab/common/errors.hpp"

namespace pvlab {

void LandmarkAnchors::validate() const {
  const std::set<std::size_t> distinct{left, right, top, bottom};
  if (distinct.size() != 4) throw ConfigError("landmark anchors must be four distinct indices");
  if (*distinct.rbegin() >= kLipLandmarks) {
    throw ConfigError("landmark anchor index out of range [0," + std::to_string(kLipLandmarks) + ")");
  }
}

std::string to_string(LandmarkRole role) { return role == LandmarkRole::real ? "real" : "generated"; }

LandmarkSequence::LandmarkSequence(std::vector<double> coords, LandmarkRole role, LandmarkAnchors anchors,
                                   double fps)
    : coords_(std::move(coords)), role_(role), anchors_(anchors), fps_(fps) {
  anchors_.validate();
  if (coords_.size() % (2 * kLipLandmarks) != 0) {
    throw DimensionError("landmark coordinate count " + std::to_string(coords_.size()) +
                         " is not a multiple of 52");
  }
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw ConfigError("landmark fps must be positive");
  for (std::size_t k = 0; k < coords_.size(); ++k) {
    if (!std::isfinite(coords_[k])) {
      throw NumericalError("non-finite landmark coordinate at frame " +
                           std::to_string(k / (2 * kLipLandmarks)));
    }
  }
}

std::vector<Point2> LandmarkSequence::frame(std::size_t t) const {
  std::vector<Point2> pts(kLipLandmarks);
  for (std::size_t i = 0; i < kLipLandmarks; ++i) pts[i] = point(t, i);
  return pts;
}

LandmarkSequence LandmarkSequence::with_role(LandmarkRole role) const {
  LandmarkSequence out = *this;
  out.role_ = role;
  return out;
}

LandmarkSequence normalize_landmarks(const LandmarkSequence& seq) {
  const auto& a = seq.anchors();
  std::vector<double> out(seq.coords().size());
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < kLipLandmarks; ++i) {
      cx += seq.point(t, i).x;
      cy += seq.point(t, i).y;
    }
    cx /= kLipLandmarks;
    cy /= kLipLandmarks;
    const Point2 l = seq.point(t, a.left);
    const Point2 r = seq.point(t, a.right);
    const double width = std::hypot(l.x - r.x, l.y - r.y);
    if (!(width > 0.0)) throw ConfigError("normalize_landmarks: zero mouth width at frame " + std::to_string(t));
    for (std::size_t i = 0; i < kLipLandmarks; ++i) {
      const Point2 p = seq.point(t, i);
      const std::size_t o = (t * kLipLandmarks + i) * 2;
      out[o] = (p.x - cx) / width;
      out[o + 1] = (p.y - cy) / width;
    }
  }
  return LandmarkSequence(std::move(out), seq.role(), a, seq.fps());
}

}  // namespace pvlab
