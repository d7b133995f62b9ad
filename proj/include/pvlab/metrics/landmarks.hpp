// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pvlab {

inline constexpr std::size_t kLipLandmarks = 26;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

// Default layout walks the lip contour counter-clockwise starting at the
// right mouth corner.
struct LandmarkAnchors {
  std::size_t left = 13;
  std::size_t right = 0;
  std::size_t top = 7;
  std::size_t bottom = 20;

  void validate() const;
  bool operator==(const LandmarkAnchors&) const = default;
};

enum class LandmarkRole { real, generated };
std::string to_string(LandmarkRole role);

class LandmarkSequence {
 public:
  LandmarkSequence() = default;
  // coords: T * 26 * 2 values, (x, y) per landmark.
  LandmarkSequence(std::vector<double> coords, LandmarkRole role = LandmarkRole::real,
                   LandmarkAnchors anchors = {}, double fps = 25.0);

  std::size_t frames() const { return coords_.size() / (2 * kLipLandmarks); }
  LandmarkRole role() const { return role_; }
  const LandmarkAnchors& anchors() const { return anchors_; }
  double fps() const { return fps_; }
  const std::vector<double>& coords() const { return coords_; }

  Point2 point(std::size_t t, std::size_t i) const {
    const std::size_t o = (t * kLipLandmarks + i) * 2;
    return {coords_[o], coords_[o + 1]};
  }
  std::vector<Point2> frame(std::size_t t) const;

  LandmarkSequence with_role(LandmarkRole role) const;

  bool operator==(const LandmarkSequence&) const = default;

 private:
  std::vector<double> coords_;
  LandmarkRole role_ = LandmarkRole::real;
  LandmarkAnchors anchors_;
  double fps_ = 25.0;
};

// Per frame: lip centroid to the origin, corner distance scaled to 1.
// Throws ConfigError naming the first frame whose corners coincide.
LandmarkSequence normalize_landmarks(const LandmarkSequence& seq);

}  // namespace pvlab
