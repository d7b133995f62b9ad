// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/synthcorpus/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "pvlab/common/errors.hpp"

namespace pvlab {
namespace {

// Anchor indices and the number of contour steps between consecutive anchors.
constexpr std::array<std::size_t, 4> kAnchorIndex{0, 7, 13, 20};

double contour_angle(std::size_t i) {
  const double quarter = std::numbers::pi / 2.0;
  for (std::size_t a = 0; a < 4; ++a) {
    const std::size_t lo = kAnchorIndex[a];
    const std::size_t hi = a + 1 < 4 ? kAnchorIndex[a + 1] : kLipLandmarks;
    if (i >= lo && i < hi) {
      return quarter * (static_cast<double>(a) + static_cast<double>(i - lo) / static_cast<double>(hi - lo));
    }
  }
  return 0.0;
}

void check_shape(const MouthShape& s) {
  if (!(s.width > 0.0) || !(s.height > 0.0) || !std::isfinite(s.width) || !std::isfinite(s.height)) {
    throw ConfigError("mouth shape needs positive width and height");
  }
}

}  // namespace

std::vector<Point2> lip_contour(const MouthShape& shape) {
  check_shape(shape);
  std::vector<Point2> pts(kLipLandmarks);
  for (std::size_t i = 0; i < kLipLandmarks; ++i) {
    const double th = contour_angle(i);
    pts[i] = {0.5 * shape.width * std::cos(th), 0.5 * shape.height * std::sin(th)};
  }
  // Exact extrema, free of cos/sin rounding.
  pts[0] = {0.5 * shape.width, 0.0};
  pts[7] = {0.0, 0.5 * shape.height};
  pts[13] = {-0.5 * shape.width, 0.0};
  pts[20] = {0.0, -0.5 * shape.height};
  return pts;
}

std::vector<MouthShape> mouth_track(std::span<const MouthShape> targets) {
  std::vector<MouthShape> out(targets.size());
  MouthShape from{};
  std::size_t since_change = kTransitionFrames;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    check_shape(targets[t]);
    if (t > 0 && targets[t] != targets[t - 1]) {
      from = out[t - 1];
      since_change = 0;
    }
    if (since_change < kTransitionFrames) {
      const double a = static_cast<double>(since_change + 1) / static_cast<double>(kTransitionFrames + 1);
      out[t] = {from.width + a * (targets[t].width - from.width), from.height + a * (targets[t].height - from.height)};
      ++since_change;
    } else {
      out[t] = targets[t];
    }
  }
  return out;
}

LandmarkSequence render_landmarks(const MouthShape& shape, std::size_t T) {
  const std::vector<MouthShape> targets(T, shape);
  return render_landmarks(targets);
}

LandmarkSequence render_landmarks(std::span<const MouthShape> targets) {
  const auto track = mouth_track(targets);
  std::vector<double> coords;
  coords.reserve(track.size() * kLipLandmarks * 2);
  for (const auto& s : track) {
    for (const auto& p : lip_contour(s)) {
      coords.push_back(p.x);
      coords.push_back(p.y);
    }
  }
  return LandmarkSequence(std::move(coords), LandmarkRole::real);
}

std::vector<double> rasterize_contour(std::span<const Point2> contour) {
  constexpr int kSub = 4;
  const double c = kFrameSide / 2.0;
  const std::size_t n = contour.size();
  std::vector<double> px(kFramePixels, kSkinIntensity);
  for (std::size_t r = 0; r < kFrameSide; ++r) {
    for (std::size_t col = 0; col < kFrameSide; ++col) {
      int inside = 0;
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double ix = static_cast<double>(col) + (sx + 0.5) / kSub;
          const double iy = static_cast<double>(r) + (sy + 0.5) / kSub;
          const double x = (ix - c) / kPixelsPerUnit;
          const double y = (c - iy) / kPixelsPerUnit;
          bool in = true;
          for (std::size_t i = 0; i < n && in; ++i) {
            const Point2& a = contour[i];
            const Point2& b = contour[(i + 1) % n];
            in = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) >= 0.0;
          }
          inside += in ? 1 : 0;
        }
      }
      const double frac = inside / static_cast<double>(kSub * kSub);
      px[r * kFrameSide + col] = kSkinIntensity + frac * (kMouthIntensity - kSkinIntensity);
    }
  }
  return px;
}

FrameSequence rasterize(const LandmarkSequence& seq) {
  std::vector<double> px;
  px.reserve(seq.frames() * kFramePixels);
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    const auto frame = rasterize_contour(seq.frame(t));
    px.insert(px.end(), frame.begin(), frame.end());
  }
  return FrameSequence(seq.frames(), std::move(px));
}

LandmarkSequence landmarks_from_frames(const FrameSequence& frames) {
  const double c = kFrameSide / 2.0;
  const double span = kMouthIntensity - kSkinIntensity;
  std::vector<double> coords;
  coords.reserve(frames.T * kLipLandmarks * 2);
  for (std::size_t t = 0; t < frames.T; ++t) {
    const auto f = frames.frame(t);
    double m0 = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t r = 0; r < kFrameSide; ++r) {
      for (std::size_t col = 0; col < kFrameSide; ++col) {
        const double w = std::clamp((f[r * kFrameSide + col] - kSkinIntensity) / span, 0.0, 1.0);
        m0 += w;
        mx += w * ((col + 0.5 - c) / kPixelsPerUnit);
        my += w * ((c - (r + 0.5)) / kPixelsPerUnit);
      }
    }
    double semi_x = 1e-3, semi_y = 1e-3;
    if (m0 > 1e-9) {
      mx /= m0;
      my /= m0;
      double vxx = 0.0, vyy = 0.0;
      for (std::size_t r = 0; r < kFrameSide; ++r) {
        for (std::size_t col = 0; col < kFrameSide; ++col) {
          const double w = std::clamp((f[r * kFrameSide + col] - kSkinIntensity) / span, 0.0, 1.0);
          const double x = (col + 0.5 - c) / kPixelsPerUnit - mx;
          const double y = (c - (r + 0.5)) / kPixelsPerUnit - my;
          vxx += w * x * x;
          vyy += w * y * y;
        }
      }
      // A filled ellipse with semi-axis a has second moment a^2/4.
      semi_x = std::max(1e-3, 2.0 * std::sqrt(vxx / m0));
      semi_y = std::max(1e-3, 2.0 * std::sqrt(vyy / m0));
    } else {
      mx = my = 0.0;
    }
    for (const auto& p : lip_contour({2.0 * semi_x, 2.0 * semi_y})) {
      coords.push_back(p.x + mx);
      coords.push_back(p.y + my);
    }
  }
  return LandmarkSequence(std::move(coords), LandmarkRole::generated);
}

}  // namespace pvlab
