// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pvlab/generator/frames.hpp"
#include "pvlab/metrics/landmarks.hpp"
#include "pvlab/synthcorpus/universe.hpp"

namespace pvlab {

inline constexpr std::size_t kTransitionFrames = 3;
inline constexpr double kPixelsPerUnit = 3.0;
inline constexpr double kMouthIntensity = 0.9;
inline constexpr double kSkinIntensity = 0.2;

// 26 points on the ellipse with semi-axes width/2, height/2. Anchors sit at
// the extrema (right 0, top 7, left 13, bottom 20).
std::vector<Point2> lip_contour(const MouthShape& shape);

// Per-frame mouth shapes: a change of target blends linearly over
// kTransitionFrames frames, then holds the target exactly.
std::vector<MouthShape> mouth_track(std::span<const MouthShape> targets);

LandmarkSequence render_landmarks(const MouthShape& shape, std::size_t T);
LandmarkSequence render_landmarks(std::span<const MouthShape> targets);

// 16x16 raster of one closed lip contour (4x4 supersampling).
std::vector<double> rasterize_contour(std::span<const Point2> contour);
FrameSequence rasterize(const LandmarkSequence& seq);

// Inverse of the renderer: mouth contour recovered from image moments of
// each frame. Used to read landmarks off generated frames.
LandmarkSequence landmarks_from_frames(const FrameSequence& frames);

}  // namespace pvlab
