// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "pvlab/metrics/landmarks.hpp"

namespace pvlab {

// Counter-clockwise hull without collinear points (Andrew's monotone chain).
std::vector<Point2> convex_hull(std::span<const Point2> points);
double polygon_area(std::span<const Point2> polygon);
// Zero for fewer than three non-collinear points.
double convex_hull_area(std::span<const Point2> points);

}  // namespace pvlab
