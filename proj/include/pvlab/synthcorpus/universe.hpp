// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pvlab/diffcore/matrix.hpp"

namespace pvlab {

struct MouthShape {
  double width = 1.0;
  double height = 0.5;
  bool operator==(const MouthShape&) const = default;
};

// Shared articulatory inventory. Phoneme k is realized visually by viseme
// correspondence[k].
struct Universe {
  Matrix phoneme_archetypes;  // K_true x d_p
  Matrix viseme_archetypes;   // K_true x d_v
  std::vector<std::size_t> correspondence;
  std::vector<MouthShape> mouths;  // per viseme
  double sigma = 0.0;
  double spread = 1.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return correspondence.size(); }
  std::size_t phoneme_dim() const { return phoneme_archetypes.cols; }
  std::size_t viseme_dim() const { return viseme_archetypes.cols; }
  void validate() const;
};

struct UniverseOptions {
  double spread = 1.0;  // archetype coordinates ~ N(0, spread^2)
  std::size_t max_draws = 1000;
};

// Archetypes are rejection-sampled so every pairwise distance is >= 6 sigma.
Universe make_universe(std::size_t K_true, std::size_t d_p, std::size_t d_v, double sigma, std::uint64_t seed,
                       const UniverseOptions& opts = {});

double min_pairwise_distance(const Matrix& points);
bool is_bijection(const std::vector<std::size_t>& map);

}  // namespace pvlab
