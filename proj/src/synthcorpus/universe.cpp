// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/synthcorpus/universe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/hash.hpp"

namespace pvlab {
namespace {

Matrix draw_separated(std::size_t K, std::size_t d, double min_dist, double spread, std::size_t max_draws,
                      std::mt19937_64& rng, const char* what) {
  std::normal_distribution<double> normal(0.0, spread);
  Matrix out(K, d);
  for (std::size_t k = 0; k < K; ++k) {
    bool placed = false;
    for (std::size_t draw = 0; draw < max_draws && !placed; ++draw) {
      for (double& x : out.row(k)) x = normal(rng);
      placed = true;
      for (std::size_t j = 0; j < k && placed; ++j) {
        const double dist = std::sqrt(squared_distance(out.row(k), out.row(j)));
        placed = dist >= min_dist && dist > 0.0;
      }
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "cannot place " << what << " archetype " << k << " at distance >= " << min_dist << " within "
          << max_draws << " draws; lower K_true or sigma";
      throw ConfigError(msg.str());
    }
  }
  return out;
}

}  // namespace

double min_pairwise_distance(const Matrix& points) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.rows; ++i) {
    for (std::size_t j = i + 1; j < points.rows; ++j) {
      best = std::min(best, std::sqrt(squared_distance(points.row(i), points.row(j))));
    }
  }
  return best;
}

bool is_bijection(const std::vector<std::size_t>& map) {
  std::vector<bool> hit(map.size(), false);
  for (std::size_t v : map) {
    if (v >= map.size() || hit[v]) return false;
    hit[v] = true;
  }
  return true;
}

void Universe::validate() const {
  const std::size_t K = size();
  if (K < 2) throw ConfigError("universe needs K_true >= 2");
  if (phoneme_archetypes.rows != K || viseme_archetypes.rows != K || mouths.size() != K) {
    throw DimensionError("universe tables disagree on K_true");
  }
  if (!is_bijection(correspondence)) throw ConfigError("universe correspondence is not a bijection");
  for (const auto& m : mouths) {
    if (!(m.width > 0.0) || !(m.height > 0.0)) throw ConfigError("universe mouth shapes must be positive");
  }
}

Universe make_universe(std::size_t K_true, std::size_t d_p, std::size_t d_v, double sigma, std::uint64_t seed,
                       const UniverseOptions& opts) {
  if (K_true < 2) throw ConfigError("make_universe: K_true must be >= 2, got " + std::to_string(K_true));
  if (d_p == 0 || d_v == 0) throw ConfigError("make_universe: feature dimensions must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("make_universe: sigma must be >= 0");
  if (!(opts.spread > 0.0)) throw ConfigError("make_universe: spread must be > 0");

  Universe u;
  u.sigma = sigma;
  u.spread = opts.spread;
  u.seed = seed;
  std::mt19937_64 rng(mix_seed(seed, 0x756e6976));
  u.phoneme_archetypes = draw_separated(K_true, d_p, 6.0 * sigma, opts.spread, opts.max_draws, rng, "phoneme");
  u.viseme_archetypes = draw_separated(K_true, d_v, 6.0 * sigma, opts.spread, opts.max_draws, rng, "viseme");

  u.correspondence.resize(K_true);
  std::iota(u.correspondence.begin(), u.correspondence.end(), std::size_t{0});
  std::shuffle(u.correspondence.begin(), u.correspondence.end(), rng);

  // Mouth shapes must stay distinguishable after rasterization.
  std::uniform_real_distribution<double> width(1.2, 3.2), height(0.3, 1.8);
  u.mouths.resize(K_true);
  for (std::size_t k = 0; k < K_true; ++k) {
    bool placed = false;
    for (std::size_t draw = 0; draw < opts.max_draws && !placed; ++draw) {
      u.mouths[k] = {width(rng), height(rng)};
      placed = std::none_of(u.mouths.begin(), u.mouths.begin() + static_cast<std::ptrdiff_t>(k), [&](const MouthShape& m) {
        return std::hypot(m.width - u.mouths[k].width, m.height - u.mouths[k].height) < 0.25;
      });
    }
    if (!placed) throw ConfigError("make_universe: cannot draw distinct mouth shapes; lower K_true");
  }
  return u;
}

}  // namespace pvlab
