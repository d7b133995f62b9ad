// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "pvlab/diffcore/matrix.hpp"

namespace pvlab {

// Matched pairs (xs[i], ys[i]) and mismatched pairs (xs[i], ys[shuffle[i]]),
// where shuffle is a derangement so no negative reuses its own partner.
struct PairBatch {
  Matrix xs;
  Matrix ys;
  std::vector<std::size_t> shuffle;

  std::size_t size() const { return xs.rows; }
  Matrix negative_ys() const;
};

std::vector<std::size_t> random_derangement(std::size_t n, std::mt19937_64& rng);
std::vector<std::size_t> random_derangement(std::size_t n, std::uint64_t seed);
bool is_derangement(const std::vector<std::size_t>& perm);

// Throws ConfigError when fewer than two rows (no derangement exists).
PairBatch make_negative_pairs(Matrix xs, Matrix ys, std::uint64_t seed);

}  // namespace pvlab
