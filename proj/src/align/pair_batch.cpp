// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/align/pair_batch.hpp"

#include <algorithm>
#include <numeric>

#include "pvlab/common/errors.hpp"

namespace pvlab {

Matrix PairBatch::negative_ys() const {
  Matrix out(ys.rows, ys.cols);
  for (std::size_t i = 0; i < shuffle.size(); ++i) {
    std::copy(ys.row(shuffle[i]).begin(), ys.row(shuffle[i]).end(), out.row(i).begin());
  }
  return out;
}

std::vector<std::size_t> random_derangement(std::size_t n, std::mt19937_64& rng) {
  if (n < 2) throw ConfigError("derangement needs at least 2 elements, got " + std::to_string(n));
  std::vector<std::size_t> p(n);
  // Rejection sampling: uniform over derangements, ~e shuffles on average.
  do {
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
  } while (!is_derangement(p));
  return p;
}

std::vector<std::size_t> random_derangement(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_derangement(n, rng);
}

bool is_derangement(const std::vector<std::size_t>& perm) {
  for (std::size_t i = 0; i < perm.size(); ++i)
    if (perm[i] == i) return false;
  return true;
}

PairBatch make_negative_pairs(Matrix xs, Matrix ys, std::uint64_t seed) {
  if (xs.rows != ys.rows) throw DimensionError(dimension_message("pair batch rows", xs.rows, ys.rows));
  if (xs.rows < 2) throw ConfigError("pair batch needs B >= 2 for a derangement");
  auto shuffle = random_derangement(xs.rows, seed);
  return PairBatch{std::move(xs), std::move(ys), std::move(shuffle)};
}

}  // namespace pvlab
