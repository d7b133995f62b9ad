// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pvlab/diffcore/matrix.hpp"
#include "pvlab/prototypes/prototype_bank.hpp"

namespace pvlab {

inline constexpr int kDefaultRefitPeriod = 10;

struct LloydOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // max centroid shift
};

struct LloydReport {
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t reseeded = 0;
  // Within-cluster sum of squares at the start of each iteration (after the
  // assignment step). Non-increasing.
  std::vector<double> wcss;
};

double within_cluster_ss(const Matrix& x, const Matrix& centroids);

// Greedy K-means++ seeding (2 + ln K candidates per draw).
Matrix kmeanspp_seed(const Matrix& x, std::size_t k, std::uint64_t seed);

// Lloyd iterations in place. Empty clusters are re-seeded at the point
// farthest from its assigned centroid.
LloydReport lloyd(const Matrix& x, Matrix& centroids, const LloydOptions& options = {});

PrototypeBank kmeanspp_init(const Matrix& features, std::size_t k, std::uint64_t seed,
                            Modality modality, double tau, LloydReport* report = nullptr,
                            const LloydOptions& options = {});

// Lloyd from the bank's current centroids. An empty feature set leaves the
// bank unchanged (with a warning) apart from last_refit_epoch.
PrototypeBank refit(const PrototypeBank& bank, const Matrix& features, int current_epoch,
                    LloydReport* report = nullptr, const LloydOptions& options = {});

inline bool refit_due(const PrototypeBank& bank, int current_epoch, int period = kDefaultRefitPeriod) {
  return current_epoch - bank.last_refit_epoch() >= period;
}

}  // namespace pvlab
