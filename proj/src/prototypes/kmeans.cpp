// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/prototypes/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/log.hpp"

namespace pvlab {
namespace {

struct Nearest {
  std::size_t index;
  double dist;
};

Nearest nearest(std::span<const double> p, const Matrix& c) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t k = 0; k < c.rows; ++k) {
    const double d = squared_distance(p, c.row(k));
    if (d < best.dist) best = {k, d};
  }
  return best;
}

std::size_t sample_weighted(const std::vector<double>& w, double total, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, total);
  const double r = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (r < acc) return i;
  }
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i] > 0) return i;
  return 0;
}

}  // namespace

double within_cluster_ss(const Matrix& x, const Matrix& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) s += nearest(x.row(i), centroids).dist;
  return s;
}

Matrix kmeanspp_seed(const Matrix& x, std::size_t k, std::uint64_t seed) {
  if (x.rows < k) throw ConfigError("kmeans++: need N >= K (N=" + std::to_string(x.rows) + ", K=" + std::to_string(k) + ")");
  if (k == 0) throw ConfigError("kmeans++: K must be >= 1");
  if (!all_finite(x.data)) throw NumericalError("kmeans++: non-finite features");
  std::mt19937_64 rng(seed);
  const std::size_t n = x.rows;
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));

  Matrix c(k, x.cols);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t idx = first(rng);
  std::copy(x.row(idx).begin(), x.row(idx).end(), c.row(0).begin());

  std::vector<double> d2(n);
  double potential = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_distance(x.row(i), c.row(0));
    potential += d2[i];
  }

  for (std::size_t j = 1; j < k; ++j) {
    std::size_t best_idx = n;
    double best_pot = std::numeric_limits<double>::infinity();
    if (potential <= 0.0) {
      // Every point coincides with a chosen center; fall back to the first
      // point not yet used so centers stay distinct when possible.
      for (std::size_t i = 0; i < n && best_idx == n; ++i) {
        bool used = false;
        for (std::size_t m = 0; m < j; ++m) used = used || squared_distance(x.row(i), c.row(m)) == 0.0;
        if (!used) best_idx = i;
      }
      if (best_idx == n) best_idx = 0;
    } else {
      for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t cand = sample_weighted(d2, potential, rng);
        double pot = 0.0;
        for (std::size_t i = 0; i < n; ++i) pot += std::min(d2[i], squared_distance(x.row(i), x.row(cand)));
        if (pot < best_pot) {
          best_pot = pot;
          best_idx = cand;
        }
      }
    }
    std::copy(x.row(best_idx).begin(), x.row(best_idx).end(), c.row(j).begin());
    potential = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.row(i), c.row(j)));
      potential += d2[i];
    }
  }
  return c;
}

LloydReport lloyd(const Matrix& x, Matrix& centroids, const LloydOptions& options) {
  if (x.cols != centroids.cols) throw DimensionError(dimension_message("lloyd feature width", centroids.cols, x.cols));
  LloydReport report;
  const std::size_t n = x.rows, k = centroids.rows, d = x.cols;
  std::vector<std::size_t> label(n);
  std::vector<double> dist(n);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Nearest nb = nearest(x.row(i), centroids);
      label[i] = nb.index;
      dist[i] = nb.dist;
      wcss += nb.dist;
    }
    report.wcss.push_back(wcss);

    Matrix next(k, d, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[label[i]];
      auto row = next.row(label[i]);
      for (std::size_t j = 0; j < d; ++j) row[j] += x(i, j);
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] > 0) {
        for (double& v : next.row(c)) v /= static_cast<double>(count[c]);
        continue;
      }
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      if (far == n) throw ConfigError("lloyd: cannot repair empty cluster");
      taken[far] = true;
      dist[far] = 0.0;
      std::copy(x.row(far).begin(), x.row(far).end(), next.row(c).begin());
      ++report.reseeded;
    }

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(squared_distance(next.row(c), centroids.row(c))));
    centroids = std::move(next);
    report.iterations = it + 1;
    if (shift < options.tolerance) {
      report.converged = true;
      break;
    }
  }
  return report;
}

PrototypeBank kmeanspp_init(const Matrix& features, std::size_t k, std::uint64_t seed,
                            Modality modality, double tau, LloydReport* report,
                            const LloydOptions& options) {
  Matrix c = kmeanspp_seed(features, k, seed);
  LloydReport r = lloyd(features, c, options);
  if (report) *report = std::move(r);
  return PrototypeBank(std::move(c), modality, tau, 0);
}

PrototypeBank refit(const PrototypeBank& bank, const Matrix& features, int current_epoch,
                    LloydReport* report, const LloydOptions& options) {
  if (features.rows == 0) {
    log::warn("refit: empty feature set, prototypes unchanged");
    return PrototypeBank(bank.centroids(), bank.modality(), bank.tau(), current_epoch);
  }
  if (!all_finite(features.data)) throw NumericalError("refit: non-finite features");
  Matrix c = bank.centroids();
  LloydReport r = lloyd(features, c, options);
  if (report) *report = std::move(r);
  return PrototypeBank(std::move(c), bank.modality(), bank.tau(), current_epoch);
}

}  // namespace pvlab
