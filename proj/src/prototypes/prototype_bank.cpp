// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/prototypes/prototype_bank.hpp"

#include <cmath>
#include <limits>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"

namespace pvlab {

std::string to_string(Modality m) { return m == Modality::phoneme ? "phoneme" : "viseme"; }

Modality modality_from_string(const std::string& s) {
  if (s == "phoneme") return Modality::phoneme;
  if (s == "viseme") return Modality::viseme;
  throw ConfigError("unknown modality '" + s + "'");
}

PrototypeBank::PrototypeBank(Matrix centroids, Modality modality, double tau, int last_refit_epoch)
    : centroids_(std::move(centroids)), modality_(modality), tau_(tau), last_refit_epoch_(last_refit_epoch) {
  if (centroids_.rows < 2) throw ConfigError("PrototypeBank needs K >= 2");
  if (centroids_.cols == 0) throw ConfigError("PrototypeBank needs d >= 1");
  if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw ConfigError("PrototypeBank tau must be finite and > 0");
  if (!all_finite(centroids_.data)) throw NumericalError("PrototypeBank centroids must be finite");
  for (std::size_t a = 0; a < k(); ++a)
    for (std::size_t b = a + 1; b < k(); ++b)
      if (squared_distance(centroids_.row(a), centroids_.row(b)) == 0.0) {
        throw ConfigError("PrototypeBank centroids " + std::to_string(a) + " and " + std::to_string(b) +
                          " coincide");
      }
}

void PrototypeBank::save(const std::filesystem::path& stem) const {
  nlohmann::json meta;
  meta["format"] = "pvlab.prototype_bank";
  meta["K"] = k();
  meta["d"] = dim();
  meta["tau"] = tau_;
  meta["modality"] = to_string(modality_);
  meta["last_refit_epoch"] = last_refit_epoch_;
  io::write_f64(io::bin_path(stem), centroids_.data);
  io::write_json(io::json_path(stem), meta);
}

PrototypeBank PrototypeBank::load(const std::filesystem::path& stem) {
  const auto meta = io::read_json(io::json_path(stem));
  try {
    const auto K = meta.at("K").get<std::size_t>();
    const auto d = meta.at("d").get<std::size_t>();
    auto values = io::read_f64(io::bin_path(stem));
    return PrototypeBank(Matrix(K, d, std::move(values)), modality_from_string(meta.at("modality")),
                         meta.at("tau").get<double>(), meta.value("last_refit_epoch", 0));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad prototype bank header " + stem.string() + ": " + e.what());
  }
}

namespace {

void check_query(std::span<const double> z, const PrototypeBank& bank) {
  if (z.size() != bank.dim()) throw DimensionError(dimension_message("prototype query width", bank.dim(), z.size()));
  if (!all_finite(z)) throw NumericalError("prototype query has non-finite entries");
}

}  // namespace

std::size_t hard_assign(std::span<const double> z, const PrototypeBank& bank) {
  check_query(z, bank);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bank.k(); ++k) {
    const double d = squared_distance(z, bank.centroids().row(k));
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

std::vector<std::size_t> hard_assign_rows(const Matrix& z, const PrototypeBank& bank) {
  std::vector<std::size_t> out(z.rows);
  for (std::size_t r = 0; r < z.rows; ++r) out[r] = hard_assign(z.row(r), bank);
  return out;
}

std::vector<double> soft_assign(std::span<const double> z, const PrototypeBank& bank, double tau) {
  if (!(tau > 0.0)) throw ConfigError("soft_assign: tau must be > 0");
  check_query(z, bank);
  const double inv = 1.0 / (tau * tau);
  std::vector<double> a(bank.k());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bank.k(); ++k) {
    a[k] = -squared_distance(z, bank.centroids().row(k)) * inv;
    mx = std::max(mx, a[k]);
  }
  double s = 0.0;
  for (double& v : a) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : a) v /= s;
  return a;
}

Matrix soft_assign_rows(const Matrix& z, const PrototypeBank& bank, double tau) {
  Matrix out(z.rows, bank.k());
  for (std::size_t r = 0; r < z.rows; ++r) {
    const auto v = soft_assign(z.row(r), bank, tau);
    std::copy(v.begin(), v.end(), out.row(r).begin());
  }
  return out;
}

Assignment assign(std::span<const double> z, const PrototypeBank& bank) {
  return Assignment{hard_assign(z, bank), soft_assign(z, bank)};
}

Node soft_assign(Tape& tape, Node z, const PrototypeBank& bank, double tau) {
  return soft_assign(tape, z, tape.constant(bank.centroids()), tau);
}

Node soft_assign(Tape& tape, Node z, Node centroids, double tau) {
  if (!(tau > 0.0)) throw ConfigError("soft_assign: tau must be > 0");
  Node d = tape.sq_dist(z, centroids);
  return tape.softmax_rows(tape.scale(d, -1.0 / (tau * tau)));
}

}  // namespace pvlab
