// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pvlab/diffcore/matrix.hpp"
#include "pvlab/diffcore/tape.hpp"

namespace pvlab {

enum class Modality { phoneme, viseme };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

// K prototype vectors for one modality plus the soft-assignment temperature.
// Invariants (checked on construction): K >= 2, all centroids finite and
// pairwise distinct, tau > 0.
class PrototypeBank {
 public:
  PrototypeBank(Matrix centroids, Modality modality, double tau, int last_refit_epoch = 0);

  const Matrix& centroids() const { return centroids_; }
  std::size_t k() const { return centroids_.rows; }
  std::size_t dim() const { return centroids_.cols; }
  Modality modality() const { return modality_; }
  double tau() const { return tau_; }
  int last_refit_epoch() const { return last_refit_epoch_; }

  void save(const std::filesystem::path& stem) const;
  static PrototypeBank load(const std::filesystem::path& stem);

 private:
  Matrix centroids_;
  Modality modality_;
  double tau_;
  int last_refit_epoch_;
};

struct Assignment {
  std::size_t hard = 0;
  std::vector<double> soft;
};

// argmin_k ||z - c_k||^2, ties to the lowest index.
std::size_t hard_assign(std::span<const double> z, const PrototypeBank& bank);
std::vector<std::size_t> hard_assign_rows(const Matrix& z, const PrototypeBank& bank);

// softmax_k(-||z - c_k||^2 / tau^2).
std::vector<double> soft_assign(std::span<const double> z, const PrototypeBank& bank, double tau);
inline std::vector<double> soft_assign(std::span<const double> z, const PrototypeBank& bank) {
  return soft_assign(z, bank, bank.tau());
}
Matrix soft_assign_rows(const Matrix& z, const PrototypeBank& bank, double tau);

Assignment assign(std::span<const double> z, const PrototypeBank& bank);

// Batched soft assignment on the tape: z is B x d. The bank's centroids enter
// as constants; use the Node overload to differentiate through centroids too.
Node soft_assign(Tape& tape, Node z, const PrototypeBank& bank, double tau);
Node soft_assign(Tape& tape, Node z, Node centroids, double tau);

}  // namespace pvlab
