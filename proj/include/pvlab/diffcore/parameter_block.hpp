// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pvlab {

// Flat parameter storage for one trainable network. Tensors are named views
// into `values`; gradients produced by the tape are aligned with this layout.
class ParameterBlock {
 public:
  struct Tensor {
    std::string name;
    std::vector<std::size_t> dims;
    std::size_t offset = 0;

    std::size_t size() const;
  };

  ParameterBlock() = default;

  // Glorot-uniform init for rank-2 tensors (dims = {fan_out, fan_in});
  // rank-1 tensors (biases) start at zero.
  static ParameterBlock glorot(
      const std::vector<std::pair<std::string, std::vector<std::size_t>>>& shapes,
      std::uint64_t seed);

  static ParameterBlock from_values(
      const std::vector<std::pair<std::string, std::vector<std::size_t>>>& shapes,
      std::vector<double> values, std::uint64_t seed);

  std::size_t size() const { return values_.size(); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  const Tensor& tensor(std::string_view name) const;
  std::span<double> view(std::string_view name);
  std::span<const double> view(std::string_view name) const;

  void assign(std::span<const double> values);
  void fill(double v);

  // "<stem>.bin" (little-endian f64) + "<stem>.json" (shapes, seed).
  void save(const std::filesystem::path& stem) const;
  static ParameterBlock load(const std::filesystem::path& stem);

  bool operator==(const ParameterBlock& other) const {
    return values_ == other.values_ && seed_ == other.seed_ && same_layout(other);
  }
  bool same_layout(const ParameterBlock& other) const;

 private:
  std::vector<double> values_;
  std::vector<Tensor> tensors_;
  std::uint64_t seed_ = 0;
};

}  // namespace pvlab
