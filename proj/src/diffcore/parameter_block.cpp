// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/diffcore/parameter_block.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"

namespace pvlab {

std::size_t ParameterBlock::Tensor::size() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

std::vector<ParameterBlock::Tensor> layout(
    const std::vector<std::pair<std::string, std::vector<std::size_t>>>& shapes,
    std::size_t* total) {
  std::vector<ParameterBlock::Tensor> out;
  std::size_t offset = 0;
  for (const auto& [name, dims] : shapes) {
    ParameterBlock::Tensor t{name, dims, offset};
    for (const auto& prev : out) {
      if (prev.name == name) throw ConfigError("duplicate tensor name: " + name);
    }
    offset += t.size();
    out.push_back(std::move(t));
  }
  *total = offset;
  return out;
}

}  // namespace

ParameterBlock ParameterBlock::glorot(
    const std::vector<std::pair<std::string, std::vector<std::size_t>>>& shapes,
    std::uint64_t seed) {
  ParameterBlock block;
  std::size_t total = 0;
  block.tensors_ = layout(shapes, &total);
  block.values_.assign(total, 0.0);
  block.seed_ = seed;
  std::mt19937_64 rng(seed);
  for (const auto& t : block.tensors_) {
    if (t.dims.size() != 2) continue;
    const double a = std::sqrt(6.0 / static_cast<double>(t.dims[0] + t.dims[1]));
    std::uniform_real_distribution<double> dist(-a, a);
    for (std::size_t i = 0; i < t.size(); ++i) block.values_[t.offset + i] = dist(rng);
  }
  return block;
}

ParameterBlock ParameterBlock::from_values(
    const std::vector<std::pair<std::string, std::vector<std::size_t>>>& shapes,
    std::vector<double> values, std::uint64_t seed) {
  ParameterBlock block;
  std::size_t total = 0;
  block.tensors_ = layout(shapes, &total);
  if (values.size() != total) {
    throw DimensionError(dimension_message("parameter count", total, values.size()));
  }
  block.values_ = std::move(values);
  block.seed_ = seed;
  return block;
}

const ParameterBlock::Tensor& ParameterBlock::tensor(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw ConfigError("no tensor named '" + std::string(name) + "'");
}

std::span<double> ParameterBlock::view(std::string_view name) {
  const auto& t = tensor(name);
  return std::span<double>(values_).subspan(t.offset, t.size());
}

std::span<const double> ParameterBlock::view(std::string_view name) const {
  const auto& t = tensor(name);
  return std::span<const double>(values_).subspan(t.offset, t.size());
}

void ParameterBlock::assign(std::span<const double> values) {
  if (values.size() != values_.size()) {
    throw DimensionError(dimension_message("parameter count", values_.size(), values.size()));
  }
  std::copy(values.begin(), values.end(), values_.begin());
}

void ParameterBlock::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool ParameterBlock::same_layout(const ParameterBlock& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name != other.tensors_[i].name || tensors_[i].dims != other.tensors_[i].dims) {
      return false;
    }
  }
  return true;
}

void ParameterBlock::save(const std::filesystem::path& stem) const {
  nlohmann::json meta;
  meta["format"] = "pvlab.parameter_block";
  meta["count"] = values_.size();
  meta["seed"] = seed_;
  meta["shapes"] = nlohmann::json::array();
  for (const auto& t : tensors_) meta["shapes"].push_back({{"name", t.name}, {"dims", t.dims}});
  io::write_f64(io::bin_path(stem), values_);
  io::write_json(io::json_path(stem), meta);
}

ParameterBlock ParameterBlock::load(const std::filesystem::path& stem) {
  const auto meta = io::read_json(io::json_path(stem));
  std::vector<std::pair<std::string, std::vector<std::size_t>>> shapes;
  try {
    for (const auto& s : meta.at("shapes")) {
      shapes.emplace_back(s.at("name").get<std::string>(), s.at("dims").get<std::vector<std::size_t>>());
    }
    auto values = io::read_f64(io::bin_path(stem));
    if (values.size() != meta.at("count").get<std::size_t>()) {
      throw DimensionError(dimension_message("parameter file " + stem.string(),
                                             meta.at("count").get<std::size_t>(), values.size()));
    }
    return from_values(shapes, std::move(values), meta.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad parameter sidecar " + stem.string() + ": " + e.what());
  }
}

}  // namespace pvlab
