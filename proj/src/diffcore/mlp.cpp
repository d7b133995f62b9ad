// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/diffcore/mlp.hpp"

#include <cmath>

#include "pvlab/common/errors.hpp"

namespace pvlab {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + s + "'");
}

MLPSpec MLPSpec::dense(std::size_t in, std::size_t out) { return MLPSpec{{in, out}, {}}; }

MLPSpec MLPSpec::one_hidden(std::size_t in, std::size_t width, std::size_t out, Activation act) {
  return MLPSpec{{in, width, out}, {act}};
}

void MLPSpec::validate() const {
  if (widths.size() < 2) throw ConfigError("MLPSpec needs at least one layer");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("MLPSpec widths must be >= 1");
  }
  if (hidden.size() != widths.size() - 2) {
    throw ConfigError(dimension_message("MLPSpec hidden activation count", widths.size() - 2, hidden.size()));
  }
}

std::size_t MLPSpec::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) n += widths[l + 1] * widths[l] + widths[l + 1];
  return n;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> MLPSpec::shapes() const {
  validate();
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    out.push_back({"W" + std::to_string(l), {widths[l + 1], widths[l]}});
    out.push_back({"b" + std::to_string(l), {widths[l + 1]}});
  }
  return out;
}

namespace {

double activate(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0 ? x : 0.0;
  }
  return x;
}

void check_input(const ParameterBlock& params, const MLPSpec& spec, std::size_t width) {
  spec.validate();
  if (width != spec.input_width()) {
    throw DimensionError(dimension_message("mlp input width", spec.input_width(), width));
  }
  if (params.size() != spec.parameter_count()) {
    throw DimensionError(dimension_message("mlp parameter count", spec.parameter_count(), params.size()));
  }
}

Node record(Tape& tape, const ParameterBlock& params, const MLPSpec& spec, Node x, bool frozen) {
  check_input(params, spec, tape.value(x).cols);
  Node h = x;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const std::string ws = "W" + std::to_string(l), bs = "b" + std::to_string(l);
    Node w, b;
    if (frozen) {
      const auto& wt = params.tensor(ws);
      auto wv = params.view(ws);
      auto bv = params.view(bs);
      w = tape.constant(Matrix(wt.dims[0], wt.dims[1], std::vector<double>(wv.begin(), wv.end())));
      b = tape.constant(Matrix(1, bv.size(), std::vector<double>(bv.begin(), bv.end())));
    } else {
      w = tape.parameter(params, ws);
      b = tape.parameter(params, bs);
    }
    h = tape.linear(h, w, b);
    if (l + 1 < spec.layers()) {
      switch (spec.hidden[l]) {
        case Activation::identity: break;
        case Activation::tanh: h = tape.tanh(h); break;
        case Activation::relu: h = tape.relu(h); break;
      }
    }
  }
  return h;
}

}  // namespace

std::vector<double> mlp_forward(const ParameterBlock& params, const MLPSpec& spec,
                                std::span<const double> x) {
  Matrix out = mlp_forward(params, spec, Matrix::row_vector(x));
  return std::move(out.data);
}

Matrix mlp_forward(const ParameterBlock& params, const MLPSpec& spec, const Matrix& x) {
  check_input(params, spec, x.cols);
  Matrix h = x;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    auto w = params.view("W" + std::to_string(l));
    auto b = params.view("b" + std::to_string(l));
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    Matrix next(h.rows, out);
    for (std::size_t r = 0; r < h.rows; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        double s = dot(h.data.data() + r * in, w.data() + o * in, in);
        s += b[o];
        next(r, o) = (l + 1 < spec.layers()) ? activate(spec.hidden[l], s) : s;
      }
    }
    h = std::move(next);
  }
  return h;
}

Node mlp_forward(Tape& tape, const ParameterBlock& params, const MLPSpec& spec, Node x) {
  return record(tape, params, spec, x, false);
}

Node mlp_forward_frozen(Tape& tape, const ParameterBlock& params, const MLPSpec& spec, Node x) {
  return record(tape, params, spec, x, true);
}

Mlp Mlp::create(MLPSpec spec, std::uint64_t seed) {
  spec.validate();
  auto shapes = spec.shapes();
  return Mlp{std::move(spec), ParameterBlock::glorot(shapes, seed)};
}

}  // namespace pvlab
