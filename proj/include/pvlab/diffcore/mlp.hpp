// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pvlab/diffcore/matrix.hpp"
#include "pvlab/diffcore/parameter_block.hpp"
#include "pvlab/diffcore/tape.hpp"

namespace pvlab {

enum class Activation { identity, tanh, relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// widths = {input, hidden..., output}; one activation per hidden layer, the
// output layer is always identity. Tensors are named W0,b0,W1,b1,...
struct MLPSpec {
  std::vector<std::size_t> widths;
  std::vector<Activation> hidden;

  static MLPSpec dense(std::size_t in, std::size_t out);
  static MLPSpec one_hidden(std::size_t in, std::size_t width, std::size_t out,
                            Activation act = Activation::tanh);

  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  std::size_t layers() const { return widths.size() - 1; }
  std::size_t parameter_count() const;

  void validate() const;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> shapes() const;
};

// Straight evaluation without a tape.
std::vector<double> mlp_forward(const ParameterBlock& params, const MLPSpec& spec,
                                std::span<const double> x);
Matrix mlp_forward(const ParameterBlock& params, const MLPSpec& spec, const Matrix& x);

// Records the forward pass; parameters become tape leaves bound to `params`.
Node mlp_forward(Tape& tape, const ParameterBlock& params, const MLPSpec& spec, Node x);
// Same, but parameters enter as constants (frozen networks).
Node mlp_forward_frozen(Tape& tape, const ParameterBlock& params, const MLPSpec& spec, Node x);

struct Mlp {
  MLPSpec spec;
  ParameterBlock params;

  static Mlp create(MLPSpec spec, std::uint64_t seed);

  std::vector<double> operator()(std::span<const double> x) const {
    return mlp_forward(params, spec, x);
  }
  Matrix operator()(const Matrix& x) const { return mlp_forward(params, spec, x); }
  Node record(Tape& tape, Node x) const { return mlp_forward(tape, params, spec, x); }
};

}  // namespace pvlab
