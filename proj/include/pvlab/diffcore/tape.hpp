// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "pvlab/diffcore/matrix.hpp"
#include "pvlab/diffcore/parameter_block.hpp"

namespace pvlab {

// Handle to a value recorded on a Tape.
struct Node {
  std::uint32_t id = 0;
};

// Reverse-mode recorder. Every op appends one node whose inputs already exist,
// so insertion order is a topological order and backward() is a single reverse
// sweep.
//
// Binary elementwise ops accept a right operand that is the same shape as the
// left, a 1 x cols row, a rows x 1 column, or a 1 x 1 scalar.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Node constant(Matrix value);
  Node variable(Matrix value);
  // Leaf bound to a tensor slice of `block`; rank-1 tensors become 1 x n rows.
  Node parameter(const ParameterBlock& block, std::string_view tensor);

  // x: B x in, w: out x in, b: 1 x out  ->  B x out
  Node linear(Node x, Node w, Node b);
  Node linear(Node x, Node w);

  Node add(Node a, Node b);
  Node sub(Node a, Node b);
  Node mul(Node a, Node b);
  Node scale(Node a, double c);
  Node add_scalar(Node a, double c);

  Node tanh(Node a);
  Node relu(Node a);
  Node sigmoid(Node a);
  Node log_sigmoid(Node a);
  Node exp(Node a);
  Node log(Node a);
  Node abs(Node a);
  Node square(Node a);
  Node clamp(Node a, double lo, double hi);

  Node softmax_rows(Node a);
  // Softmax over entries where mask != 0; masked-out entries are exactly 0.
  Node masked_softmax_rows(Node a, const Matrix& mask);
  // log of the masked softmax on selected entries, 0 elsewhere.
  Node masked_log_softmax_rows(Node a, const Matrix& mask);

  Node sum(Node a);
  Node mean(Node a);
  Node row_sum(Node a);

  Node concat_cols(Node a, Node b);
  Node gather_rows(Node a, std::vector<std::size_t> index);
  // Inverse of gather: row i of `a` lands in row index[i] of a total_rows x cols result.
  Node scatter_rows(Node a, std::vector<std::size_t> index, std::size_t total_rows);
  Node column(Node a, std::size_t j);
  // Pairwise squared Euclidean distances: x B x d, c K x d -> B x K.
  Node sq_dist(Node x, Node c);

  // References stay valid for the lifetime of the tape.
  const Matrix& value(Node n) const;
  double scalar(Node n) const;
  bool requires_grad(Node n) const;
  std::size_t size() const { return nodes_.size(); }

  // Loss must be 1 x 1. May be called more than once; each call recomputes
  // all gradients from scratch.
  void backward(Node loss);
  const Matrix& grad(Node n) const;
  // Gradient aligned with block.values(); zeros for tensors not on the tape.
  std::vector<double> gradient(const ParameterBlock& block) const;
  // Nodes whose backward rule ran in the last backward() call.
  std::size_t backward_visits() const { return backward_visits_; }

 private:
  using Backward = std::function<void(Tape&, std::uint32_t)>;

  struct Entry {
    Matrix value;
    Matrix grad;
    std::vector<std::uint32_t> inputs;
    Backward backward;
    bool needs_grad = false;
    const ParameterBlock* block = nullptr;
    std::size_t block_offset = 0;
  };

  Node push(Matrix value, std::vector<std::uint32_t> inputs, Backward fn);
  Node unary(Node a, const std::function<double(double)>& f,
             const std::function<double(double, double)>& df);
  Entry& at(Node n);
  const Entry& at(Node n) const;
  Matrix& grad_of(std::uint32_t id) { return nodes_[id].grad; }
  bool wants(std::uint32_t id) const { return nodes_[id].needs_grad; }

  std::deque<Entry> nodes_;
  std::size_t backward_visits_ = 0;
  bool has_grads_ = false;
};

}  // namespace pvlab
