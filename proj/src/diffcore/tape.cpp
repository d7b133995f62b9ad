// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/diffcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pvlab/common/errors.hpp"

namespace pvlab {
namespace {

enum class Bcast { same, row, col, scalar };

Bcast classify(const Matrix& a, const Matrix& b, const char* op) {
  if (a.same_shape(b)) return Bcast::same;
  if (b.rows == 1 && b.cols == 1) return Bcast::scalar;
  if (b.rows == 1 && b.cols == a.cols) return Bcast::row;
  if (b.cols == 1 && b.rows == a.rows) return Bcast::col;
  throw DimensionError(std::string(op) + ": cannot broadcast " + std::to_string(b.rows) + "x" +
                       std::to_string(b.cols) + " onto " + std::to_string(a.rows) + "x" +
                       std::to_string(a.cols));
}

inline std::size_t bidx(Bcast m, const Matrix& a, std::size_t r, std::size_t c) {
  switch (m) {
    case Bcast::same: return r * a.cols + c;
    case Bcast::row: return c;
    case Bcast::col: return r;
    case Bcast::scalar: return 0;
  }
  return 0;
}

void ensure_grad(Matrix& g, const Matrix& like) {
  if (!g.same_shape(like)) g = Matrix(like.rows, like.cols, 0.0);
}

double log_sigmoid_value(double x) {
  return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tape::Entry& Tape::at(Node n) {
  if (n.id >= nodes_.size()) throw std::out_of_range("tape node " + std::to_string(n.id));
  return nodes_[n.id];
}

const Tape::Entry& Tape::at(Node n) const {
  if (n.id >= nodes_.size()) throw std::out_of_range("tape node " + std::to_string(n.id));
  return nodes_[n.id];
}

Node Tape::push(Matrix value, std::vector<std::uint32_t> inputs, Backward fn) {
  Entry e;
  e.value = std::move(value);
  e.needs_grad = std::any_of(inputs.begin(), inputs.end(),
                             [this](std::uint32_t i) { return nodes_[i].needs_grad; });
  e.inputs = std::move(inputs);
  if (e.needs_grad) e.backward = std::move(fn);
  nodes_.push_back(std::move(e));
  return Node{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Node Tape::constant(Matrix value) { return push(std::move(value), {}, nullptr); }

Node Tape::variable(Matrix value) {
  Node n = push(std::move(value), {}, nullptr);
  nodes_[n.id].needs_grad = true;
  return n;
}

Node Tape::parameter(const ParameterBlock& block, std::string_view tensor) {
  const auto& t = block.tensor(tensor);
  std::size_t rows = 1, cols = t.size();
  if (t.dims.size() == 2) {
    rows = t.dims[0];
    cols = t.dims[1];
  }
  auto src = block.view(tensor);
  Node n = variable(Matrix(rows, cols, std::vector<double>(src.begin(), src.end())));
  nodes_[n.id].block = &block;
  nodes_[n.id].block_offset = t.offset;
  return n;
}

Node Tape::linear(Node x, Node w, Node b) {
  const Matrix& bv = at(b).value;
  const Matrix& wv = at(w).value;
  if (bv.rows != 1 || bv.cols != wv.rows) {
    throw DimensionError(dimension_message("linear bias width", wv.rows, bv.cols));
  }
  Node y = linear(x, w);
  return add(y, b);
}

Node Tape::linear(Node x, Node w) {
  const Matrix& xv = at(x).value;
  const Matrix& wv = at(w).value;
  if (xv.cols != wv.cols) {
    throw DimensionError(dimension_message("linear input width", wv.cols, xv.cols));
  }
  const std::size_t B = xv.rows, in = xv.cols, out = wv.rows;
  Matrix y(B, out);
  for (std::size_t r = 0; r < B; ++r) {
    const double* xr = xv.data.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = wv.data.data() + o * in;
      y.data[r * out + o] = dot(xr, wr, in);
    }
  }
  const std::uint32_t xi = x.id, wi = w.id;
  return push(std::move(y), {xi, wi}, [xi, wi](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& xv = t.nodes_[xi].value;
    const Matrix& wv = t.nodes_[wi].value;
    const std::size_t B = xv.rows, in = xv.cols, out = wv.rows;
    if (t.wants(xi)) {
      Matrix& gx = t.grad_of(xi);
      for (std::size_t r = 0; r < B; ++r) {
        double* gxr = gx.data.data() + r * in;
        for (std::size_t o = 0; o < out; ++o) {
          const double go = g.data[r * out + o];
          if (go == 0.0) continue;
          const double* wr = wv.data.data() + o * in;
          for (std::size_t i = 0; i < in; ++i) gxr[i] += go * wr[i];
        }
      }
    }
    if (t.wants(wi)) {
      Matrix& gw = t.grad_of(wi);
      for (std::size_t r = 0; r < B; ++r) {
        const double* xr = xv.data.data() + r * in;
        for (std::size_t o = 0; o < out; ++o) {
          const double go = g.data[r * out + o];
          if (go == 0.0) continue;
          double* gwr = gw.data.data() + o * in;
          for (std::size_t i = 0; i < in; ++i) gwr[i] += go * xr[i];
        }
      }
    }
  });
}

Node Tape::add(Node a, Node b) {
  const Matrix& av = at(a).value;
  const Matrix& bv = at(b).value;
  const Bcast m = classify(av, bv, "add");
  Matrix y = av;
  for (std::size_t r = 0; r < av.rows; ++r)
    for (std::size_t c = 0; c < av.cols; ++c) y.data[r * av.cols + c] += bv.data[bidx(m, av, r, c)];
  const std::uint32_t ai = a.id, bi = b.id;
  return push(std::move(y), {ai, bi}, [ai, bi, m](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.wants(ai)) {
      Matrix& ga = t.grad_of(ai);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
    }
    if (t.wants(bi)) {
      Matrix& gb = t.grad_of(bi);
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) gb.data[bidx(m, g, r, c)] += g.data[r * g.cols + c];
    }
  });
}

Node Tape::sub(Node a, Node b) {
  const Matrix& av = at(a).value;
  const Matrix& bv = at(b).value;
  const Bcast m = classify(av, bv, "sub");
  Matrix y = av;
  for (std::size_t r = 0; r < av.rows; ++r)
    for (std::size_t c = 0; c < av.cols; ++c) y.data[r * av.cols + c] -= bv.data[bidx(m, av, r, c)];
  const std::uint32_t ai = a.id, bi = b.id;
  return push(std::move(y), {ai, bi}, [ai, bi, m](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.wants(ai)) {
      Matrix& ga = t.grad_of(ai);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
    }
    if (t.wants(bi)) {
      Matrix& gb = t.grad_of(bi);
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) gb.data[bidx(m, g, r, c)] -= g.data[r * g.cols + c];
    }
  });
}

Node Tape::mul(Node a, Node b) {
  const Matrix& av = at(a).value;
  const Matrix& bv = at(b).value;
  const Bcast m = classify(av, bv, "mul");
  Matrix y = av;
  for (std::size_t r = 0; r < av.rows; ++r)
    for (std::size_t c = 0; c < av.cols; ++c) y.data[r * av.cols + c] *= bv.data[bidx(m, av, r, c)];
  const std::uint32_t ai = a.id, bi = b.id;
  return push(std::move(y), {ai, bi}, [ai, bi, m](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av = t.nodes_[ai].value;
    const Matrix& bv = t.nodes_[bi].value;
    if (t.wants(ai)) {
      Matrix& ga = t.grad_of(ai);
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c)
          ga.data[r * g.cols + c] += g.data[r * g.cols + c] * bv.data[bidx(m, g, r, c)];
    }
    if (t.wants(bi)) {
      Matrix& gb = t.grad_of(bi);
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c)
          gb.data[bidx(m, g, r, c)] += g.data[r * g.cols + c] * av.data[r * g.cols + c];
    }
  });
}

Node Tape::scale(Node a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Node Tape::add_scalar(Node a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Node Tape::unary(Node a, const std::function<double(double)>& f,
                 const std::function<double(double, double)>& df) {
  const Matrix& av = at(a).value;
  Matrix y(av.rows, av.cols);
  for (std::size_t k = 0; k < av.size(); ++k) y.data[k] = f(av.data[k]);
  const std::uint32_t ai = a.id;
  // df(x, y) receives the input and the output value.
  return push(std::move(y), {ai}, [ai, df](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& yv = t.nodes_[self].value;
    const Matrix& xv = t.nodes_[ai].value;
    Matrix& ga = t.grad_of(ai);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * df(xv.data[k], yv.data[k]);
  });
}

Node Tape::tanh(Node a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Node Tape::relu(Node a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Node Tape::sigmoid(Node a) {
  return unary(a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Node Tape::log_sigmoid(Node a) {
  return unary(a, log_sigmoid_value, [](double x, double) { return sigmoid_value(-x); });
}

Node Tape::exp(Node a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Node Tape::log(Node a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Node Tape::abs(Node a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Node Tape::square(Node a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Node Tape::clamp(Node a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Node Tape::softmax_rows(Node a) {
  const Matrix& av = at(a).value;
  return masked_softmax_rows(a, Matrix(av.rows, av.cols, 1.0));
}

Node Tape::masked_softmax_rows(Node a, const Matrix& mask) {
  const Matrix& av = at(a).value;
  if (!mask.same_shape(av)) throw DimensionError("masked_softmax_rows: mask shape mismatch");
  Matrix y(av.rows, av.cols, 0.0);
  for (std::size_t r = 0; r < av.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < av.cols; ++c)
      if (mask(r, c) != 0.0) mx = std::max(mx, av(r, c));
    if (!std::isfinite(mx)) throw NumericalError("masked_softmax_rows: empty or non-finite row " + std::to_string(r));
    double z = 0.0;
    for (std::size_t c = 0; c < av.cols; ++c) {
      if (mask(r, c) == 0.0) continue;
      y(r, c) = std::exp(av(r, c) - mx);
      z += y(r, c);
    }
    for (std::size_t c = 0; c < av.cols; ++c) y(r, c) /= z;
  }
  const std::uint32_t ai = a.id;
  return push(std::move(y), {ai}, [ai](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& yv = t.nodes_[self].value;
    Matrix& ga = t.grad_of(ai);
    for (std::size_t r = 0; r < g.rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols; ++c) dot += g(r, c) * yv(r, c);
      for (std::size_t c = 0; c < g.cols; ++c) ga(r, c) += yv(r, c) * (g(r, c) - dot);
    }
  });
}

Node Tape::masked_log_softmax_rows(Node a, const Matrix& mask) {
  const Matrix& av = at(a).value;
  if (!mask.same_shape(av)) throw DimensionError("masked_log_softmax_rows: mask shape mismatch");
  Matrix y(av.rows, av.cols, 0.0);
  Matrix p(av.rows, av.cols, 0.0);
  for (std::size_t r = 0; r < av.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < av.cols; ++c)
      if (mask(r, c) != 0.0) mx = std::max(mx, av(r, c));
    if (!std::isfinite(mx)) throw NumericalError("masked_log_softmax_rows: empty or non-finite row " + std::to_string(r));
    double z = 0.0;
    for (std::size_t c = 0; c < av.cols; ++c)
      if (mask(r, c) != 0.0) z += std::exp(av(r, c) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < av.cols; ++c) {
      if (mask(r, c) == 0.0) continue;
      y(r, c) = av(r, c) - lse;
      p(r, c) = std::exp(y(r, c));
    }
  }
  const std::uint32_t ai = a.id;
  return push(std::move(y), {ai}, [ai, mask, p = std::move(p)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(ai);
    for (std::size_t r = 0; r < g.rows; ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < g.cols; ++c)
        if (mask(r, c) != 0.0) gs += g(r, c);
      for (std::size_t c = 0; c < g.cols; ++c)
        if (mask(r, c) != 0.0) ga(r, c) += g(r, c) - p(r, c) * gs;
    }
  });
}

Node Tape::sum(Node a) {
  const Matrix& av = at(a).value;
  double s = 0.0;
  for (double v : av.data) s += v;
  const std::uint32_t ai = a.id;
  return push(Matrix(1, 1, s), {ai}, [ai](Tape& t, std::uint32_t self) {
    const double g = t.nodes_[self].grad.data[0];
    Matrix& ga = t.grad_of(ai);
    for (double& v : ga.data) v += g;
  });
}

Node Tape::mean(Node a) {
  const std::size_t n = at(a).value.size();
  if (n == 0) throw DimensionError("mean of empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Node Tape::row_sum(Node a) {
  const Matrix& av = at(a).value;
  Matrix y(av.rows, 1, 0.0);
  for (std::size_t r = 0; r < av.rows; ++r)
    for (std::size_t c = 0; c < av.cols; ++c) y.data[r] += av(r, c);
  const std::uint32_t ai = a.id;
  return push(std::move(y), {ai}, [ai](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(ai);
    for (std::size_t r = 0; r < ga.rows; ++r)
      for (std::size_t c = 0; c < ga.cols; ++c) ga(r, c) += g.data[r];
  });
}

Node Tape::concat_cols(Node a, Node b) {
  const Matrix& av = at(a).value;
  const Matrix& bv = at(b).value;
  if (av.rows != bv.rows) throw DimensionError(dimension_message("concat_cols rows", av.rows, bv.rows));
  Matrix y(av.rows, av.cols + bv.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), y.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), y.row(r).begin() + static_cast<std::ptrdiff_t>(av.cols));
  }
  const std::uint32_t ai = a.id, bi = b.id;
  return push(std::move(y), {ai, bi}, [ai, bi](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const std::size_t ac = t.nodes_[ai].value.cols;
    for (std::size_t r = 0; r < g.rows; ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        if (c < ac) {
          if (t.wants(ai)) t.grad_of(ai)(r, c) += g(r, c);
        } else if (t.wants(bi)) {
          t.grad_of(bi)(r, c - ac) += g(r, c);
        }
      }
    }
  });
}

Node Tape::gather_rows(Node a, std::vector<std::size_t> index) {
  const Matrix& av = at(a).value;
  Matrix y(index.size(), av.cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= av.rows) throw DimensionError("gather_rows: index out of range");
    std::copy(av.row(index[i]).begin(), av.row(index[i]).end(), y.row(i).begin());
  }
  const std::uint32_t ai = a.id;
  return push(std::move(y), {ai}, [ai, index = std::move(index)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(ai);
    for (std::size_t i = 0; i < index.size(); ++i)
      for (std::size_t c = 0; c < g.cols; ++c) ga(index[i], c) += g(i, c);
  });
}

Node Tape::scatter_rows(Node a, std::vector<std::size_t> index, std::size_t total_rows) {
  const Matrix& av = at(a).value;
  if (index.size() != av.rows) throw DimensionError(dimension_message("scatter_rows index count", av.rows, index.size()));
  Matrix y(total_rows, av.cols, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= total_rows) throw DimensionError("scatter_rows: index out of range");
    for (std::size_t c = 0; c < av.cols; ++c) y(index[i], c) += av(i, c);
  }
  const std::uint32_t ai = a.id;
  return push(std::move(y), {ai}, [ai, index = std::move(index)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(ai);
    for (std::size_t i = 0; i < index.size(); ++i)
      for (std::size_t c = 0; c < g.cols; ++c) ga(i, c) += g(index[i], c);
  });
}

Node Tape::column(Node a, std::size_t j) {
  const Matrix& av = at(a).value;
  if (j >= av.cols) throw DimensionError("column: index out of range");
  Matrix y(av.rows, 1);
  for (std::size_t r = 0; r < av.rows; ++r) y.data[r] = av(r, j);
  const std::uint32_t ai = a.id;
  return push(std::move(y), {ai}, [ai, j](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(ai);
    for (std::size_t r = 0; r < g.rows; ++r) ga(r, j) += g.data[r];
  });
}

Node Tape::sq_dist(Node x, Node c) {
  const Matrix& xv = at(x).value;
  const Matrix& cv = at(c).value;
  if (xv.cols != cv.cols) throw DimensionError(dimension_message("sq_dist feature width", cv.cols, xv.cols));
  Matrix y(xv.rows, cv.rows);
  for (std::size_t b = 0; b < xv.rows; ++b)
    for (std::size_t k = 0; k < cv.rows; ++k) y(b, k) = squared_distance(xv.row(b), cv.row(k));
  const std::uint32_t xi = x.id, ci = c.id;
  return push(std::move(y), {xi, ci}, [xi, ci](Tape& t, std::uint32_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& xv = t.nodes_[xi].value;
    const Matrix& cv = t.nodes_[ci].value;
    const bool wx = t.wants(xi), wc = t.wants(ci);
    for (std::size_t b = 0; b < xv.rows; ++b) {
      for (std::size_t k = 0; k < cv.rows; ++k) {
        const double gk = 2.0 * g(b, k);
        if (gk == 0.0) continue;
        for (std::size_t d = 0; d < xv.cols; ++d) {
          const double diff = xv(b, d) - cv(k, d);
          if (wx) t.grad_of(xi)(b, d) += gk * diff;
          if (wc) t.grad_of(ci)(k, d) -= gk * diff;
        }
      }
    }
  });
}

const Matrix& Tape::value(Node n) const { return at(n).value; }

double Tape::scalar(Node n) const {
  const Matrix& v = at(n).value;
  if (v.size() != 1) throw DimensionError(dimension_message("scalar node size", 1, v.size()));
  return v.data[0];
}

bool Tape::requires_grad(Node n) const { return at(n).needs_grad; }

void Tape::backward(Node loss) {
  const Entry& l = at(loss);
  if (l.value.rows != 1 || l.value.cols != 1) {
    throw DimensionError("backward: loss must be 1x1, got " + std::to_string(l.value.rows) + "x" +
                         std::to_string(l.value.cols));
  }
  for (auto& e : nodes_) {
    if (e.needs_grad) {
      e.grad = Matrix(e.value.rows, e.value.cols, 0.0);
    } else {
      e.grad = Matrix();
    }
  }
  has_grads_ = true;
  backward_visits_ = 0;
  if (!l.needs_grad) return;
  nodes_[loss.id].grad.data[0] = 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Entry& e = nodes_[i];
    if (!e.needs_grad || !e.backward) continue;
    ensure_grad(e.grad, e.value);
    e.backward(*this, i);
    ++backward_visits_;
  }
}

const Matrix& Tape::grad(Node n) const {
  const Entry& e = at(n);
  if (!has_grads_ || !e.needs_grad) throw std::logic_error("no gradient recorded for node " + std::to_string(n.id));
  return e.grad;
}

std::vector<double> Tape::gradient(const ParameterBlock& block) const {
  std::vector<double> out(block.size(), 0.0);
  if (!has_grads_) return out;
  for (const auto& e : nodes_) {
    if (e.block != &block) continue;
    for (std::size_t k = 0; k < e.grad.size(); ++k) out[e.block_offset + k] += e.grad.data[k];
  }
  return out;
}

}  // namespace pvlab
