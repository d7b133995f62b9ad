// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/harness/gradcheck_suite.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <random>

#include "pvlab/align/js_mi.hpp"
#include "pvlab/align/pair_batch.hpp"
#include "pvlab/common/errors.hpp"
#include "pvlab/common/hash.hpp"
#include "pvlab/diffcore/gradcheck.hpp"
#include "pvlab/generator/generation_loss.hpp"
#include "pvlab/prototypes/prototype_bank.hpp"
#include "pvlab/router/router.hpp"

namespace pvlab {
namespace {

Matrix gaussian(std::size_t r, std::size_t c, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(r, c);
  for (double& v : m.data) v = n(rng);
  return m;
}

// The free variables of one check: parameter blocks followed by input
// matrices, flattened in that order.
struct Slots {
  std::vector<ParameterBlock*> blocks;
  std::vector<Matrix*> inputs;

  std::vector<double> pack() const {
    std::vector<double> x;
    for (const auto* b : blocks) x.insert(x.end(), b->values().begin(), b->values().end());
    for (const auto* m : inputs) x.insert(x.end(), m->data.begin(), m->data.end());
    return x;
  }
  void unpack(std::span<const double> x) const {
    std::size_t o = 0;
    for (auto* b : blocks) {
      b->assign(x.subspan(o, b->size()));
      o += b->size();
    }
    for (auto* m : inputs) {
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(o), m->size(), m->data.begin());
      o += m->size();
    }
  }
};

// build(tape, input_nodes) -> loss node
using Builder = std::function<Node(Tape&, const std::vector<Node>&)>;

double check(const Slots& slots, const Builder& build, double h, bool corrupt) {
  const std::vector<double> point = slots.pack();
  Objective f = [&](std::span<const double> x) {
    slots.unpack(x);
    Tape tape;
    std::vector<Node> in;
    for (const auto* m : slots.inputs) in.push_back(tape.variable(*m));
    const Node loss = build(tape, in);
    ValueAndGradient out{tape.scalar(loss), {}};
    tape.backward(loss);
    for (const auto* b : slots.blocks) {
      const auto g = tape.gradient(*b);
      out.gradient.insert(out.gradient.end(), g.begin(), g.end());
    }
    for (const Node n : in) {
      const auto& g = tape.grad(n).data;
      out.gradient.insert(out.gradient.end(), g.begin(), g.end());
    }
    return out;
  };
  ValueAndGradient base = f(point);
  if (corrupt && !base.gradient.empty()) base.gradient.front() = base.gradient.front() * 1.5 + 1e-3;
  const auto result = finite_diff_check([&](std::span<const double> x) { return f(x).value; }, base.gradient, point, h);
  slots.unpack(point);
  return result.max_relative_error;
}

double check_align(std::uint64_t seed, double h, bool corrupt) {
  std::mt19937_64 rng(mix_seed(seed, 1));
  const std::size_t B = 8, K = 4, d = 3;
  const PrototypeBank bank_p(gaussian(K, d, 1.0, rng), Modality::phoneme, 1.0);
  const PrototypeBank bank_v(gaussian(K, d, 1.0, rng), Modality::viseme, 1.0);
  MIEstimator est_proto = MIEstimator::create(K, K, 8, mix_seed(seed, 2));
  MIEstimator est_raw = MIEstimator::create(d, d, 8, mix_seed(seed, 3));
  Matrix zp = gaussian(B, d, 0.7, rng), zv = gaussian(B, d, 0.7, rng);
  const auto shuffle = random_derangement(B, mix_seed(seed, 4));
  Slots slots{{&est_proto.discriminator.params, &est_raw.discriminator.params}, {&zp, &zv}};
  return check(
      slots,
      [&](Tape& tape, const std::vector<Node>& in) {
        const Node qp = soft_assign(tape, in[0], bank_p, bank_p.tau());
        const Node qv = soft_assign(tape, in[1], bank_v, bank_v.tau());
        return alignment_loss(tape, qp, qv, in[0], in[1], est_proto, est_raw, 0.5, shuffle).loss;
      },
      h, corrupt);
}

double check_js_mi(std::uint64_t seed, double h, bool corrupt) {
  std::mt19937_64 rng(mix_seed(seed, 11));
  const std::size_t B = 8;
  MIEstimator est = MIEstimator::create(3, 2, 8, mix_seed(seed, 12));
  Matrix xs = gaussian(B, 3, 1.0, rng), ys = gaussian(B, 2, 1.0, rng);
  const auto shuffle = random_derangement(B, mix_seed(seed, 13));
  Slots slots{{&est.discriminator.params}, {&xs, &ys}};
  return check(
      slots, [&](Tape& tape, const std::vector<Node>& in) { return js_mi(tape, est, in[0], in[1], shuffle).value; }, h,
      corrupt);
}

double check_router(std::uint64_t seed, double h, bool corrupt) {
  std::mt19937_64 rng(mix_seed(seed, 21));
  const std::size_t B = 8, K = 4, M = 4, d_h = 5;
  const RouterConfig cfg = RouterConfig::make(K, M, 2, 0.5, 0.01, 0.05);
  Gates gates = Gates::create(K, d_h, M, mix_seed(seed, 22));
  Matrix hs = gaussian(B, d_h, 1.0, rng);
  Matrix vs(B, K);
  for (std::size_t t = 0; t < B; ++t) {
    std::vector<double> logits(K);
    for (double& l : logits) l = std::normal_distribution<double>(0.0, 1.5)(rng);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& l : logits) z += (l = std::exp(l - mx));
    for (std::size_t k = 0; k < K; ++k) vs(t, k) = logits[k] / z;
  }
  const Matrix labels = vs;
  Matrix mask;
  {
    Tape tape;
    mask = route(tape, tape.constant(hs), tape.constant(vs), cfg, gates).mask;
  }
  Slots slots{{&gates.phoneme.params, &gates.content.params}, {&hs, &vs}};
  return check(
      slots,
      [&](Tape& tape, const std::vector<Node>& in) {
        const RouterForward fwd = route(tape, in[0], in[1], cfg, gates, &mask);
        return router_loss(tape, fwd, labels, cfg).total;
      },
      h, corrupt);
}

double check_gen(std::uint64_t seed, double h, bool corrupt) {
  std::mt19937_64 rng(mix_seed(seed, 31));
  const std::size_t T = 4, d = 6;
  Mlp decoder = Mlp::create(MLPSpec::dense(d, kFramePixels), mix_seed(seed, 32));
  const PerceptualNet phi = PerceptualNet::create(mix_seed(seed, 33));
  Matrix x = gaussian(T, d, 1.0, rng);
  const Matrix gen = decode_frames(x, decoder).as_matrix();
  // Real frames keep every pixel and every temporal difference at least
  // 0.05 away from the generated ones, clear of the L1 kinks.
  Matrix real(T, kFramePixels);
  std::uniform_real_distribution<double> mag(0.05, 0.2);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t p = 0; p < kFramePixels; ++p) {
    double sign = coin(rng) ? 1.0 : -1.0;
    for (std::size_t t = 0; t < T; ++t) {
      real(t, p) = gen(t, p) + sign * mag(rng);
      sign = -sign;
    }
  }
  const GenerationWeights w{1.0, 0.1, 0.5};
  Slots slots{{&decoder.params}, {&x}};
  return check(
      slots,
      [&](Tape& tape, const std::vector<Node>& in) {
        return generation_loss(tape, decode_frames(tape, in[0], decoder), real, phi, w, T).total;
      },
      h, corrupt);
}

}  // namespace

const std::vector<std::string>& gradcheck_families() {
  static const std::vector<std::string> names{"align", "js_mi", "router", "gen"};
  return names;
}

std::vector<GradcheckRow> run_gradcheck_suite(const GradcheckOptions& options) {
  const auto& names = gradcheck_families();
  if (!options.corrupt_family.empty() &&
      std::find(names.begin(), names.end(), options.corrupt_family) == names.end()) {
    throw ConfigError("unknown gradcheck family '" + options.corrupt_family + "'");
  }
  using Check = double (*)(std::uint64_t, double, bool);
  const Check checks[] = {check_align, check_js_mi, check_router, check_gen};
  std::vector<GradcheckRow> rows;
  for (std::size_t i = 0; i < names.size(); ++i) {
    GradcheckRow row;
    row.family = names[i];
    for (std::uint64_t seed : options.seeds) {
      row.errors.push_back(checks[i](seed, options.h, options.corrupt_family == names[i]));
    }
    row.max_error = row.errors.empty() ? 0.0 : *std::max_element(row.errors.begin(), row.errors.end());
    row.passed = row.max_error < options.tolerance;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string gradcheck_table(const std::vector<GradcheckRow>& rows) {
  std::string out = "family    max_rel_error  result\n";
  char line[128];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-9s %13.3e  %s\n", r.family.c_str(), r.max_error, r.passed ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

}  // namespace pvlab
