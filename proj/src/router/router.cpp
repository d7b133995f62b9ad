// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/router/router.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pvlab/common/errors.hpp"

namespace pvlab {

RouterConfig RouterConfig::make(std::size_t num_classes, std::size_t num_experts, std::size_t top_s,
                                double beta, double lambda_util, double lambda_ent) {
  RouterConfig cfg;
  cfg.num_experts = num_experts;
  cfg.top_s = top_s;
  cfg.beta = beta;
  cfg.lambda_util = lambda_util;
  cfg.lambda_ent = lambda_ent;
  cfg.phoneme_to_expert.resize(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) cfg.phoneme_to_expert[k] = num_experts == 0 ? 0 : k % num_experts;
  cfg.validate(num_classes);
  return cfg;
}

void RouterConfig::validate(std::size_t num_classes) const {
  if (num_experts < 1) throw ConfigError("router: M must be >= 1");
  if (top_s < 1 || top_s > num_experts) {
    throw ConfigError("router: need 1 <= S <= M (S=" + std::to_string(top_s) + ", M=" + std::to_string(num_experts) + ")");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("router: beta must lie in [0,1]");
  if (!(lambda_util >= 0.0) || !(lambda_ent >= 0.0)) throw ConfigError("router: lambdas must be >= 0");
  if (phoneme_to_expert.size() != num_classes) {
    throw ConfigError(dimension_message("router: phoneme_to_expert size", num_classes, phoneme_to_expert.size()));
  }
  std::vector<bool> hit(num_experts, false);
  for (std::size_t e : phoneme_to_expert) {
    if (e >= num_experts) throw ConfigError("router: phoneme_to_expert entry out of range");
    hit[e] = true;
  }
  if (std::find(hit.begin(), hit.end(), false) != hit.end()) {
    throw ConfigError("router: phoneme_to_expert must reach every expert (needs K >= M)");
  }
}

Gates Gates::create(std::size_t num_classes, std::size_t content_width, std::size_t num_experts,
                    std::uint64_t seed) {
  return Gates{Mlp::create(MLPSpec::one_hidden(num_classes, 2 * num_experts, num_experts), seed),
               Mlp::create(MLPSpec::one_hidden(content_width, 2 * num_experts, num_experts), seed + 1)};
}

std::vector<std::size_t> top_s(std::span<const double> scores, std::size_t s) {
  if (s < 1 || s > scores.size()) throw ConfigError("top_s: need 1 <= S <= M");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(s), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  idx.resize(s);
  return idx;
}

std::vector<double> pseudo_phoneme_label(std::span<const double> z_p, const PrototypeBank& bank) {
  if (bank.modality() != Modality::phoneme) throw ConfigError("pseudo_phoneme_label needs a phoneme bank");
  return soft_assign(z_p, bank);
}

namespace {

std::vector<double> softmax_of(std::span<const double> scores, std::span<const std::size_t> sel) {
  double mx = scores[sel[0]];
  for (std::size_t i : sel) mx = std::max(mx, scores[i]);
  std::vector<double> w(sel.size());
  double z = 0.0;
  for (std::size_t j = 0; j < sel.size(); ++j) {
    w[j] = std::exp(scores[sel[j]] - mx);
    z += w[j];
  }
  for (double& x : w) x /= z;
  return w;
}

}  // namespace

RoutingOutcome route(std::span<const double> h, std::span<const double> v, const RouterConfig& cfg,
                     const Mlp& g_phon, const Mlp& g_cont) {
  if (cfg.top_s > cfg.num_experts) throw ConfigError("router: S > M");
  if (g_phon.spec.output_width() != cfg.num_experts || g_cont.spec.output_width() != cfg.num_experts) {
    throw DimensionError("router: gate output width must equal M");
  }
  const auto sp = g_phon(v);
  const auto sc = g_cont(h);
  RoutingOutcome out;
  out.scores.resize(cfg.num_experts);
  for (std::size_t i = 0; i < cfg.num_experts; ++i) out.scores[i] = cfg.beta * sp[i] + (1.0 - cfg.beta) * sc[i];
  out.selected = top_s(out.scores, cfg.top_s);
  out.weights = softmax_of(out.scores, out.selected);
  return out;
}

std::vector<double> moe_forward(std::span<const double> h, const RoutingOutcome& outcome,
                                const ExpertEval& experts, std::size_t num_experts) {
  if (outcome.selected.size() != outcome.weights.size()) {
    throw DimensionError(dimension_message("moe selected/weights", outcome.selected.size(), outcome.weights.size()));
  }
  std::vector<double> out;
  for (std::size_t j = 0; j < outcome.selected.size(); ++j) {
    const std::size_t e = outcome.selected[j];
    if (e >= num_experts) throw DimensionError("moe_forward: expert index out of range");
    const auto y = experts(e, h);
    if (out.empty()) out.assign(y.size(), 0.0);
    if (y.size() != out.size()) throw DimensionError(dimension_message("expert output width", out.size(), y.size()));
    for (std::size_t k = 0; k < y.size(); ++k) out[k] += outcome.weights[j] * y[k];
  }
  return out;
}

std::vector<double> moe_forward(std::span<const double> h, const RoutingOutcome& outcome,
                                std::span<const Mlp> experts) {
  for (const auto& e : experts) {
    if (e.spec.input_width() != h.size()) throw DimensionError(dimension_message("expert input width", e.spec.input_width(), h.size()));
    if (e.spec.output_width() != experts.front().spec.output_width()) throw DimensionError("experts disagree on output width");
  }
  return moe_forward(h, outcome, [&](std::size_t i, std::span<const double> x) { return experts[i](x); },
                     experts.size());
}

std::vector<std::size_t> usage_counts(std::span<const RoutingOutcome> outcomes, std::size_t num_experts) {
  std::vector<std::size_t> n(num_experts, 0);
  for (const auto& o : outcomes)
    for (std::size_t e : o.selected) ++n.at(e);
  return n;
}

std::vector<double> routing_target(std::span<const double> label, std::span<const std::size_t> selected,
                                   const RouterConfig& cfg) {
  if (label.size() != cfg.num_classes()) throw DimensionError(dimension_message("routing label width", cfg.num_classes(), label.size()));
  std::vector<double> mass(cfg.num_experts, 0.0);
  for (std::size_t k = 0; k < label.size(); ++k) mass[cfg.phoneme_to_expert[k]] += label[k];
  std::vector<double> t(cfg.num_experts, 0.0);
  double z = 0.0;
  for (std::size_t e : selected) z += mass[e];
  if (z <= 0.0) return t;
  for (std::size_t e : selected) t[e] = mass[e] / z;
  return t;
}

double utilization_term(std::span<const std::size_t> counts, std::size_t batch, double lambda_util) {
  if (batch == 0) throw ConfigError("utilization_term: empty batch");
  const double Bd = static_cast<double>(batch);
  double sq = 0.0;
  for (std::size_t c : counts) {
    const double f = static_cast<double>(c) / Bd;
    sq += f * f;
  }
  return lambda_util * (static_cast<double>(counts.size()) / Bd) * sq;
}

RouterLossTerms router_loss(std::span<const RoutingOutcome> outcomes, const Matrix& labels,
                            const RouterConfig& cfg) {
  const std::size_t B = outcomes.size();
  if (B == 0) throw ConfigError("router_loss: empty batch");
  if (labels.rows != B) throw DimensionError(dimension_message("router_loss label rows", B, labels.rows));
  RouterLossTerms terms;
  double ce = 0.0, ent = 0.0;
  for (std::size_t t = 0; t < B; ++t) {
    const auto& o = outcomes[t];
    const auto target = routing_target(labels.row(t), o.selected, cfg);
    for (std::size_t j = 0; j < o.selected.size(); ++j) {
      const double w = o.weights[j];
      const double lw = std::log(w);
      ce -= target[o.selected[j]] * lw;
      ent += w * lw;
    }
  }
  const double Bd = static_cast<double>(B);
  terms.route = ce / Bd;
  terms.utilization = utilization_term(usage_counts(outcomes, cfg.num_experts), B, cfg.lambda_util);
  const double sign = cfg.flip_entropy_sign ? 1.0 : -1.0;
  terms.entropy = sign * cfg.lambda_ent * ent / Bd;
  terms.total = terms.route + terms.utilization + terms.entropy;
  return terms;
}

RouterForward route(Tape& tape, Node h, Node v, const RouterConfig& cfg, const Gates& gates,
                    const Matrix* fixed_mask) {
  const std::size_t B = tape.value(h).rows;
  if (tape.value(v).rows != B) throw DimensionError(dimension_message("router label rows", B, tape.value(v).rows));
  const std::size_t M = cfg.num_experts;
  Node scores;
  if (cfg.beta == 1.0) {
    scores = gates.phoneme.record(tape, v);
  } else if (cfg.beta == 0.0) {
    scores = gates.content.record(tape, h);
  } else {
    scores = tape.add(tape.scale(gates.phoneme.record(tape, v), cfg.beta),
                      tape.scale(gates.content.record(tape, h), 1.0 - cfg.beta));
  }
  const Matrix& sv = tape.value(scores);
  if (sv.cols != M) throw DimensionError(dimension_message("gate output width", M, sv.cols));

  RouterForward fwd;
  fwd.scores = scores;
  fwd.mask = Matrix(B, M, 0.0);
  fwd.outcomes.resize(B);
  for (std::size_t t = 0; t < B; ++t) {
    auto& o = fwd.outcomes[t];
    o.scores.assign(sv.row(t).begin(), sv.row(t).end());
    if (fixed_mask) {
      std::vector<std::size_t> sel;
      for (std::size_t i = 0; i < M; ++i)
        if ((*fixed_mask)(t, i) != 0.0) sel.push_back(i);
      std::stable_sort(sel.begin(), sel.end(), [&](std::size_t a, std::size_t b) { return o.scores[a] > o.scores[b]; });
      o.selected = std::move(sel);
    } else {
      o.selected = top_s(o.scores, cfg.top_s);
    }
    for (std::size_t i : o.selected) fwd.mask(t, i) = 1.0;
  }
  fwd.weights = tape.masked_softmax_rows(scores, fwd.mask);
  fwd.log_weights = tape.masked_log_softmax_rows(scores, fwd.mask);
  const Matrix& wv = tape.value(fwd.weights);
  for (std::size_t t = 0; t < B; ++t) {
    auto& o = fwd.outcomes[t];
    o.weights.resize(o.selected.size());
    for (std::size_t j = 0; j < o.selected.size(); ++j) o.weights[j] = wv(t, o.selected[j]);
  }
  fwd.usage = usage_counts(fwd.outcomes, M);
  return fwd;
}

TapeRouterLoss router_loss(Tape& tape, const RouterForward& fwd, const Matrix& labels,
                           const RouterConfig& cfg) {
  const std::size_t B = fwd.outcomes.size();
  if (B == 0) throw ConfigError("router_loss: empty batch");
  if (labels.rows != B) throw DimensionError(dimension_message("router_loss label rows", B, labels.rows));
  const std::size_t M = cfg.num_experts;
  Matrix target(B, M, 0.0);
  for (std::size_t t = 0; t < B; ++t) {
    const auto tv = routing_target(labels.row(t), fwd.outcomes[t].selected, cfg);
    std::copy(tv.begin(), tv.end(), target.row(t).begin());
  }
  const double inv_b = 1.0 / static_cast<double>(B);
  Node ce = tape.scale(tape.sum(tape.mul(fwd.log_weights, tape.constant(std::move(target)))), -inv_b);
  Node plogp = tape.sum(tape.mul(fwd.weights, fwd.log_weights));
  const double sign = cfg.flip_entropy_sign ? 1.0 : -1.0;
  Node ent = tape.scale(plogp, sign * cfg.lambda_ent * inv_b);

  const double util = utilization_term(fwd.usage, B, cfg.lambda_util);
  Node total = tape.add_scalar(tape.add(ce, ent), util);
  return TapeRouterLoss{total, ce, ent, util};
}

Node moe_forward(Tape& tape, Node h, const RouterForward& fwd, std::span<const Mlp> experts,
                 std::vector<std::size_t>* rows_evaluated) {
  const std::size_t B = tape.value(h).rows;
  const std::size_t M = fwd.mask.cols;
  if (experts.size() != M) throw DimensionError(dimension_message("expert count", M, experts.size()));
  if (rows_evaluated) rows_evaluated->assign(M, 0);
  const std::size_t out_width = experts.front().spec.output_width();
  Node acc = tape.constant(Matrix(B, out_width, 0.0));
  for (std::size_t i = 0; i < M; ++i) {
    if (experts[i].spec.output_width() != out_width) throw DimensionError("experts disagree on output width");
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < B; ++t)
      if (fwd.mask(t, i) != 0.0) rows.push_back(t);
    if (rows.empty()) continue;
    if (rows_evaluated) (*rows_evaluated)[i] = rows.size();
    Node y = experts[i].record(tape, tape.gather_rows(h, rows));
    Node w = tape.gather_rows(tape.column(fwd.weights, i), rows);
    acc = tape.add(acc, tape.scatter_rows(tape.mul(y, w), rows, B));
  }
  return acc;
}

}  // namespace pvlab
