// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pvlab/diffcore/mlp.hpp"
#include "pvlab/diffcore/tape.hpp"
#include "pvlab/prototypes/prototype_bank.hpp"

namespace pvlab {

struct RouterConfig {
  std::size_t num_experts = 4;  // M
  std::size_t top_s = 2;        // S
  double beta = 0.5;            // weight of the phoneme gate
  double lambda_util = 0.01;
  double lambda_ent = 0.001;
  // Pseudo-phoneme class -> expert, used to build routing targets. Must hit
  // every expert.
  std::vector<std::size_t> phoneme_to_expert;
  // false: loss carries -lambda_ent * sum w log w (sharpening).
  bool flip_entropy_sign = false;

  // Validated config with the default k mod M class map.
  static RouterConfig make(std::size_t num_classes, std::size_t num_experts, std::size_t top_s,
                           double beta = 0.5, double lambda_util = 0.01, double lambda_ent = 0.001);
  void validate(std::size_t num_classes) const;
  std::size_t num_classes() const { return phoneme_to_expert.size(); }
};

struct RoutingOutcome {
  std::vector<double> scores;          // M
  std::vector<std::size_t> selected;   // S indices, highest score first
  std::vector<double> weights;         // softmax over the selected scores
};

// Gating networks: phoneme gate K -> M, content gate d_h -> M, each with one
// hidden layer of width 2M.
struct Gates {
  Mlp phoneme;
  Mlp content;

  static Gates create(std::size_t num_classes, std::size_t content_width, std::size_t num_experts,
                      std::uint64_t seed);
};

// Indices of the S largest scores, ties to the lowest index, best first.
std::vector<std::size_t> top_s(std::span<const double> scores, std::size_t s);

// Soft assignment of a speech feature over the phoneme prototypes.
std::vector<double> pseudo_phoneme_label(std::span<const double> z_p, const PrototypeBank& bank);

RoutingOutcome route(std::span<const double> h, std::span<const double> v, const RouterConfig& cfg,
                     const Mlp& g_phon, const Mlp& g_cont);

using ExpertEval = std::function<std::vector<double>(std::size_t expert, std::span<const double> h)>;

// sum over selected i of w_i * expert_i(h). Only selected experts are called.
std::vector<double> moe_forward(std::span<const double> h, const RoutingOutcome& outcome,
                                const ExpertEval& experts, std::size_t num_experts);
std::vector<double> moe_forward(std::span<const double> h, const RoutingOutcome& outcome,
                                std::span<const Mlp> experts);

// Per-expert selection counts n_i over a batch.
std::vector<std::size_t> usage_counts(std::span<const RoutingOutcome> outcomes, std::size_t num_experts);

// lambda_util * (M/B) * sum_i (n_i/B)^2 with M = counts.size().
double utilization_term(std::span<const std::size_t> counts, std::size_t batch, double lambda_util);

struct RouterLossTerms {
  double route = 0.0;        // masked cross-entropy against pseudo-phoneme targets
  double utilization = 0.0;  // lambda_util * (M/B) * sum (n_i/B)^2
  double entropy = 0.0;      // -lambda_ent * mean_t sum_{i in Q} w_i log w_i
  double total = 0.0;
};

// labels: B x K pseudo-phoneme distributions aligned with `outcomes`.
RouterLossTerms router_loss(std::span<const RoutingOutcome> outcomes, const Matrix& labels,
                            const RouterConfig& cfg);

// Routing target for one timestep: label mass pushed through
// phoneme_to_expert and renormalised over the selected experts (zeros
// elsewhere). All-zero when the selected experts carry no label mass.
std::vector<double> routing_target(std::span<const double> label, std::span<const std::size_t> selected,
                                   const RouterConfig& cfg);

// ---- batched, differentiable path ----

struct RouterForward {
  Node scores;       // B x M
  Node weights;      // B x M, zero outside the selection
  Node log_weights;  // B x M, zero outside the selection
  Matrix mask;       // B x M selection mask (constant)
  std::vector<RoutingOutcome> outcomes;
  std::vector<std::size_t> usage;
};

// h: B x d_h, v: B x K. When `fixed_mask` is given it replaces top-S
// selection (used to hold the discrete choice constant under perturbation).
RouterForward route(Tape& tape, Node h, Node v, const RouterConfig& cfg, const Gates& gates,
                    const Matrix* fixed_mask = nullptr);

struct TapeRouterLoss {
  Node total;
  Node route;
  Node entropy;
  double utilization = 0.0;
};

TapeRouterLoss router_loss(Tape& tape, const RouterForward& fwd, const Matrix& labels,
                           const RouterConfig& cfg);

// Sparse aggregation; expert i only sees the rows that selected it.
// `rows_evaluated`, if given, receives the per-expert row counts.
Node moe_forward(Tape& tape, Node h, const RouterForward& fwd, std::span<const Mlp> experts,
                 std::vector<std::size_t>* rows_evaluated = nullptr);

}  // namespace pvlab
