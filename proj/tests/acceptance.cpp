// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails. Optional arguments restrict the
// run to the listed criterion numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pvlab/align/js_mi.hpp"
#include "pvlab/align/pair_batch.hpp"
#include "pvlab/common/log.hpp"
#include "pvlab/diffcore/adam.hpp"
#include "pvlab/harness/commands.hpp"
#include "pvlab/harness/config.hpp"
#include "pvlab/harness/gradcheck_suite.hpp"
#include "pvlab/harness/sweep.hpp"
#include "pvlab/harness/trainer.hpp"
#include "pvlab/metrics/geometry.hpp"
#include "pvlab/metrics/landmarks.hpp"
#include "pvlab/metrics/sync_metrics.hpp"
#include "pvlab/router/router.hpp"
#include "pvlab/synthcorpus/corpus.hpp"

namespace fs = std::filesystem;
using namespace pvlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
  void note(const std::string& s) { details.push_back(s); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- shared state ----

const Corpus& default_corpus() {
  static const Corpus c = build_corpus(ExperimentConfig{}.corpus_spec);
  return c;
}

struct SeedRuns {
  std::vector<RunReport> full, no_align, no_guidance;
  double full_s = 0.0, no_align_s = 0.0, no_guidance_s = 0.0;
};

constexpr std::uint64_t kSeeds = 5;

RunReport train_seed(std::uint64_t seed, const std::function<void(ExperimentConfig&)>& tweak) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  tweak(cfg);
  return train(cfg, default_corpus()).report;
}

SeedRuns& seed_runs(bool need_align_ablation, bool need_guidance_ablation) {
  static SeedRuns runs;
  if (runs.full.empty()) {
    const auto t0 = Clock::now();
    for (std::uint64_t s = 0; s < kSeeds; ++s) runs.full.push_back(train_seed(s, [](ExperimentConfig&) {}));
    runs.full_s = seconds_since(t0);
  }
  if (need_align_ablation && runs.no_align.empty()) {
    const auto t0 = Clock::now();
    for (std::uint64_t s = 0; s < kSeeds; ++s) {
      runs.no_align.push_back(train_seed(s, [](ExperimentConfig& c) { c.disable_pv_align = true; }));
    }
    runs.no_align_s = seconds_since(t0);
  }
  if (need_guidance_ablation && runs.no_guidance.empty()) {
    const auto t0 = Clock::now();
    for (std::uint64_t s = 0; s < kSeeds; ++s) {
      runs.no_guidance.push_back(train_seed(s, [](ExperimentConfig& c) { c.disable_phoneme_guidance = true; }));
    }
    runs.no_guidance_s = seconds_since(t0);
  }
  return runs;
}

// ---- 1 ----

Outcome gradient_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto rows = run_gradcheck_suite(GradcheckOptions{});
  const double secs = seconds_since(t0);
  bool ok = rows.size() == 4;
  for (const auto& r : rows) {
    ok = ok && r.passed && r.errors.size() == 3 && r.max_error < 1e-4;
    o.note(fmt("%-6s max relative error %.3e over %zu seeds", r.family.c_str(), r.max_error, r.errors.size()));
  }
  o.note(fmt("runtime %.1f s (budget 60 s)", secs));
  o.pass = ok && secs < 60.0;
  return o;
}

// ---- 2 ----

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (auto& v : m.data) v = n(rng);
  return m;
}

double calibrated_estimate(bool identical, std::uint64_t seed) {
  constexpr std::size_t kDim = 2, kBatch = 64, kSteps = 500, kEval = 20;
  std::mt19937_64 rng(seed);
  MIEstimator est = MIEstimator::create(kDim, kDim, 32, seed);
  AdamState state = AdamState::for_block(est.discriminator.params);
  const AdamConfig adam{1e-2};
  auto draw = [&](std::uint64_t shuffle_seed) {
    Matrix x = gaussian(kBatch, kDim, rng);
    Matrix y = identical ? x : gaussian(kBatch, kDim, rng);
    return make_negative_pairs(x, y, shuffle_seed);
  };
  for (std::size_t step = 0; step < kSteps; ++step) train_estimator_step(est, state, draw(seed * 100000 + step), adam);
  double mean = 0.0;
  for (std::size_t i = 0; i < kEval; ++i) mean += estimate_js_mi(est, draw(seed * 100000 + kSteps + i)).value;
  return mean / kEval;
}

Outcome mi_calibration() {
  Outcome o;
  const auto t0 = Clock::now();
  const double target = -2.0 * std::numbers::ln2;
  const double indep = calibrated_estimate(false, 7);
  const double same = calibrated_estimate(true, 8);
  const double secs = seconds_since(t0);
  o.note(fmt("independent pairs: %.4f (target %.4f +- 0.15)", indep, target));
  o.note(fmt("identical pairs:   %.4f (needs > -0.2)", same));
  o.note(fmt("runtime %.1f s (budget 120 s)", secs));
  o.pass = std::abs(indep - target) <= 0.15 && same > -0.2 && secs < 120.0;
  return o;
}

// ---- 3 ----

Outcome alignment_recovery() {
  Outcome o;
  const auto& runs = seed_runs(true, false);
  bool all_high = true;
  std::size_t lower = 0;
  for (std::uint64_t s = 0; s < kSeeds; ++s) {
    const double full = runs.full[s].held_out.alignment_accuracy;
    const double abl = runs.no_align[s].held_out.alignment_accuracy;
    all_high = all_high && full >= 0.90;
    lower += abl < full ? 1 : 0;
    o.note(fmt("seed %llu: accuracy %.4f, without alignment %.4f", static_cast<unsigned long long>(s), full, abl));
  }
  const double secs = runs.full_s + runs.no_align_s;
  o.note(fmt("ablation strictly lower on %zu/5 seeds; runtime %.1f s (budget 600 s)", lower, secs));
  o.pass = all_high && lower >= 4 && secs < 600.0;
  return o;
}

// ---- 4 ----

Outcome zero_shot() {
  Outcome o;
  const auto& runs = seed_runs(false, false);
  std::size_t close = 0;
  for (std::uint64_t s = 0; s < kSeeds; ++s) {
    const double seen = runs.full[s].held_out.alignment_accuracy;
    const double unseen = runs.full[s].zero_shot.alignment_accuracy;
    close += std::abs(seen - unseen) <= 0.10 ? 1 : 0;
    o.note(fmt("seed %llu: seen %.4f, unseen %.4f, gap %.2f pp", static_cast<unsigned long long>(s), seen, unseen,
               100.0 * std::abs(seen - unseen)));
  }
  o.note(fmt("within 10 pp on %zu/5 seeds", close));
  o.pass = close >= 4;
  return o;
}

// ---- 5 ----

std::set<std::size_t> brute_top(const std::vector<double>& s, std::size_t k) {
  // Highest-sum k-subset by enumeration; scores are continuous so ties do not occur.
  const std::size_t m = s.size();
  std::set<std::size_t> best;
  double best_sum = -1e300;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    double sum = 0.0;
    std::set<std::size_t> pick;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (1u << i)) {
        sum += s[i];
        pick.insert(i);
      }
    }
    if (sum > best_sum) {
      best_sum = sum;
      best = pick;
    }
  }
  return best;
}

Outcome router_properties() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t M = 2 + trial % 7, S = 1 + (trial / 7) % M;
    std::vector<double> s(M);
    for (auto& v : s) v = n(rng);
    const auto got = top_s(s, S);
    const std::set<std::size_t> as_set(got.begin(), got.end());
    if (as_set != brute_top(s, S) || got.size() != S) ++mismatches;
  }
  o.note(fmt("top-S vs brute force: %zu mismatches in 10000 score vectors", mismatches));

  std::size_t allocations = 0, violations = 0;
  for (std::size_t M = 1; M <= 4; ++M) {
    for (std::size_t B = 1; B <= 8; ++B) {
      for (std::size_t S = 1; S <= M; ++S) {
        const std::size_t total = B * S;
        std::vector<std::size_t> even(M, total / M);
        for (std::size_t i = 0; i < total % M; ++i) ++even[i];
        const double balanced = utilization_term(even, B, 1.0);
        std::vector<std::size_t> cnt(M, 0);
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
          if (i + 1 == M) {
            if (left > B) return;
            cnt[i] = left;
            ++allocations;
            if (utilization_term(cnt, B, 1.0) < balanced - 1e-15) ++violations;
            return;
          }
          for (std::size_t c = 0; c <= std::min(left, B); ++c) {
            cnt[i] = c;
            rec(i + 1, left - c);
          }
        };
        rec(0, total);
      }
    }
  }
  o.note(fmt("utilization: balanced usage beaten in %zu of %zu enumerated allocations", violations, allocations));

  std::size_t stray_calls = 0, routed = 0;
  const std::size_t M = 6, S = 2;
  const RouterConfig cfg = RouterConfig::make(8, M, S);
  const Gates gates = Gates::create(8, 5, M, 3);
  std::vector<std::size_t> calls(M, 0);
  const ExpertEval counted = [&](std::size_t i, std::span<const double> h) {
    ++calls[i];
    return std::vector<double>(h.begin(), h.end());
  };
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> h(5), v(8);
    for (auto& x : h) x = n(rng);
    double z = 0.0;
    for (auto& x : v) z += (x = std::exp(n(rng)));
    for (auto& x : v) x /= z;
    const auto out = route(h, v, cfg, gates.phoneme, gates.content);
    std::fill(calls.begin(), calls.end(), 0);
    moe_forward(h, out, counted, M);
    for (std::size_t i = 0; i < M; ++i) {
      const bool selected = std::find(out.selected.begin(), out.selected.end(), i) != out.selected.end();
      if (!selected) stray_calls += calls[i];
      routed += selected ? calls[i] : 0;
    }
  }
  o.note(fmt("sparsity: %zu evaluations of unselected experts, %zu of selected ones", stray_calls, routed));
  const double secs = seconds_since(t0);
  o.note(fmt("runtime %.1f s (budget 60 s)", secs));
  o.pass = mismatches == 0 && violations == 0 && stray_calls == 0 && routed == 2000 * S && secs < 60.0;
  return o;
}

// ---- 6 ----

Outcome routing_specialization() {
  Outcome o;
  const auto& runs = seed_runs(false, true);
  std::size_t wins = 0;
  for (std::uint64_t s = 0; s < kSeeds; ++s) {
    const double guided = runs.full[s].held_out.nmi;
    const double plain = runs.no_guidance[s].held_out.nmi;
    wins += guided - plain >= 0.05 ? 1 : 0;
    o.note(fmt("seed %llu: NMI %.4f with guidance, %.4f without (gap %+.4f)", static_cast<unsigned long long>(s),
               guided, plain, guided - plain));
  }
  const double secs = runs.full_s + runs.no_guidance_s;
  o.note(fmt("gap >= 0.05 on %zu/5 seeds; runtime %.1f s (budget 600 s)", wins, secs));
  o.pass = wins >= 4 && secs < 600.0;
  return o;
}

// ---- 7 ----

LandmarkSequence random_landmarks(std::size_t T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> c(T * kLipLandmarks * 2);
  for (auto& v : c) v = n(rng);
  return LandmarkSequence(std::move(c));
}

double brute_hull_area(const std::vector<Point2>& p) {
  double twice = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (i == j) continue;
      bool edge = true;
      for (std::size_t k = 0; k < p.size() && edge; ++k) {
        if (k == i || k == j) continue;
        edge = (p[j].x - p[i].x) * (p[k].y - p[i].y) - (p[j].y - p[i].y) * (p[k].x - p[i].x) > 0.0;
      }
      if (edge) twice += p[i].x * p[j].y - p[j].x * p[i].y;
    }
  }
  return 0.5 * twice;
}

Outcome metric_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  bool ok = true;
  auto check = [&](bool cond, const std::string& what) {
    ok = ok && cond;
    o.note(std::string(cond ? "ok   " : "FAIL ") + what);
  };

  const auto a = random_landmarks(50, 1);
  check(lse_d(a, a) == 0.0, "lse_d(a, a) == 0");
  std::vector<double> shifted = a.coords();
  for (std::size_t k = 0; k < shifted.size(); k += 2) {
    shifted[k] += 3.0;
    shifted[k + 1] += 4.0;
  }
  const double d = lse_d(a, LandmarkSequence(shifted));
  check(std::abs(d - 5.0) <= 1e-12, fmt("(3,4) shift gives %.15f", d));
  const double self = tmdc(a, a);
  check(std::abs(self - 1.0) <= 1e-9, fmt("tmdc(a, a) = %.15f", self));

  const auto fa = mouth_features(a);
  MouthFeatureSeries fb = fa;
  for (std::size_t k = 0; k < kMouthFeatures; ++k) {
    for (auto& v : fb.rows[k]) v = (1.5 + static_cast<double>(k)) * v - 2.0;
  }
  const double affine = tmdc_detail(fa, fb, false).score;
  check(std::abs(affine - 1.0) <= 1e-12, fmt("positive affine rows give %.15f", affine));

  const double null_score = tmdc(random_landmarks(500, 2), random_landmarks(500, 3));
  check(std::abs(null_score) < 0.15, fmt("independent T=500 sequences give %.4f", null_score));

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Point2> pts(kLipLandmarks);
    for (auto& p : pts) p = {n(rng), n(rng)};
    const double want = brute_hull_area(pts);
    if (std::abs(convex_hull_area(pts) - want) > 1e-10 * std::max(1.0, want)) ++bad;
  }
  check(bad == 0, fmt("convex hull vs brute force: %zu mismatches in 1000 sets", bad));
  const double secs = seconds_since(t0);
  o.note(fmt("runtime %.1f s (budget 60 s)", secs));
  o.pass = ok && secs < 60.0;
  return o;
}

// ---- 8 ----

std::map<std::string, std::string> tree_bytes(const fs::path& root, const std::set<std::string>& skip) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).string();
    if (skip.count(rel)) continue;
    std::ifstream f(e.path(), std::ios::binary);
    out[rel] = std::string(std::istreambuf_iterator<char>(f), {});
  }
  return out;
}

Outcome determinism(const fs::path& work) {
  Outcome o;
  const fs::path root = work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  ::setenv(kOutputRootEnv, root.c_str(), 1);
  std::ostringstream sink;
  ExperimentConfig cfg;
  bool ok = true;
  for (const char* name : {"corpus_a", "corpus_b"}) {
    cfg.corpus = name;
    ok = ok && run_guarded([&] { return cmd_synth(cfg, sink); }, std::cerr) == kExitOk;
  }
  const auto ca = tree_bytes(root / "corpus_a", {}), cb = tree_bytes(root / "corpus_b", {});
  const bool corpus_same = ok && !ca.empty() && ca == cb;
  o.note(fmt("synth: %zu files, identical across runs: %s", ca.size(), corpus_same ? "yes" : "no"));

  // Same command twice into the same directory; only wall-clock fields may differ.
  cfg.corpus = "corpus_a";
  cfg.out = "run";
  const std::set<std::string> timed{"report.json", "report.txt"};
  std::vector<std::map<std::string, std::string>> files;
  std::vector<RunReport> reports;
  for (int run = 0; run < 2 && ok; ++run) {
    ok = run_guarded([&] { return cmd_train(cfg, sink); }, std::cerr) == kExitOk;
    if (!ok) break;
    files.push_back(tree_bytes(root / "run", timed));
    reports.push_back(read_report(root / "run" / "report.json"));
  }
  bool train_same = false;
  if (ok) {
    const bool same_report = reports[0].same_results(reports[1]);
    const bool same_files = !files[0].empty() && files[0] == files[1];
    train_same = same_report && same_files;
    o.note(fmt("train: report results identical: %s; %zu checkpoint/csv files identical: %s",
               same_report ? "yes" : "no", files[0].size(), same_files ? "yes" : "no"));
  }
  ::unsetenv(kOutputRootEnv);
  fs::remove_all(root);
  o.pass = ok && corpus_same && train_same;
  return o;
}

// ---- 9 ----

Outcome sweep(const fs::path& work) {
  Outcome o;
  const ExperimentConfig cfg;
  const SweepAxes axes{{1, 2, 3}, {2, 3, 4, 5, 6}, {cfg.K}};
  SweepOptions opt;
  opt.out_dir = work / "sweep";
  fs::remove_all(*opt.out_dir);
  const auto t0 = Clock::now();
  const auto rows = run_sweep(cfg, default_corpus(), axes, opt);
  const double secs = seconds_since(t0);
  std::ofstream(*opt.out_dir / "sweep.csv") << sweep_csv(rows);
  bool ok = rows.size() == 15;
  std::size_t expected_skipped = 0;
  for (const auto S : axes.S)
    for (const auto M : axes.M) expected_skipped += S > M ? 1 : 0;
  std::size_t skipped = 0;
  for (const auto& r : rows) {
    if (r.skipped) {
      ++skipped;
      ok = ok && r.S > r.M;
      o.note(fmt("S=%zu M=%zu skipped", r.S, r.M));
      continue;
    }
    ok = ok && r.S <= r.M && std::isfinite(r.total) && r.tokens_per_sec > 0.0 && r.report.has_value();
    o.note(fmt("S=%zu M=%zu K=%zu total %.4f align %.4f router %.4f gen %.4f acc %.4f  %.0f tokens/s  %zu params",
               r.S, r.M, r.K, r.total, r.l_align, r.l_router, r.l_gen, r.alignment_accuracy, r.tokens_per_sec,
               r.parameter_count));
  }
  o.note(fmt("%zu rows, %zu skipped; csv at %s; runtime %.1f s (budget 1800 s)", rows.size(), skipped,
             (*opt.out_dir / "sweep.csv").c_str(), secs));
  o.pass = ok && skipped == expected_skipped && secs < 1800.0;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  log::set_level(log::Level::error);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const char* env = std::getenv("PVLAB_ACCEPTANCE_DIR");
  const fs::path work = env ? fs::path(env) : fs::temp_directory_path() / "pvlab_acceptance";
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite},
      {"MI estimator calibration", mi_calibration},
      {"alignment recovery", alignment_recovery},
      {"zero-shot transfer", zero_shot},
      {"router properties", router_properties},
      {"routing specialization", routing_specialization},
      {"metric suite", metric_suite},
      {"determinism", [&] { return determinism(work); }},
      {"sweep harness", [&] { return sweep(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.note(std::string("exception: ") + e.what());
    }
    failed += out.pass ? 0 : 1;
    std::cout << (out.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << criteria[i].first << "  ("
              << fmt("%.1f s", seconds_since(t0)) << ")\n";
    for (const auto& d : out.details) std::cout << "      " << d << "\n";
    std::cout << std::flush;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? 0 : 1;
}
