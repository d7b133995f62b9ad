// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "pvlab/common/errors.hpp"
#include "pvlab/harness/commands.hpp"
#include "pvlab/harness/config.hpp"
#include "pvlab/harness/evaluation.hpp"
#include "pvlab/harness/report.hpp"
#include "pvlab/harness/sweep.hpp"
#include "pvlab/harness/trainer.hpp"
#include "pvlab/metrics/landmark_io.hpp"
#include "pvlab/synthcorpus/corpus.hpp"
#include "pvlab/synthcorpus/render.hpp"

namespace fs = std::filesystem;

namespace pvlab {
namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.corpus_spec.K_true = 4;
  cfg.corpus_spec.d_p = 4;
  cfg.corpus_spec.d_v = 3;
  cfg.corpus_spec.languages = 3;
  cfg.corpus_spec.utterances = 6;
  cfg.corpus_spec.T = 16;
  cfg.corpus_spec.subset_size = 3;
  cfg.corpus_spec.unseen = {"lang2"};
  cfg.corpus_spec.seed = 3;
  cfg.K = 4;
  cfg.S = 1;
  cfg.M = 2;
  cfg.epochs = 2;
  cfg.steps_per_epoch = 3;
  cfg.batch = 16;
  cfg.window = 8;
  cfg.embed_dim = 8;
  cfg.expert_width = 8;
  cfg.disc_hidden = 8;
  cfg.kmeans_restarts = 1;
  cfg.holdout_fraction = 0.25;
  return cfg;
}

const Corpus& tiny_corpus() {
  static const Corpus c = build_corpus(tiny_config().corpus_spec);
  return c;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pvlab_test_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Config, ParseSetsValuesAndIgnoresComments) {
  const auto cfg = ExperimentConfig::parse("# comment\nK = 12\nS=3  # trailing\nM = 6\nbeta = 0.25\n"
                                           "disable_moe = true\ncorpus.unseen = lang3,lang4\ncorpus.languages = 6\n");
  EXPECT_EQ(cfg.K, 12u);
  EXPECT_EQ(cfg.S, 3u);
  EXPECT_EQ(cfg.M, 6u);
  EXPECT_DOUBLE_EQ(cfg.beta, 0.25);
  EXPECT_TRUE(cfg.disable_moe);
  EXPECT_EQ(cfg.corpus_spec.unseen, (std::vector<std::string>{"lang3", "lang4"}));
}

TEST(Config, ErrorsNameTheKeyAndLine) {
  auto message = [](const std::string& text) -> std::string {
    try {
      ExperimentConfig::parse(text, "x.conf");
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message("K = 8\nbogus = 1\n").find("x.conf:2"), std::string::npos);
  EXPECT_NE(message("bogus = 1\n").find("bogus"), std::string::npos);
  EXPECT_NE(message("K = 8\nK = 9\n").find("duplicate key 'K'"), std::string::npos);
  EXPECT_NE(message("K = eight\n").find("'K'"), std::string::npos);
  EXPECT_NE(message("lr = -1\n").find("lr"), std::string::npos);
  EXPECT_NE(message("S = 5\nM = 4\n").find("S"), std::string::npos);
  EXPECT_NE(message("K\n").find("key=value"), std::string::npos);
  EXPECT_NE(message("disable_moe = maybe\n").find("true/false"), std::string::npos);
}

TEST(Config, TextRoundTrip) {
  auto cfg = tiny_config();
  cfg.lambda_util = 0.125;
  cfg.flip_entropy_sign = true;
  const auto back = ExperimentConfig::parse(cfg.to_text());
  EXPECT_EQ(back.to_text(), cfg.to_text());
  EXPECT_EQ(back.to_json(), cfg.to_json());
  EXPECT_EQ(ExperimentConfig::keys().size(), cfg.to_json().size());
}

TEST(Config, ShippedFilesParse) {
  EXPECT_EQ(ExperimentConfig::load(fs::path(PVLAB_CONFIG_DIR) / "default.conf").to_text(), ExperimentConfig{}.to_text());
  for (const char* name : {"smoke.conf", "no_align.conf", "no_guidance.conf"}) {
    EXPECT_NO_THROW(ExperimentConfig::load(fs::path(PVLAB_CONFIG_DIR) / name)) << name;
  }
}

std::vector<std::size_t> brute_force_assignment(const Matrix& w) {
  std::vector<std::size_t> cols(w.cols);
  std::iota(cols.begin(), cols.end(), 0);
  double best = -1e300;
  std::vector<std::size_t> best_rows;
  do {
    double s = 0.0;
    for (std::size_t r = 0; r < w.rows; ++r) s += w(r, cols[r]);
    if (s > best + 1e-12) {
      best = s;
      best_rows.assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(w.rows));
    }
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best_rows;
}

double assignment_value(const Matrix& w, const std::vector<std::size_t>& a) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r] != kUnassigned) s += w(r, a[r]);
  }
  return s;
}

TEST(Evaluation, HungarianMatchesBruteForce) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 1 + trial % 5, cols = rows + (trial / 5) % 2;
    Matrix w(rows, cols);
    for (auto& v : w.data) v = std::floor(u(rng));
    const auto got = hungarian_max(w);
    ASSERT_EQ(got.size(), rows);
    std::vector<bool> used(cols, false);
    for (std::size_t c : got) {
      ASSERT_LT(c, cols);
      ASSERT_FALSE(used[c]);
      used[c] = true;
    }
    EXPECT_NEAR(assignment_value(w, got), assignment_value(w, brute_force_assignment(w)), 1e-9) << trial;
  }
}

TEST(Evaluation, HungarianSurplusRowsUnassigned) {
  Matrix w(3, 2);
  w(0, 0) = 1;
  w(1, 1) = 5;
  w(2, 0) = 4;
  const auto a = hungarian_max(w);
  EXPECT_EQ(a[0], kUnassigned);
  EXPECT_EQ(a[1], 1u);
  EXPECT_EQ(a[2], 0u);
}

double nmi_oracle(const std::vector<std::size_t>& x, const std::vector<std::size_t>& y) {
  std::map<std::size_t, double> px, py;
  std::map<std::pair<std::size_t, std::size_t>, double> pxy;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[x[i]] += 1.0 / n;
    py[y[i]] += 1.0 / n;
    pxy[{x[i], y[i]}] += 1.0 / n;
  }
  double hx = 0.0, hy = 0.0, mi = 0.0;
  for (auto [k, p] : px) hx -= p * std::log(p);
  for (auto [k, p] : py) hy -= p * std::log(p);
  for (auto [k, p] : pxy) mi += p * std::log(p / (px[k.first] * py[k.second]));
  return hx + hy == 0.0 ? 0.0 : mi / (0.5 * (hx + hy));
}

TEST(Evaluation, NmiKnownCasesAndOracle) {
  const std::vector<std::size_t> a{0, 0, 1, 1, 2, 2};
  const std::vector<std::size_t> relabeled{5, 5, 3, 3, 9, 9};
  EXPECT_NEAR(normalized_mutual_information(a, relabeled), 1.0, 1e-12);
  const std::vector<std::size_t> x{0, 0, 1, 1}, y{0, 1, 0, 1};
  EXPECT_NEAR(normalized_mutual_information(x, y), 0.0, 1e-12);
  EXPECT_EQ(normalized_mutual_information({1, 1, 1}, {2, 2, 2}), 0.0);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> p(50), q(50);
    for (std::size_t i = 0; i < 50; ++i) {
      p[i] = rng() % 4;
      q[i] = (rng() % 3 == 0) ? rng() % 5 : p[i];
    }
    const double got = normalized_mutual_information(p, q);
    EXPECT_NEAR(got, nmi_oracle(p, q), 1e-12);
    EXPECT_GE(got, -1e-12);
    EXPECT_LE(got, 1.0 + 1e-12);
  }
}

TEST(Evaluation, CorrespondenceRecoversPermutedCodes) {
  // Codes are arbitrary relabelings of the truth; the fitted map must undo them.
  const std::vector<std::size_t> perm_p{2, 0, 3, 1}, perm_v{1, 3, 0, 2};
  std::vector<std::size_t> pc, vc, tv;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::size_t v = rng() % 4;
    pc.push_back(perm_p[v]);
    vc.push_back(perm_v[v]);
    tv.push_back(v);
  }
  const auto map = fit_correspondence(pc, vc, tv, 4, 4);
  EXPECT_DOUBLE_EQ(correspondence_accuracy(map, pc, tv), 1.0);
  std::vector<std::size_t> noise(pc.size());
  for (auto& c : noise) c = rng() % 4;
  EXPECT_LT(correspondence_accuracy(fit_correspondence(noise, vc, tv, 4, 4), noise, tv), 0.6);
}

TEST(Report, JsonRoundTrip) {
  RunReport r;
  r.config = tiny_config().to_json();
  EpochRecord e;
  e.epoch = 1;
  e.total = 1.5;
  e.l_align = -0.25;
  e.alignment_accuracy = 0.75;
  e.refit = true;
  r.epochs = {e};
  r.held_out.name = "held_out";
  r.held_out.nmi = 0.4;
  r.held_out.usage = {3, 4};
  r.zero_shot.name = "zero_shot";
  r.steps = 7;
  r.tokens = 700;
  r.wall_clock_s = 1.25;
  r.tokens_per_sec = 560.0;
  const auto back = RunReport::from_json(r.to_json());
  EXPECT_EQ(back, r);
  auto other = r;
  other.wall_clock_s = 9.0;
  EXPECT_TRUE(other.same_results(r));
  other.epochs[0].total = 1.6;
  EXPECT_FALSE(other.same_results(r));
  EXPECT_FALSE(r.table().empty());
  EXPECT_NE(r.epochs_csv().find("\n1,"), std::string::npos);
}

TEST(Sweep, ParseAxis) {
  EXPECT_EQ(parse_axis("1,2,3", "S"), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(parse_axis("2..6", "M"), (std::vector<std::size_t>{2, 3, 4, 5, 6}));
  EXPECT_EQ(parse_axis("1,3..5", "M"), (std::vector<std::size_t>{1, 3, 4, 5}));
  EXPECT_EQ(parse_axis("4", "K"), (std::vector<std::size_t>{4}));
  EXPECT_THROW(parse_axis("", "S"), ConfigError);
  EXPECT_THROW(parse_axis("5..2", "S"), ConfigError);
  EXPECT_THROW(parse_axis("a", "S"), ConfigError);
}

TEST(Trainer, SplitIsDisjointAndComplete) {
  const auto split = split_corpus(tiny_corpus(), 0.25);
  std::size_t seen = 0;
  for (const Language* l : tiny_corpus().seen()) seen += l->utterances.size();
  EXPECT_EQ(split.train.size() + split.held_out.size(), seen);
  EXPECT_FALSE(split.held_out.empty());
  EXPECT_EQ(split.zero_shot.size(), tiny_corpus().language("lang2").utterances.size());
  for (const Utterance* u : split.held_out) {
    EXPECT_EQ(std::count(split.train.begin(), split.train.end(), u), 0);
  }
}

TEST(Trainer, ZeroEpochsReportsInitialization) {
  auto cfg = tiny_config();
  cfg.epochs = 0;
  const auto res = train(cfg, tiny_corpus());
  EXPECT_TRUE(res.report.epochs.empty());
  EXPECT_EQ(res.report.steps, 0u);
  EXPECT_EQ(res.report.held_out.name, "held_out");
  EXPECT_GE(res.report.held_out.alignment_accuracy, 0.0);
  EXPECT_LE(res.report.held_out.alignment_accuracy, 1.0);
  EXPECT_GT(res.report.parameter_count, 0u);
}

TEST(Trainer, RunsAndIsDeterministic) {
  const auto a = train(tiny_config(), tiny_corpus());
  const auto b = train(tiny_config(), tiny_corpus());
  ASSERT_EQ(a.report.epochs.size(), 2u);
  EXPECT_TRUE(a.report.same_results(b.report));
  for (const auto& e : a.report.epochs) {
    EXPECT_TRUE(std::isfinite(e.total));
    EXPECT_NEAR(e.total, e.l_align + e.l_router + e.l_gen, 1e-9 * std::max(1.0, std::abs(e.total)));
  }
  EXPECT_EQ(a.report.steps, 6u);
  EXPECT_EQ(a.report.held_out.usage.size(), 2u);
}

TEST(Trainer, AlignmentAblationZeroesAlignTerm) {
  auto cfg = tiny_config();
  cfg.disable_pv_align = true;
  const auto res = train(cfg, tiny_corpus());
  for (const auto& e : res.report.epochs) EXPECT_EQ(e.l_align, 0.0);
}

TEST(Trainer, WritesReportAndCheckpoint) {
  const auto dir = scratch("train");
  TrainOptions opt;
  opt.out_dir = dir;
  std::size_t seen = 0;
  opt.on_epoch = [&](const EpochRecord&) { ++seen; };
  const auto res = train(tiny_config(), tiny_corpus(), opt);
  EXPECT_EQ(seen, 2u);
  const auto back = read_report(dir / "report.json");
  EXPECT_TRUE(back.same_results(res.report));
  auto model = Model::create(tiny_config(), 4, 3);
  model.load(dir / "checkpoint");
  const Matrix x(5, 4, 0.3);
  EXPECT_EQ(model.encode_p(x).data, res.model.encode_p(x).data);
  fs::remove_all(dir);
}

TEST(Sweep, SkipsInvalidCombinationsAndMatchesTrain) {
  SweepAxes axes{{1, 2, 3}, {2, 3}, {4}};
  std::size_t streamed = 0;
  SweepOptions opt;
  opt.on_row = [&](const SweepRow&) { ++streamed; };
  const auto rows = run_sweep(tiny_config(), tiny_corpus(), axes, opt);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(streamed, 6u);
  std::size_t valid = 0;
  for (const auto& r : rows) {
    EXPECT_EQ(r.skipped, r.S > r.M) << r.S << "," << r.M;
    if (r.skipped) {
      EXPECT_FALSE(r.reason.empty());
      EXPECT_FALSE(r.report.has_value());
      continue;
    }
    ++valid;
    ASSERT_TRUE(r.report.has_value());
    EXPECT_GT(r.tokens_per_sec, 0.0);
    EXPECT_GT(r.parameter_count, 0u);
  }
  EXPECT_EQ(valid, 5u);
  auto cfg = tiny_config();
  cfg.S = 2;
  cfg.M = 3;
  const auto direct = train(cfg, tiny_corpus());
  const auto it = std::find_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.S == 2 && r.M == 3; });
  EXPECT_TRUE(it->report->same_results(direct.report));
  EXPECT_DOUBLE_EQ(it->alignment_accuracy, direct.report.held_out.alignment_accuracy);
  const std::string csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), sweep_csv_header());
  EXPECT_NE(csv.find("3,2,4,skipped"), std::string::npos);
}

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = scratch("cmd");
    ::setenv(kOutputRootEnv, root_.c_str(), 1);
  }
  void TearDown() override {
    ::unsetenv(kOutputRootEnv);
    fs::remove_all(root_);
  }
  fs::path root_;
};

TEST_F(Commands, OutputRootPrefixesRelativePaths) {
  EXPECT_EQ(resolve_output("a/b"), root_ / "a/b");
  EXPECT_EQ(resolve_output("/abs/x"), fs::path("/abs/x"));
}

TEST_F(Commands, ExitCodes) {
  std::ostringstream err;
  EXPECT_EQ(run_guarded([] { return 0; }, err), kExitOk);
  EXPECT_EQ(run_guarded([]() -> int { throw ConfigError("c"); }, err), kExitConfig);
  EXPECT_EQ(run_guarded([]() -> int { throw DimensionError("d"); }, err), kExitConfig);
  EXPECT_EQ(run_guarded([]() -> int { throw IoError("i"); }, err), kExitIo);
  EXPECT_EQ(run_guarded([]() -> int { throw NumericalError("n"); }, err), kExitNumerical);
  EXPECT_NE(err.str().find("error"), std::string::npos);
  auto cfg = tiny_config();
  cfg.corpus = "missing_corpus";
  std::ostringstream out;
  EXPECT_EQ(run_guarded([&] { return cmd_train(cfg, out); }, err), kExitIo);
  EXPECT_EQ(run_guarded([&] { return cmd_report(root_ / "nothing", false, out); }, err), kExitIo);
}

TEST_F(Commands, GradcheckPassesAndFlagsCorruption) {
  std::ostringstream ok, bad;
  EXPECT_EQ(cmd_gradcheck({}, ok), kExitOk);
  GradcheckOptions opt;
  opt.corrupt_family = "router";
  EXPECT_EQ(cmd_gradcheck(opt, bad), kExitVerification);
  EXPECT_NE(bad.str().find("gradient check failed: router"), std::string::npos);
}

TEST_F(Commands, SynthTrainReport) {
  auto cfg = tiny_config();
  std::ostringstream out, err;
  ASSERT_EQ(run_guarded([&] { return cmd_synth(cfg, out); }, err), kExitOk) << err.str();
  EXPECT_TRUE(fs::exists(root_ / "corpus" / "manifest.json"));
  EXPECT_NE(out.str().find("content_hash "), std::string::npos);
  ASSERT_EQ(run_guarded([&] { return cmd_train(cfg, out); }, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("epoch   2"), std::string::npos);
  std::ostringstream rep;
  ASSERT_EQ(cmd_report(root_ / "run", true, rep), kExitOk);
  const auto j = nlohmann::json::parse(rep.str());
  EXPECT_EQ(j.at("epochs").size(), 2u);
}

TEST_F(Commands, EvalSelfAndShift) {
  const auto real = root_ / "real", gen = root_ / "gen";
  fs::create_directories(real);
  fs::create_directories(gen);
  for (int i = 0; i < 10; ++i) {
    std::vector<MouthShape> shapes;
    for (int t = 0; t < 12; ++t) shapes.push_back({1.0 + 0.1 * ((t + i) % 4), 0.5 + 0.05 * (t % 3)});
    const auto seq = render_landmarks(shapes);
    const std::string name = "clip" + std::to_string(i) + ".landmarks.json";
    save_landmarks(real / name, seq);
    std::vector<double> c = seq.coords();
    for (std::size_t k = 0; k < c.size(); k += 2) {
      c[k] += 3.0;
      c[k + 1] += 4.0;
    }
    save_landmarks(gen / name, LandmarkSequence(c));
  }
  EvalRequest req;
  req.real = {real};
  req.generated = {gen};
  std::ostringstream out;
  ASSERT_EQ(cmd_eval(req, out), kExitOk);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, metrics_csv_header());
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    std::istringstream f(line);
    std::string id, lse, tm;
    std::getline(f, id, ',');
    std::getline(f, lse, ',');
    std::getline(f, tm, ',');
    EXPECT_EQ(id.rfind("clip", 0), 0u);
    EXPECT_NEAR(std::stod(lse), 5.0, 1e-12);
    EXPECT_NEAR(std::stod(tm), 1.0, 1e-9);
  }
  EXPECT_EQ(rows, 10u);

  req.generated = {real};
  req.csv = "metrics.csv";
  std::ostringstream msg;
  ASSERT_EQ(cmd_eval(req, msg), kExitOk);
  std::ifstream csv(root_ / "metrics.csv");
  std::getline(csv, line);
  std::getline(csv, line);
  EXPECT_NE(line.find(",0,1,"), std::string::npos) << line;

  req.csv.reset();
  req.normalize = true;
  req.generated = {gen};
  std::ostringstream norm;
  ASSERT_EQ(cmd_eval(req, norm), kExitOk);
  EXPECT_NE(norm.str().find(",0,1,"), std::string::npos);
}

}  // namespace
}  // namespace pvlab
