// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/harness/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <string_view>

#include <json.hpp>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/log.hpp"
#include "pvlab/harness/trainer.hpp"
#include "pvlab/metrics/landmark_io.hpp"
#include "pvlab/metrics/sync_metrics.hpp"
#include "pvlab/synthcorpus/corpus.hpp"

namespace fs = std::filesystem;

namespace pvlab {
namespace {

struct Pair {
  std::string id;
  fs::path real, generated;
};

constexpr std::string_view kLandmarkSuffix = ".landmarks.json";

bool has_suffix(const fs::path& p, std::string_view suffix) {
  const std::string name = p.filename().string();
  return name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Landmark files in a directory. Corpus directories also hold frame and
// utterance JSON, so *.landmarks.json wins when present.
std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> all, marked;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    all.push_back(e.path());
    if (has_suffix(e.path(), kLandmarkSuffix)) marked.push_back(e.path());
  }
  std::vector<fs::path>& out = marked.empty() ? all : marked;
  std::sort(out.begin(), out.end());
  return out;
}

std::string pair_id(const fs::path& p) {
  const std::string name = p.filename().string();
  if (has_suffix(p, kLandmarkSuffix)) return name.substr(0, name.size() - kLandmarkSuffix.size());
  return p.stem().string();
}

std::vector<Pair> eval_pairs(const EvalRequest& req) {
  if (req.real.size() != req.generated.size()) {
    throw ConfigError("eval: " + std::to_string(req.real.size()) + " real inputs but " +
                      std::to_string(req.generated.size()) + " generated inputs");
  }
  if (req.real.empty()) throw ConfigError("eval: no inputs");
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < req.real.size(); ++i) {
    const fs::path& r = req.real[i];
    const fs::path& g = req.generated[i];
    if (!fs::exists(r)) throw IoError("eval: " + r.string() + " does not exist");
    if (!fs::exists(g)) throw IoError("eval: " + g.string() + " does not exist");
    if (fs::is_directory(r) != fs::is_directory(g)) {
      throw ConfigError("eval: " + r.string() + " and " + g.string() + " must both be files or both directories");
    }
    if (!fs::is_directory(r)) {
      pairs.push_back({pair_id(g), r, g});
      continue;
    }
    for (const fs::path& rf : json_files(r)) {
      const fs::path gf = g / rf.filename();
      if (!fs::exists(gf)) throw IoError("eval: no generated file matching " + rf.string());
      pairs.push_back({pair_id(rf), rf, gf});
    }
    if (json_files(g).size() != json_files(r).size()) {
      throw ConfigError("eval: " + g.string() + " has files without a real counterpart");
    }
  }
  return pairs;
}

}  // namespace

fs::path resolve_output(const fs::path& p) {
  if (p.is_absolute()) return p;
  const char* root = std::getenv(kOutputRootEnv);
  if (root == nullptr || *root == '\0') return p;
  return fs::path(root) / p;
}

int run_guarded(const std::function<int()>& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitVerification;
  }
}

int cmd_synth(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const fs::path dir = resolve_output(cfg.corpus);
  const Corpus corpus = build_corpus(cfg.corpus_spec);
  const std::string hash = save_corpus(corpus, dir);
  out << "corpus " << dir.string() << "\n";
  out << "languages " << corpus.languages.size() << "\n";
  out << "content_hash " << hash << "\n";
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Corpus corpus = load_corpus(resolve_output(cfg.corpus));
  TrainOptions opt;
  opt.out_dir = resolve_output(cfg.out);
  opt.on_epoch = [&out](const EpochRecord& e) {
    char line[160];
    std::snprintf(line, sizeof line, "epoch %3zu  total %.5f  align %.5f  router %.5f  gen %.5f  acc %.4f%s\n", e.epoch,
                  e.total, e.l_align, e.l_router, e.l_gen, e.alignment_accuracy, e.refit ? "  refit" : "");
    out << line << std::flush;
  };
  try {
    const TrainResult result = train(cfg, corpus, opt);
    out << result.report.table();
    out << "run " << opt.out_dir->string() << "\n";
  } catch (const TrainingAborted& e) {
    out << "training aborted; last good checkpoint in " << (*opt.out_dir / "checkpoint").string() << "\n";
    throw;
  }
  return kExitOk;
}

int cmd_eval(const EvalRequest& req, std::ostream& out) {
  const std::vector<Pair> pairs = eval_pairs(req);
  std::string csv = metrics_csv_header() + "\n";
  for (const Pair& p : pairs) {
    LandmarkSequence real = load_landmarks(p.real, LandmarkRole::real);
    LandmarkSequence gen = load_landmarks(p.generated, LandmarkRole::generated);
    if (req.normalize) {
      real = normalize_landmarks(real);
      gen = normalize_landmarks(gen);
    }
    csv += metrics_csv_row(p.id, lse_d(real, gen), tmdc_detail(real, gen)) + "\n";
  }
  if (req.csv) {
    const fs::path path = resolve_output(*req.csv);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw IoError("eval: cannot write " + path.string());
    f << csv;
    if (!f) throw IoError("eval: write failed for " + path.string());
    out << pairs.size() << " rows written to " << path.string() << "\n";
  } else {
    out << csv;
  }
  return kExitOk;
}

int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out) {
  const auto rows = run_gradcheck_suite(options);
  out << gradcheck_table(rows);
  bool ok = true;
  for (const auto& r : rows) {
    if (!r.passed) {
      ok = false;
      out << "gradient check failed: " << r.family << "\n";
    }
  }
  return ok ? kExitOk : kExitVerification;
}

int cmd_sweep(const ExperimentConfig& cfg, const SweepAxes& axes, std::ostream& out) {
  const Corpus corpus = load_corpus(resolve_output(cfg.corpus));
  const fs::path dir = resolve_output(cfg.out);
  fs::create_directories(dir);
  SweepOptions opt;
  opt.out_dir = dir;
  const fs::path csv_path = dir / "sweep.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("sweep: cannot write " + csv_path.string());
  csv << sweep_csv_header() << "\n";
  out << sweep_csv_header() << "\n";
  opt.on_row = [&](const SweepRow& row) {
    csv << sweep_csv_row(row) << "\n" << std::flush;
    out << sweep_csv_row(row) << "\n" << std::flush;
  };
  run_sweep(cfg, corpus, axes, opt);
  if (!csv) throw IoError("sweep: write failed for " + csv_path.string());
  return kExitOk;
}

int cmd_report(const fs::path& run_dir, bool as_json, std::ostream& out) {
  const fs::path path = fs::is_directory(run_dir) ? run_dir / "report.json" : run_dir;
  const RunReport report = read_report(path);
  if (as_json) {
    out << report.to_json().dump(2) << "\n";
  } else {
    out << report.table();
  }
  return kExitOk;
}

}  // namespace pvlab
