// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/log.hpp"
#include "pvlab/harness/commands.hpp"

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
  std::string corpus;
  std::string out;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("-c,--config", a.file, "Config file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", a.overrides, "Override a config key, KEY=VALUE (repeatable)");
  cmd->add_option("--corpus", a.corpus, "Corpus directory (config key 'corpus')");
  cmd->add_option("-o,--out", a.out, "Output directory (config key 'out')");
}

pvlab::ExperimentConfig load_config(const ConfigArgs& a) {
  pvlab::ExperimentConfig cfg = a.file.empty() ? pvlab::ExperimentConfig{} : pvlab::ExperimentConfig::load(a.file);
  for (const std::string& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw pvlab::ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!a.corpus.empty()) cfg.corpus = a.corpus;
  if (!a.out.empty()) cfg.out = a.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pvlab: phoneme-viseme alignment and guided mixture-of-experts lab"};
  app.require_subcommand(1);
  std::string level = "info";
  app.add_option("--log-level", level, "debug, info, warn, error or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

  ConfigArgs synth_args, train_args, sweep_args;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic multilingual corpus");
  add_config_options(synth, synth_args);

  auto* train = app.add_subcommand("train", "Train on a corpus and write report and checkpoints");
  add_config_options(train, train_args);

  pvlab::EvalRequest eval_req;
  std::vector<std::string> real_paths, gen_paths;
  std::string csv_path;
  auto* eval = app.add_subcommand("eval", "Lip-sync metrics for real/generated landmark pairs");
  eval->add_option("-r,--real", real_paths, "Real landmark file or directory (repeatable)")->required();
  eval->add_option("-g,--gen", gen_paths, "Generated landmark file or directory (repeatable)")->required();
  eval->add_flag("-n,--normalize", eval_req.normalize, "Centre and scale each frame before scoring");
  eval->add_option("--csv", csv_path, "Write the CSV here instead of stdout");

  pvlab::GradcheckOptions gc_opts;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss family");
  gradcheck->add_option("--corrupt", gc_opts.corrupt_family, "Fault injection: perturb one family's gradient")
      ->group("");

  std::string s_axis = "1..3", m_axis = "2..6", k_axis;
  auto* sweep = app.add_subcommand("sweep", "Train over a grid of (S, M, K)");
  add_config_options(sweep, sweep_args);
  sweep->add_option("--S", s_axis, "Active experts per frame, e.g. 1..3")->capture_default_str();
  sweep->add_option("--M", m_axis, "Expert count, e.g. 2..6")->capture_default_str();
  sweep->add_option("--K", k_axis, "Prototype counts; defaults to the config value");

  std::string run_dir;
  bool as_json = false;
  auto* report = app.add_subcommand("report", "Print a saved run report");
  report->add_option("run", run_dir, "Run directory or report.json")->required();
  report->add_flag("--json", as_json, "Print JSON instead of the table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pvlab::kExitConfig;
  }

  const std::pair<const char*, pvlab::log::Level> levels[] = {{"debug", pvlab::log::Level::debug},
                                                              {"info", pvlab::log::Level::info},
                                                              {"warn", pvlab::log::Level::warn},
                                                              {"error", pvlab::log::Level::error},
                                                              {"off", pvlab::log::Level::off}};
  for (const auto& [name, lv] : levels)
    if (level == name) pvlab::log::set_level(lv);

  return pvlab::run_guarded(
      [&]() -> int {
        if (synth->parsed()) return pvlab::cmd_synth(load_config(synth_args), std::cout);
        if (train->parsed()) return pvlab::cmd_train(load_config(train_args), std::cout);
        if (eval->parsed()) {
          for (const auto& p : real_paths) eval_req.real.emplace_back(p);
          for (const auto& p : gen_paths) eval_req.generated.emplace_back(p);
          if (!csv_path.empty()) eval_req.csv = csv_path;
          return pvlab::cmd_eval(eval_req, std::cout);
        }
        if (gradcheck->parsed()) return pvlab::cmd_gradcheck(gc_opts, std::cout);
        if (sweep->parsed()) {
          const pvlab::ExperimentConfig cfg = load_config(sweep_args);
          pvlab::SweepAxes axes;
          axes.S = pvlab::parse_axis(s_axis, "S");
          axes.M = pvlab::parse_axis(m_axis, "M");
          if (!k_axis.empty()) axes.K = pvlab::parse_axis(k_axis, "K");
          return pvlab::cmd_sweep(cfg, axes, std::cout);
        }
        return pvlab::cmd_report(run_dir, as_json, std::cout);
      },
      std::cerr);
}
