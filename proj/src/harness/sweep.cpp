// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/harness/sweep.hpp"

#include <cstdio>
#include <sstream>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/log.hpp"
#include "pvlab/harness/trainer.hpp"

namespace pvlab {
namespace {

std::size_t parse_count(const std::string& s, const std::string& name) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || s.front() == '-') throw ConfigError("sweep axis " + name + ": bad value '" + s + "'");
  return static_cast<std::size_t>(v);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<std::size_t> parse_axis(const std::string& text, const std::string& name) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_count(item, name));
      continue;
    }
    const std::size_t lo = parse_count(item.substr(0, dots), name);
    const std::size_t hi = parse_count(item.substr(dots + 2), name);
    if (hi < lo) throw ConfigError("sweep axis " + name + ": empty range '" + item + "'");
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("sweep axis " + name + " is empty");
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const Corpus& corpus, const SweepAxes& axes,
                                const SweepOptions& options) {
  const std::vector<std::size_t> Ks = axes.K.empty() ? std::vector<std::size_t>{base.K} : axes.K;
  const std::vector<std::size_t> Ss = axes.S.empty() ? std::vector<std::size_t>{base.S} : axes.S;
  const std::vector<std::size_t> Ms = axes.M.empty() ? std::vector<std::size_t>{base.M} : axes.M;
  std::vector<SweepRow> rows;
  for (std::size_t K : Ks) {
    for (std::size_t S : Ss) {
      for (std::size_t M : Ms) {
        SweepRow row;
        row.S = S;
        row.M = M;
        row.K = K;
        ExperimentConfig cfg = base;
        cfg.S = S;
        cfg.M = M;
        cfg.K = K;
        try {
          cfg.validate();
        } catch (const ConfigError& e) {
          row.skipped = true;
          row.reason = e.what();
        }
        if (!row.skipped) {
          TrainOptions topt;
          if (options.out_dir) {
            topt.out_dir = *options.out_dir / ("S" + std::to_string(S) + "_M" + std::to_string(M) + "_K" + std::to_string(K));
          }
          log::info("sweep: S=" + std::to_string(S) + " M=" + std::to_string(M) + " K=" + std::to_string(K));
          RunReport report = train(cfg, corpus, topt).report;
          if (!report.epochs.empty()) {
            const EpochRecord& last = report.epochs.back();
            row.l_align = last.l_align;
            row.l_router = last.l_router;
            row.l_gen = last.l_gen;
            row.total = last.total;
          }
          row.alignment_accuracy = report.held_out.alignment_accuracy;
          row.tokens_per_sec = report.tokens_per_sec;
          row.parameter_count = report.parameter_count;
          row.report = std::move(report);
        } else {
          log::warn("sweep: skipping S=" + std::to_string(S) + " M=" + std::to_string(M) + " K=" + std::to_string(K) +
                    ": " + row.reason);
        }
        if (options.on_row) options.on_row(row);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string sweep_csv_header() {
  return "S,M,K,status,l_align,l_router,l_gen,total,alignment_accuracy,tokens_per_sec,parameter_count";
}

std::string sweep_csv_row(const SweepRow& r) {
  std::string s = std::to_string(r.S) + "," + std::to_string(r.M) + "," + std::to_string(r.K) + ",";
  if (r.skipped) return s + "skipped,,,,,,,";
  s += "ok," + format_double(r.l_align) + "," + format_double(r.l_router) + "," + format_double(r.l_gen) + "," +
       format_double(r.total) + "," + format_double(r.alignment_accuracy) + "," + format_double(r.tokens_per_sec) + "," +
       std::to_string(r.parameter_count);
  return s;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = sweep_csv_header() + "\n";
  for (const auto& r : rows) out += sweep_csv_row(r) + "\n";
  return out;
}

}  // namespace pvlab
