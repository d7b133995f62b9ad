// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/harness/report.hpp"

#include <cstdio>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"

namespace pvlab {

using nlohmann::json;

namespace {

json epoch_json(const EpochRecord& e) {
  return {{"epoch", e.epoch},
          {"L_align", e.l_align},
          {"L_router", e.l_router},
          {"L_gen", e.l_gen},
          {"total", e.total},
          {"mi_proto", e.mi_proto},
          {"mi_raw", e.mi_raw},
          {"route", e.route},
          {"utilization", e.utilization},
          {"entropy", e.entropy},
          {"alignment_accuracy", e.alignment_accuracy},
          {"refit", e.refit},
          {"skipped_steps", e.skipped_steps}};
}

EpochRecord epoch_from(const json& j) {
  EpochRecord e;
  e.epoch = j.at("epoch").get<std::size_t>();
  e.l_align = j.at("L_align").get<double>();
  e.l_router = j.at("L_router").get<double>();
  e.l_gen = j.at("L_gen").get<double>();
  e.total = j.at("total").get<double>();
  e.mi_proto = j.at("mi_proto").get<double>();
  e.mi_raw = j.at("mi_raw").get<double>();
  e.route = j.at("route").get<double>();
  e.utilization = j.at("utilization").get<double>();
  e.entropy = j.at("entropy").get<double>();
  e.alignment_accuracy = j.at("alignment_accuracy").get<double>();
  e.refit = j.at("refit").get<bool>();
  e.skipped_steps = j.at("skipped_steps").get<std::size_t>();
  return e;
}

}  // namespace

json RunReport::to_json() const {
  json ep = json::array();
  for (const auto& e : epochs) ep.push_back(epoch_json(e));
  return {{"format", "pvlab.report.v1"},
          {"config", config},
          {"status", status},
          {"epochs", ep},
          {"train_accuracy", train_accuracy},
          {"held_out", held_out.to_json()},
          {"zero_shot", zero_shot.to_json()},
          {"steps", steps},
          {"tokens", tokens},
          {"parameter_count", parameter_count},
          {"wall_clock_s", wall_clock_s},
          {"tokens_per_sec", tokens_per_sec}};
}

RunReport RunReport::from_json(const json& j) {
  RunReport r;
  try {
    if (j.at("format").get<std::string>() != "pvlab.report.v1") throw ConfigError("unknown report format");
    r.config = j.at("config");
    r.status = j.at("status").get<std::string>();
    for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_from(e));
    r.train_accuracy = j.at("train_accuracy").get<double>();
    r.held_out = SetMetrics::from_json(j.at("held_out"));
    r.zero_shot = SetMetrics::from_json(j.at("zero_shot"));
    r.steps = j.at("steps").get<std::size_t>();
    r.tokens = j.at("tokens").get<std::size_t>();
    r.parameter_count = j.at("parameter_count").get<std::size_t>();
    r.wall_clock_s = j.at("wall_clock_s").get<double>();
    r.tokens_per_sec = j.at("tokens_per_sec").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run report: ") + e.what());
  }
  return r;
}

bool RunReport::same_results(const RunReport& other) const {
  RunReport a = *this, b = other;
  a.wall_clock_s = b.wall_clock_s = 0.0;
  a.tokens_per_sec = b.tokens_per_sec = 0.0;
  return a == b;
}

std::string RunReport::table() const {
  std::string out;
  char line[256];
  out += "status: " + status + "\n";
  out += "epoch    L_align   L_router      L_gen      total   acc\n";
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof line, "%5zu %10.4f %10.4f %10.4f %10.4f %5.3f%s\n", e.epoch, e.l_align, e.l_router,
                  e.l_gen, e.total, e.alignment_accuracy, e.refit ? "  refit" : "");
    out += line;
  }
  out += "\nset          frames  align_acc    NMI     LSE-D    TMDC\n";
  for (const SetMetrics* m : {&held_out, &zero_shot}) {
    std::snprintf(line, sizeof line, "%-12s %6zu %10.4f %6.3f %9.4f %7.4f\n", m->name.c_str(), m->frames,
                  m->alignment_accuracy, m->nmi, m->lse_d, m->tmdc);
    out += line;
  }
  out += "\nexpert usage (held-out):";
  for (std::size_t c : held_out.usage) out += " " + std::to_string(c);
  std::snprintf(line, sizeof line, "\ntrain accuracy %.4f, %zu steps, %zu params, %.1f s, %.0f tokens/s\n",
                train_accuracy, steps, parameter_count, wall_clock_s, tokens_per_sec);
  out += line;
  return out;
}

std::string RunReport::epochs_csv() const {
  std::string out = "epoch,L_align,L_router,L_gen,total,mi_proto,mi_raw,route,utilization,entropy,alignment_accuracy\n";
  char line[512];
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                  e.l_align, e.l_router, e.l_gen, e.total, e.mi_proto, e.mi_raw, e.route, e.utilization, e.entropy,
                  e.alignment_accuracy);
    out += line;
  }
  return out;
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_json(dir / "report.json", report.to_json());
  io::write_text(dir / "report.txt", report.table());
  io::write_text(dir / "epochs.csv", report.epochs_csv());
}

RunReport read_report(const std::filesystem::path& path) { return RunReport::from_json(io::read_json(path)); }

}  // namespace pvlab
