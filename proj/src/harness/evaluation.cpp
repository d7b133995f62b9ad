// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/harness/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pvlab/common/errors.hpp"
#include "pvlab/synthcorpus/render.hpp"

namespace pvlab {
namespace {

// Shortest augmenting path assignment for an n x m cost matrix, n <= m.
std::vector<std::size_t> hungarian_min(const Matrix& cost) {
  const std::size_t n = cost.rows, m = cost.cols;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<bool> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, kUnassigned);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

double entropy(const std::map<std::size_t, double>& counts, double n) {
  double h = 0.0;
  for (const auto& [k, c] : counts) {
    const double p = c / n;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace

std::vector<std::size_t> hungarian_max(const Matrix& weight) {
  if (weight.rows == 0 || weight.cols == 0) return std::vector<std::size_t>(weight.rows, kUnassigned);
  if (!all_finite(weight.data)) throw NumericalError("hungarian_max: non-finite weight");
  if (weight.rows <= weight.cols) {
    Matrix cost(weight.rows, weight.cols);
    for (std::size_t i = 0; i < weight.size(); ++i) cost.data[i] = -weight.data[i];
    return hungarian_min(cost);
  }
  Matrix cost(weight.cols, weight.rows);
  for (std::size_t i = 0; i < weight.rows; ++i) {
    for (std::size_t j = 0; j < weight.cols; ++j) cost(j, i) = -weight(i, j);
  }
  const auto col_to_row = hungarian_min(cost);
  std::vector<std::size_t> out(weight.rows, kUnassigned);
  for (std::size_t j = 0; j < col_to_row.size(); ++j) out[col_to_row[j]] = j;
  return out;
}

CorrespondenceMap fit_correspondence(const std::vector<std::size_t>& phoneme_codes,
                                     const std::vector<std::size_t>& viseme_codes,
                                     const std::vector<std::size_t>& true_visemes, std::size_t K,
                                     std::size_t K_true) {
  if (phoneme_codes.size() != viseme_codes.size() || phoneme_codes.size() != true_visemes.size()) {
    throw DimensionError("fit_correspondence: code sequences differ in length");
  }
  Matrix co(K, K, 0.0), lab(K, K_true, 0.0);
  for (std::size_t t = 0; t < phoneme_codes.size(); ++t) {
    if (phoneme_codes[t] >= K || viseme_codes[t] >= K || true_visemes[t] >= K_true) {
      throw ConfigError("fit_correspondence: code out of range");
    }
    co(phoneme_codes[t], viseme_codes[t]) += 1.0;
    lab(viseme_codes[t], true_visemes[t]) += 1.0;
  }
  CorrespondenceMap map;
  map.phoneme_to_viseme_code = hungarian_max(co);
  map.viseme_code_label = hungarian_max(lab);
  for (std::size_t c = 0; c < K; ++c) {
    if (map.viseme_code_label[c] != kUnassigned) continue;
    const auto row = lab.row(c);
    map.viseme_code_label[c] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return map;
}

double correspondence_accuracy(const CorrespondenceMap& map, const std::vector<std::size_t>& phoneme_codes,
                               const std::vector<std::size_t>& true_visemes) {
  if (phoneme_codes.size() != true_visemes.size()) throw DimensionError("correspondence_accuracy: length mismatch");
  if (phoneme_codes.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t t = 0; t < phoneme_codes.size(); ++t) hit += map.predict(phoneme_codes[t]) == true_visemes[t];
  return static_cast<double>(hit) / static_cast<double>(phoneme_codes.size());
}

double normalized_mutual_information(const std::vector<std::size_t>& xs, const std::vector<std::size_t>& ys) {
  if (xs.size() != ys.size()) throw DimensionError(dimension_message("nmi length", xs.size(), ys.size()));
  if (xs.empty()) return 0.0;
  const double n = static_cast<double>(xs.size());
  std::map<std::size_t, double> cx, cy;
  std::map<std::pair<std::size_t, std::size_t>, double> cxy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cx[xs[i]] += 1.0;
    cy[ys[i]] += 1.0;
    cxy[{xs[i], ys[i]}] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [k, c] : cxy) {
    mi += (c / n) * std::log(c * n / (cx[k.first] * cy[k.second]));
  }
  const double hx = entropy(cx, n), hy = entropy(cy, n);
  if (hx + hy <= 0.0) return 0.0;
  return std::clamp(2.0 * mi / (hx + hy), 0.0, 1.0);
}

Inference infer(const Model& model, const std::vector<const Utterance*>& utts, const Universe& universe,
                bool generate) {
  Inference out;
  out.usage.assign(model.experts.size(), 0);
  std::size_t scored = 0;
  for (const Utterance* u : utts) {
    Tape tape;
    const Pass pass = run_model(tape, model, u->z_p, u->z_v);
    const Matrix& ep = tape.value(pass.e_p);
    const Matrix& ev = tape.value(pass.e_v);
    const auto cp = hard_assign_rows(ep, *model.bank_p);
    const auto cv = hard_assign_rows(ev, *model.bank_v);
    out.phoneme_codes.insert(out.phoneme_codes.end(), cp.begin(), cp.end());
    out.viseme_codes.insert(out.viseme_codes.end(), cv.begin(), cv.end());
    for (std::size_t t = 0; t < u->length(); ++t) {
      out.true_phonemes.push_back(u->phonemes[t]);
      out.true_visemes.push_back(u->viseme(t, universe));
      if (pass.routing) {
        const auto& sel = pass.routing->outcomes[t].selected;
        out.top_expert.push_back(sel.front());
        for (std::size_t e : sel) ++out.usage[e];
      } else {
        out.top_expert.push_back(0);
        ++out.usage[0];
      }
    }
    if (generate) {
      const FrameSequence frames = FrameSequence::from_matrix(tape.value(pass.frames));
      const LandmarkSequence gen = landmarks_from_frames(frames);
      out.lse_d += lse_d(u->landmarks, gen);
      const TmdcResult tm = tmdc_detail(u->landmarks, gen, false);
      out.tmdc.score += tm.score;
      for (std::size_t k = 0; k < kMouthFeatures; ++k) out.tmdc.r[k] += tm.r[k];
      out.tmdc.zero_variance += tm.zero_variance;
      ++scored;
    }
  }
  if (scored > 0) {
    const double inv = 1.0 / static_cast<double>(scored);
    out.lse_d *= inv;
    out.tmdc.score *= inv;
    for (double& r : out.tmdc.r) r *= inv;
  }
  return out;
}

SetMetrics summarize(const std::string& name, const Inference& inf, const CorrespondenceMap& map) {
  SetMetrics m;
  m.name = name;
  m.frames = inf.phoneme_codes.size();
  m.alignment_accuracy = correspondence_accuracy(map, inf.phoneme_codes, inf.true_visemes);
  m.nmi = normalized_mutual_information(inf.true_phonemes, inf.top_expert);
  m.lse_d = inf.lse_d;
  m.tmdc = inf.tmdc.score;
  m.r = inf.tmdc.r;
  m.usage = inf.usage;
  return m;
}

nlohmann::json SetMetrics::to_json() const {
  return {{"name", name}, {"frames", frames}, {"alignment_accuracy", alignment_accuracy},
          {"nmi", nmi},   {"lse_d", lse_d},   {"tmdc", tmdc},
          {"r", r},       {"usage", usage}};
}

SetMetrics SetMetrics::from_json(const nlohmann::json& j) {
  SetMetrics m;
  m.name = j.at("name").get<std::string>();
  m.frames = j.at("frames").get<std::size_t>();
  m.alignment_accuracy = j.at("alignment_accuracy").get<double>();
  m.nmi = j.at("nmi").get<double>();
  m.lse_d = j.at("lse_d").get<double>();
  m.tmdc = j.at("tmdc").get<double>();
  m.r = j.at("r").get<std::array<double, kMouthFeatures>>();
  m.usage = j.at("usage").get<std::vector<std::size_t>>();
  return m;
}

}  // namespace pvlab
