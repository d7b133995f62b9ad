// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/synthcorpus/language.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "pvlab/common/errors.hpp"
#include "pvlab/common/hash.hpp"
#include "pvlab/synthcorpus/render.hpp"

namespace pvlab {

void LanguageSpec::validate() const {
  if (name.empty()) throw ConfigError("language name is empty");
  if (subset.empty()) throw ConfigError("language " + name + ": phoneme subset is empty");
  if (std::set<std::size_t>(subset.begin(), subset.end()).size() != subset.size()) {
    throw ConfigError("language " + name + ": duplicate phoneme in subset");
  }
  const std::size_t n = subset.size();
  if (transition.rows != n || transition.cols != n) {
    throw DimensionError("language " + name + ": transition matrix must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double p : transition.row(i)) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("language " + name + ": negative transition probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw ConfigError("language " + name + ": transition row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
  }
  if (T == 0) throw ConfigError("language " + name + ": utterance length must be positive");
  if (!(sigma_p >= 0.0) || !(sigma_v >= 0.0)) throw ConfigError("language " + name + ": noise must be >= 0");
}

void LanguageSpec::validate(const Universe& u) const {
  validate();
  for (std::size_t id : subset) {
    if (id >= u.size()) {
      throw ConfigError("language " + name + ": phoneme " + std::to_string(id) + " is outside the universe");
    }
  }
}

Utterance generate_utterance(const LanguageSpec& spec, const Universe& u, std::size_t index) {
  std::mt19937_64 rng(mix_seed(spec.seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.subset.size();

  Utterance utt;
  utt.phonemes.resize(spec.T);
  std::size_t state = std::min<std::size_t>(n - 1, static_cast<std::size_t>(unit(rng) * n));
  for (std::size_t t = 0; t < spec.T; ++t) {
    if (t > 0) {
      const double r = unit(rng);
      double acc = 0.0;
      std::size_t next = n - 1;
      for (std::size_t j = 0; j < n; ++j) {
        acc += spec.transition(state, j);
        if (r < acc) {
          next = j;
          break;
        }
      }
      // Guard against rows whose rounding leaves mass on a zero entry.
      while (spec.transition(state, next) == 0.0 && next > 0) --next;
      state = next;
    }
    utt.phonemes[t] = spec.subset[state];
  }

  utt.z_p = Matrix(spec.T, u.phoneme_dim());
  utt.z_v = Matrix(spec.T, u.viseme_dim());
  std::vector<MouthShape> targets(spec.T);
  for (std::size_t t = 0; t < spec.T; ++t) {
    const std::size_t k = utt.phonemes[t];
    const std::size_t v = u.correspondence[k];
    for (std::size_t j = 0; j < u.phoneme_dim(); ++j) utt.z_p(t, j) = u.phoneme_archetypes(k, j) + spec.sigma_p * normal(rng);
    for (std::size_t j = 0; j < u.viseme_dim(); ++j) utt.z_v(t, j) = u.viseme_archetypes(v, j) + spec.sigma_v * normal(rng);
    targets[t] = u.mouths[v];
  }
  utt.landmarks = render_landmarks(targets);
  return utt;
}

std::vector<Utterance> generate_language(const LanguageSpec& spec, const Universe& u) {
  spec.validate(u);
  std::vector<Utterance> out;
  out.reserve(spec.utterances);
  // Rasterization is the expensive step and mouth tracks repeat a small set
  // of shapes, so frames are memoized per shape.
  std::map<std::pair<double, double>, std::vector<double>> raster_cache;
  for (std::size_t i = 0; i < spec.utterances; ++i) {
    Utterance utt = generate_utterance(spec, u, i);
    const std::size_t T = utt.length();
    std::vector<double> px;
    px.reserve(T * kFramePixels);
    for (std::size_t t = 0; t < T; ++t) {
      const auto pts = utt.landmarks.frame(t);
      const std::pair<double, double> key{pts[0].x, pts[7].y};
      auto it = raster_cache.find(key);
      if (it == raster_cache.end()) it = raster_cache.emplace(key, rasterize_contour(pts)).first;
      px.insert(px.end(), it->second.begin(), it->second.end());
    }
    utt.frames = FrameSequence(T, std::move(px));
    out.push_back(std::move(utt));
  }
  return out;
}

LanguageSpec random_language_spec(const std::string& name, std::size_t K_true, std::size_t subset_size, double stay,
                                  std::uint64_t seed) {
  if (subset_size == 0 || subset_size > K_true) throw ConfigError("language subset size must be in [1, K_true]");
  if (!(stay >= 0.0 && stay < 1.0)) throw ConfigError("language stay probability must be in [0, 1)");
  std::mt19937_64 rng(mix_seed(seed, 0x6c616e67));
  LanguageSpec spec;
  spec.name = name;
  spec.seed = mix_seed(seed, 0x75747473);
  std::vector<std::size_t> ids(K_true);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(subset_size);
  std::sort(ids.begin(), ids.end());
  spec.subset = ids;

  const std::size_t n = subset_size;
  spec.transition = Matrix(n, n);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (n == 1) {
      spec.transition(i, i) = 1.0;
      continue;
    }
    double total = 0.0;
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) total += (w[j] = gamma(rng) + 0.05);
    }
    for (std::size_t j = 0; j < n; ++j) spec.transition(i, j) = j == i ? stay : (1.0 - stay) * w[j] / total;
    double s = 0.0;
    for (double p : spec.transition.row(i)) s += p;
    spec.transition(i, i) += 1.0 - s;
  }
  return spec;
}

std::pair<std::vector<Language>, std::vector<Language>> split_seen_unseen(
    const std::vector<Language>& languages, const std::vector<std::string>& unseen, const Universe& u) {
  std::set<std::string> names;
  for (const auto& l : languages) names.insert(l.spec.name);
  for (const auto& n : unseen) {
    if (!names.count(n)) throw ConfigError("split_seen_unseen: unknown language '" + n + "'");
  }
  const std::set<std::string> held(unseen.begin(), unseen.end());
  std::pair<std::vector<Language>, std::vector<Language>> out;
  for (const auto& l : languages) {
    if (held.count(l.spec.name)) {
      for (std::size_t id : l.spec.subset) {
        if (id >= u.size()) {
          throw ConfigError("split_seen_unseen: unseen language " + l.spec.name + " uses phoneme " +
                            std::to_string(id) + " outside the universe");
        }
      }
      out.second.push_back(l);
    } else {
      out.first.push_back(l);
    }
  }
  return out;
}

}  // namespace pvlab
