// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/harness/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <type_traits>
#include <map>
#include <sstream>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"

namespace pvlab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return to_bool(key, v);
  } else if constexpr (std::is_same_v<T, double>) {
    return to_double(key, v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    return to_list(v);
  } else {
    const std::uint64_t u = to_u64(key, v);
    if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
      throw ConfigError("config key '" + key + "': value out of range");
    }
    return static_cast<T>(u);
  }
}

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, double>) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
    std::string s;
    for (const auto& item : v) s += (s.empty() ? "" : ",") + item;
    return s;
  } else {
    return std::to_string(v);
  }
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
std::pair<std::string, Field> entry(std::string name, T ExperimentConfig::*m) {
  return {std::move(name),
          Field{[m](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*m = parse_value<T>(k, v); },
                [m](const ExperimentConfig& c) { return format_value(c.*m); }}};
}

template <class T>
std::pair<std::string, Field> entry(std::string name, T CorpusSpec::*m) {
  return {std::move(name), Field{[m](ExperimentConfig& c, const std::string& k,
                                     const std::string& v) { c.corpus_spec.*m = parse_value<T>(k, v); },
                                 [m](const ExperimentConfig& c) { return format_value(c.corpus_spec.*m); }}};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Field>> table = {
      entry("corpus", &C::corpus),
      entry("out", &C::out),
      entry("seed", &C::seed),
      entry("K", &C::K),
      entry("tau", &C::tau),
      entry("refit_period", &C::refit_period),
      entry("S", &C::S),
      entry("M", &C::M),
      entry("beta", &C::beta),
      entry("flip_entropy_sign", &C::flip_entropy_sign),
      entry("lambda_neg", &C::lambda_neg),
      entry("lambda_util", &C::lambda_util),
      entry("lambda_ent", &C::lambda_ent),
      entry("lambda_task", &C::lambda_task),
      entry("lambda1", &C::lambda1),
      entry("lambdap", &C::lambdap),
      entry("lambdat", &C::lambdat),
      entry("freeze_raw_estimator", &C::freeze_raw_estimator),
      entry("lr", &C::lr),
      entry("disc_lr", &C::disc_lr),
      entry("epochs", &C::epochs),
      entry("batch", &C::batch),
      entry("window", &C::window),
      entry("steps_per_epoch", &C::steps_per_epoch),
      entry("embed_dim", &C::embed_dim),
      entry("expert_width", &C::expert_width),
      entry("disc_hidden", &C::disc_hidden),
      entry("kmeans_restarts", &C::kmeans_restarts),
      entry("holdout_fraction", &C::holdout_fraction),
      entry("disable_moe", &C::disable_moe),
      entry("disable_pv_align", &C::disable_pv_align),
      entry("disable_phoneme_guidance", &C::disable_phoneme_guidance),
      entry("corpus.K_true", &CorpusSpec::K_true),
      entry("corpus.d_p", &CorpusSpec::d_p),
      entry("corpus.d_v", &CorpusSpec::d_v),
      entry("corpus.sigma_p", &CorpusSpec::sigma_p),
      entry("corpus.sigma_v", &CorpusSpec::sigma_v),
      entry("corpus.spread", &CorpusSpec::spread),
      entry("corpus.languages", &CorpusSpec::languages),
      entry("corpus.utterances", &CorpusSpec::utterances),
      entry("corpus.T", &CorpusSpec::T),
      entry("corpus.subset_size", &CorpusSpec::subset_size),
      entry("corpus.stay", &CorpusSpec::stay),
      entry("corpus.unseen", &CorpusSpec::unseen),
      entry("corpus.seed", &CorpusSpec::seed),
  };
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return names;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, value); }

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::size_t> seen;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (seen.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    seen[key] = lineno;
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return parse(io::read_text(path), path.string());
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(*this) + "\n";
  return out;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, f] : fields()) j[name] = f.get(*this);
  return j;
}

void ExperimentConfig::validate() const {
  try {
    corpus_spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("corpus settings: ") + e.what());
  }
  require(K >= 2, "K", "needs K >= 2");
  require(tau > 0.0, "tau", "must be > 0");
  require(refit_period >= 1, "refit_period", "must be >= 1");
  require(M >= 1, "M", "must be >= 1");
  require(S >= 1 && S <= M, "S", "needs 1 <= S <= M");
  require(K >= M, "M", "the class map k mod M needs K >= M");
  require(beta >= 0.0 && beta <= 1.0, "beta", "must lie in [0, 1]");
  require(lambda_neg >= 0.0, "lambda_neg", "must be >= 0");
  require(lambda_util >= 0.0, "lambda_util", "must be >= 0");
  require(lambda_ent >= 0.0, "lambda_ent", "must be >= 0");
  require(lambda_task >= 0.0, "lambda_task", "must be >= 0");
  require(lambda1 >= 0.0, "lambda1", "must be >= 0");
  require(lambdap >= 0.0, "lambdap", "must be >= 0");
  require(lambdat >= 0.0, "lambdat", "must be >= 0");
  require(lr > 0.0, "lr", "must be > 0");
  require(disc_lr > 0.0, "disc_lr", "must be > 0");
  require(window >= 2, "window", "must be >= 2");
  require(window <= corpus_spec.T, "window", "cannot exceed the utterance length");
  require(batch >= 2 && batch % window == 0, "batch", "must be a multiple of window and >= 2");
  require(embed_dim >= 1, "embed_dim", "must be >= 1");
  require(expert_width >= 1, "expert_width", "must be >= 1");
  require(disc_hidden >= 1, "disc_hidden", "must be >= 1");
  require(kmeans_restarts >= 1, "kmeans_restarts", "must be >= 1");
  require(holdout_fraction > 0.0 && holdout_fraction < 1.0, "holdout_fraction", "must lie in (0, 1)");
  require(!out.empty(), "out", "must not be empty");
}

}  // namespace pvlab
