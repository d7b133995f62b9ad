// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"
#include "pvlab/common/hash.hpp"
#include "pvlab/common/log.hpp"
#include "pvlab/metrics/landmark_io.hpp"
#include "pvlab/synthcorpus/corpus.hpp"

namespace pvlab {

using nlohmann::json;
namespace fs = std::filesystem;

void CorpusSpec::validate() const {
  if (K_true < 2) throw ConfigError("corpus K_true must be >= 2");
  if (d_p == 0 || d_v == 0) throw ConfigError("corpus feature dimensions must be positive");
  if (languages == 0) throw ConfigError("corpus needs at least one language");
  if (utterances == 0 || T < 2) throw ConfigError("corpus needs utterances >= 1 and T >= 2");
  if (subset_size == 0 || subset_size > K_true) throw ConfigError("corpus subset_size must be in [1, K_true]");
  if (!(sigma_p >= 0.0) || !(sigma_v >= 0.0) || !(spread > 0.0)) throw ConfigError("corpus noise/spread out of range");
  if (!(stay >= 0.0 && stay < 1.0)) throw ConfigError("corpus stay must be in [0, 1)");
  std::set<std::string> names;
  for (std::size_t i = 0; i < languages; ++i) names.insert("lang" + std::to_string(i));
  for (const auto& n : unseen) {
    if (!names.count(n)) throw ConfigError("corpus unseen language '" + n + "' does not exist");
  }
  if (unseen.size() >= languages) throw ConfigError("corpus needs at least one seen language");
}

const Language& Corpus::language(const std::string& name) const {
  for (const auto& l : languages) {
    if (l.spec.name == name) return l;
  }
  throw ConfigError("corpus has no language '" + name + "'");
}

std::vector<const Language*> Corpus::seen() const {
  std::vector<const Language*> out;
  for (const auto& l : languages) {
    if (std::find(spec.unseen.begin(), spec.unseen.end(), l.spec.name) == spec.unseen.end()) out.push_back(&l);
  }
  return out;
}

std::vector<const Language*> Corpus::unseen() const {
  std::vector<const Language*> out;
  for (const auto& l : languages) {
    if (std::find(spec.unseen.begin(), spec.unseen.end(), l.spec.name) != spec.unseen.end()) out.push_back(&l);
  }
  return out;
}

Corpus build_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus c;
  c.spec = spec;
  c.universe = make_universe(spec.K_true, spec.d_p, spec.d_v, std::max(spec.sigma_p, spec.sigma_v), spec.seed,
                             UniverseOptions{spec.spread, 1000});
  const std::set<std::string> held(spec.unseen.begin(), spec.unseen.end());
  std::vector<LanguageSpec> specs;
  // Redraw subsets until the seen languages cover every phoneme.
  for (std::uint64_t attempt = 0;; ++attempt) {
    specs.clear();
    std::set<std::size_t> covered;
    for (std::size_t i = 0; i < spec.languages; ++i) {
      const std::string name = "lang" + std::to_string(i);
      auto ls = random_language_spec(name, spec.K_true, spec.subset_size, spec.stay,
                                     mix_seed(mix_seed(spec.seed, 1000 + i), attempt));
      ls.T = spec.T;
      ls.utterances = spec.utterances;
      ls.sigma_p = spec.sigma_p;
      ls.sigma_v = spec.sigma_v;
      if (!held.count(name)) covered.insert(ls.subset.begin(), ls.subset.end());
      specs.push_back(std::move(ls));
    }
    if (covered.size() == spec.K_true) break;
    if (attempt >= 1000) throw ConfigError("cannot cover the phoneme universe with the seen languages");
  }
  for (auto& ls : specs) {
    Language lang;
    lang.utterances = generate_language(ls, c.universe);
    lang.spec = std::move(ls);
    c.languages.push_back(std::move(lang));
  }
  return c;
}

namespace {

json matrix_json(const Matrix& m) { return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix matrix_from(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), j.at("data").get<std::vector<double>>());
}

json spec_json(const CorpusSpec& s) {
  return {{"K_true", s.K_true},     {"d_p", s.d_p},     {"d_v", s.d_v},
          {"sigma_p", s.sigma_p},   {"sigma_v", s.sigma_v}, {"spread", s.spread},
          {"languages", s.languages}, {"utterances", s.utterances}, {"T", s.T},
          {"subset_size", s.subset_size}, {"stay", s.stay}, {"unseen", s.unseen},
          {"seed", s.seed}};
}

CorpusSpec spec_from(const json& j) {
  CorpusSpec s;
  s.K_true = j.at("K_true").get<std::size_t>();
  s.d_p = j.at("d_p").get<std::size_t>();
  s.d_v = j.at("d_v").get<std::size_t>();
  s.sigma_p = j.at("sigma_p").get<double>();
  s.sigma_v = j.at("sigma_v").get<double>();
  s.spread = j.at("spread").get<double>();
  s.languages = j.at("languages").get<std::size_t>();
  s.utterances = j.at("utterances").get<std::size_t>();
  s.T = j.at("T").get<std::size_t>();
  s.subset_size = j.at("subset_size").get<std::size_t>();
  s.stay = j.at("stay").get<double>();
  s.unseen = j.at("unseen").get<std::vector<std::string>>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

std::string utt_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "utt_%04zu", i);
  return buf;
}

}  // namespace

std::string corpus_content_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  Fnv1a h;
  for (const auto& f : files) {
    h.update(fs::relative(f, dir).generic_string());
    const std::string bytes = io::read_text(f);
    h.update(bytes);
  }
  char buf[17];
  return std::string(to_hex(h.digest(), buf));
}

std::string save_corpus(const Corpus& corpus, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create corpus directory " + dir.string() + ": " + ec.message());
  json langs = json::array();
  for (const auto& lang : corpus.languages) {
    const fs::path ldir = dir / lang.spec.name;
    fs::create_directories(ldir, ec);
    if (ec) throw IoError("cannot create " + ldir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < lang.utterances.size(); ++i) {
      const auto& u = lang.utterances[i];
      const std::string stem = utt_stem(i);
      io::write_json(ldir / (stem + ".json"),
                     {{"phonemes", u.phonemes}, {"z_p", matrix_json(u.z_p)}, {"z_v", matrix_json(u.z_v)}}, -1);
      io::write_json(ldir / (stem + ".landmarks.json"), landmarks_to_json(u.landmarks), -1);
      u.frames.save(ldir / (stem + ".frames"));
    }
    langs.push_back({{"name", lang.spec.name},
                     {"subset", lang.spec.subset},
                     {"transition", matrix_json(lang.spec.transition)},
                     {"T", lang.spec.T},
                     {"utterances", lang.spec.utterances},
                     {"sigma_p", lang.spec.sigma_p},
                     {"sigma_v", lang.spec.sigma_v},
                     {"seed", lang.spec.seed}});
  }
  const auto& uv = corpus.universe;
  json mouths = json::array();
  for (const auto& m : uv.mouths) mouths.push_back({m.width, m.height});
  const std::string hash = corpus_content_hash(dir);
  io::write_json(dir / "manifest.json",
                 {{"format", "pvlab.corpus.v1"},
                  {"spec", spec_json(corpus.spec)},
                  {"universe",
                   {{"phoneme_archetypes", matrix_json(uv.phoneme_archetypes)},
                    {"viseme_archetypes", matrix_json(uv.viseme_archetypes)},
                    {"correspondence", uv.correspondence},
                    {"mouths", mouths},
                    {"sigma", uv.sigma},
                    {"spread", uv.spread},
                    {"seed", uv.seed}}},
                  {"languages", langs},
                  {"content_hash", hash}});
  return hash;
}

Corpus load_corpus(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) throw IoError("no corpus manifest at " + manifest.string());
  const json m = io::read_json(manifest);
  Corpus c;
  try {
    if (m.at("format").get<std::string>() != "pvlab.corpus.v1") throw ConfigError("unknown corpus format");
    c.spec = spec_from(m.at("spec"));
    const auto& u = m.at("universe");
    c.universe.phoneme_archetypes = matrix_from(u.at("phoneme_archetypes"));
    c.universe.viseme_archetypes = matrix_from(u.at("viseme_archetypes"));
    c.universe.correspondence = u.at("correspondence").get<std::vector<std::size_t>>();
    for (const auto& mo : u.at("mouths")) c.universe.mouths.push_back({mo.at(0).get<double>(), mo.at(1).get<double>()});
    c.universe.sigma = u.at("sigma").get<double>();
    c.universe.spread = u.at("spread").get<double>();
    c.universe.seed = u.at("seed").get<std::uint64_t>();
    for (const auto& lj : m.at("languages")) {
      Language lang;
      lang.spec.name = lj.at("name").get<std::string>();
      lang.spec.subset = lj.at("subset").get<std::vector<std::size_t>>();
      lang.spec.transition = matrix_from(lj.at("transition"));
      lang.spec.T = lj.at("T").get<std::size_t>();
      lang.spec.utterances = lj.at("utterances").get<std::size_t>();
      lang.spec.sigma_p = lj.at("sigma_p").get<double>();
      lang.spec.sigma_v = lj.at("sigma_v").get<double>();
      lang.spec.seed = lj.at("seed").get<std::uint64_t>();
      const fs::path ldir = dir / lang.spec.name;
      for (std::size_t i = 0; i < lang.spec.utterances; ++i) {
        const std::string stem = utt_stem(i);
        const json uj = io::read_json(ldir / (stem + ".json"));
        Utterance utt;
        utt.phonemes = uj.at("phonemes").get<std::vector<std::size_t>>();
        utt.z_p = matrix_from(uj.at("z_p"));
        utt.z_v = matrix_from(uj.at("z_v"));
        utt.landmarks = load_landmarks(ldir / (stem + ".landmarks.json"));
        utt.frames = FrameSequence::load(ldir / (stem + ".frames"));
        lang.utterances.push_back(std::move(utt));
      }
      c.languages.push_back(std::move(lang));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed corpus at " + dir.string() + ": " + e.what());
  }
  const auto problems = validate_corpus(c);
  if (!problems.empty()) throw ConfigError("corpus at " + dir.string() + " is invalid: " + problems.front());
  return c;
}

std::vector<std::string> validate_corpus(const Corpus& c) {
  std::vector<std::string> errs;
  auto guard = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errs.emplace_back(e.what());
    }
  };
  guard([&] { c.spec.validate(); });
  guard([&] { c.universe.validate(); });
  if (c.languages.size() != c.spec.languages) errs.push_back("language count differs from spec");
  for (const auto& lang : c.languages) {
    guard([&] { lang.spec.validate(c.universe); });
    if (lang.utterances.size() != lang.spec.utterances) errs.push_back(lang.spec.name + ": utterance count mismatch");
    const std::set<std::size_t> subset(lang.spec.subset.begin(), lang.spec.subset.end());
    for (std::size_t i = 0; i < lang.utterances.size(); ++i) {
      const auto& u = lang.utterances[i];
      const std::string where = lang.spec.name + "/" + utt_stem(i);
      const std::size_t T = u.length();
      if (T != lang.spec.T) errs.push_back(where + ": length mismatch");
      if (u.z_p.rows != T || u.z_p.cols != c.universe.phoneme_dim()) errs.push_back(where + ": z_p shape");
      if (u.z_v.rows != T || u.z_v.cols != c.universe.viseme_dim()) errs.push_back(where + ": z_v shape");
      if (u.landmarks.frames() != T) errs.push_back(where + ": landmark length");
      if (u.frames.T != T) errs.push_back(where + ": frame length");
      for (std::size_t id : u.phonemes) {
        if (!subset.count(id)) {
          errs.push_back(where + ": phoneme " + std::to_string(id) + " outside the language subset");
          break;
        }
      }
    }
  }
  return errs;
}

}  // namespace pvlab
