// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "pvlab/common/errors.hpp"
#include "pvlab/generator/frames.hpp"
#include "pvlab/metrics/geometry.hpp"
#include "pvlab/metrics/sync_metrics.hpp"
#include "pvlab/prototypes/prototype_bank.hpp"
#include "pvlab/synthcorpus/corpus.hpp"
#include "pvlab/synthcorpus/language.hpp"
#include "pvlab/synthcorpus/render.hpp"
#include "pvlab/synthcorpus/universe.hpp"

namespace fs = std::filesystem;

namespace pvlab {
namespace {

CorpusSpec tiny_spec() {
  CorpusSpec s;
  s.K_true = 4;
  s.d_p = 4;
  s.d_v = 3;
  s.languages = 3;
  s.utterances = 4;
  s.T = 8;
  s.subset_size = 3;
  s.unseen = {"lang2"};
  s.seed = 11;
  return s;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pvlab_test_synth_" + name);
  fs::remove_all(dir);
  return dir;
}

LanguageSpec full_language(const Universe& u, Matrix transition, std::size_t T, double sigma) {
  LanguageSpec spec;
  spec.name = "probe";
  for (std::size_t k = 0; k < u.size(); ++k) spec.subset.push_back(k);
  spec.transition = std::move(transition);
  spec.T = T;
  spec.utterances = 1;
  spec.sigma_p = sigma;
  spec.sigma_v = sigma;
  spec.seed = 5;
  return spec;
}

TEST(Universe, BijectionAndSeparation) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double sigma = 0.3;
    const Universe u = make_universe(8, 16, 12, sigma, seed);
    EXPECT_TRUE(is_bijection(u.correspondence));
    EXPECT_EQ(u.size(), 8u);
    EXPECT_EQ(u.phoneme_dim(), 16u);
    EXPECT_EQ(u.viseme_dim(), 12u);
    EXPECT_GE(min_pairwise_distance(u.phoneme_archetypes), 6.0 * sigma);
    EXPECT_GE(min_pairwise_distance(u.viseme_archetypes), 6.0 * sigma);
    ASSERT_EQ(u.mouths.size(), 8u);
    for (const auto& m : u.mouths) {
      EXPECT_GT(m.width, 0.0);
      EXPECT_GT(m.height, 0.0);
    }
    EXPECT_NO_THROW(u.validate());
  }
}

TEST(Universe, TwoClassesWithoutNoiseAreSeparable) {
  const Universe u = make_universe(2, 3, 3, 0.0, 1);
  EXPECT_GT(min_pairwise_distance(u.phoneme_archetypes), 0.0);
  EXPECT_GT(min_pairwise_distance(u.viseme_archetypes), 0.0);
  EXPECT_TRUE(is_bijection(u.correspondence));
}

TEST(Universe, Deterministic) {
  const Universe a = make_universe(6, 5, 4, 0.2, 9), b = make_universe(6, 5, 4, 0.2, 9);
  EXPECT_EQ(a.phoneme_archetypes.data, b.phoneme_archetypes.data);
  EXPECT_EQ(a.viseme_archetypes.data, b.viseme_archetypes.data);
  EXPECT_EQ(a.correspondence, b.correspondence);
  EXPECT_EQ(a.mouths, b.mouths);
}

TEST(Universe, UnreachableSeparationRejectedWithAdvice) {
  try {
    make_universe(50, 1, 1, 10.0, 0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("lower K_true"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_universe(1, 2, 2, 0.1, 0), ConfigError);
  EXPECT_THROW(make_universe(3, 0, 2, 0.1, 0), ConfigError);
  EXPECT_THROW(make_universe(3, 2, 2, -1.0, 0), ConfigError);
}

TEST(Universe, IsBijection) {
  EXPECT_TRUE(is_bijection({2, 0, 1}));
  EXPECT_FALSE(is_bijection({0, 0, 1}));
  EXPECT_FALSE(is_bijection({0, 3, 1}));
}

TEST(Language, IdentityTransitionGivesConstantSequence) {
  const Universe u = make_universe(4, 3, 3, 0.1, 2);
  Matrix eye(4, 4);
  for (std::size_t i = 0; i < 4; ++i) eye(i, i) = 1.0;
  const auto spec = full_language(u, eye, 40, 0.1);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto utt = generate_utterance(spec, u, i);
    for (std::size_t id : utt.phonemes) EXPECT_EQ(id, utt.phonemes.front());
  }
}

TEST(Language, NoiselessFeaturesRecoverIdsExactly) {
  const Universe u = make_universe(6, 5, 4, 0.0, 3);
  const PrototypeBank pb(u.phoneme_archetypes, Modality::phoneme, 1.0);
  const PrototypeBank vb(u.viseme_archetypes, Modality::viseme, 1.0);
  const auto spec = full_language(u, Matrix(6, 6, 1.0 / 6.0), 200, 0.0);
  const auto utt = generate_utterance(spec, u, 0);
  const auto p = hard_assign_rows(utt.z_p, pb);
  const auto v = hard_assign_rows(utt.z_v, vb);
  for (std::size_t t = 0; t < utt.length(); ++t) {
    EXPECT_EQ(p[t], utt.phonemes[t]);
    EXPECT_EQ(v[t], utt.viseme(t, u));
    EXPECT_EQ(v[t], u.correspondence[p[t]]);
  }
}

TEST(Language, UniformTransitionsGiveUniformFrequencies) {
  const Universe u = make_universe(4, 2, 2, 0.1, 4);
  const auto spec = full_language(u, Matrix(4, 4, 0.25), 10000, 0.1);
  const auto utt = generate_utterance(spec, u, 0);
  std::vector<double> freq(4, 0.0);
  for (std::size_t id : utt.phonemes) freq[id] += 1.0 / 10000.0;
  for (double f : freq) EXPECT_NEAR(f, 0.25, 0.03);
}

TEST(Language, TimeAxesAgree) {
  const Universe u = make_universe(4, 3, 2, 0.1, 5);
  auto spec = full_language(u, Matrix(4, 4, 0.25), 12, 0.2);
  spec.utterances = 3;
  const auto utts = generate_language(spec, u);
  ASSERT_EQ(utts.size(), 3u);
  for (const auto& utt : utts) {
    EXPECT_EQ(utt.z_p.rows, 12u);
    EXPECT_EQ(utt.z_v.rows, 12u);
    EXPECT_EQ(utt.landmarks.frames(), 12u);
    EXPECT_EQ(utt.frames.T, 12u);
  }
}

TEST(Language, SpecValidation) {
  const Universe u = make_universe(4, 3, 2, 0.1, 6);
  auto spec = full_language(u, Matrix(4, 4, 0.25), 10, 0.1);
  EXPECT_NO_THROW(spec.validate(u));
  auto bad = spec;
  bad.transition(1, 1) = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = spec;
  bad.transition = Matrix(3, 3, 1.0 / 3.0);
  EXPECT_THROW(bad.validate(), DimensionError);
  bad = spec;
  bad.subset[3] = 9;
  EXPECT_NO_THROW(bad.validate());
  EXPECT_THROW(bad.validate(u), ConfigError);
  bad = spec;
  bad.subset[3] = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Language, RandomSpecIsRowStochasticAndSticky) {
  const auto spec = random_language_spec("x", 8, 5, 0.7, 3);
  ASSERT_EQ(spec.subset.size(), 5u);
  EXPECT_NO_THROW(spec.validate());
  for (std::size_t i = 0; i < 5; ++i) EXPECT_GE(spec.transition(i, i), 0.7 - 1e-12);
}

TEST(Render, EllipseHullArea) {
  const auto seq = render_landmarks(MouthShape{2.0, 1.0}, 3);
  const auto pts = seq.frame(0);
  EXPECT_NEAR(convex_hull_area(pts), std::numbers::pi * 1.0 * 0.5, 0.05);
  // Quadrants hold 7, 6, 7, 6 equal angular steps between the anchors.
  const double q = std::numbers::pi / 2.0;
  const double want = 0.5 * 1.0 * 0.5 * (14.0 * std::sin(q / 7.0) + 12.0 * std::sin(q / 6.0));
  EXPECT_NEAR(convex_hull_area(pts), want, 1e-12);
}

TEST(Render, AnchorsSitAtExtrema) {
  const auto f = mouth_features(render_landmarks(MouthShape{2.0, 1.0}, 2));
  EXPECT_NEAR(f[MouthFeature::width][0], 2.0, 1e-12);
  EXPECT_NEAR(f[MouthFeature::height][0], 1.0, 1e-12);
}

TEST(Render, ConstantShapeIsStatic) {
  const auto seq = render_landmarks(MouthShape{1.5, 0.8}, 6);
  for (std::size_t t = 1; t < 6; ++t) EXPECT_EQ(seq.frame(t), seq.frame(0));
  const auto d = temporal_diff(rasterize(seq));
  for (double v : d.data) EXPECT_EQ(v, 0.0);
}

TEST(Render, TransitionBlendsThenHolds) {
  const MouthShape a{1.0, 0.4}, b{2.0, 1.0};
  std::vector<MouthShape> targets(3, a);
  targets.resize(10, b);
  const auto track = mouth_track(targets);
  ASSERT_EQ(track.size(), 10u);
  EXPECT_EQ(track[2], a);
  EXPECT_GT(track[3].width, a.width);
  EXPECT_LT(track[3].width, b.width);
  EXPECT_NE(track[3 + kTransitionFrames - 1], b);
  for (std::size_t t = 3 + kTransitionFrames; t < 10; ++t) EXPECT_EQ(track[t], b) << t;
  const auto f = mouth_features(render_landmarks(targets));
  EXPECT_NEAR(f[MouthFeature::width][9], 2.0, 1e-12);
}

TEST(Render, NonpositiveShapeRejected) {
  EXPECT_THROW(render_landmarks(MouthShape{0.0, 1.0}, 3), ConfigError);
  EXPECT_THROW(render_landmarks(MouthShape{1.0, -0.5}, 3), ConfigError);
}

TEST(Render, RasterRangeAndMomentInverse) {
  const auto seq = render_landmarks(MouthShape{2.0, 1.0}, 2);
  const auto frames = rasterize(seq);
  ASSERT_EQ(frames.T, 2u);
  for (double p : frames.pixels) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  const auto back = landmarks_from_frames(frames);
  const auto f = mouth_features(back);
  EXPECT_NEAR(f[MouthFeature::width][0], 2.0, 0.2);
  EXPECT_NEAR(f[MouthFeature::height][0], 1.0, 0.2);
}

TEST(Split, FourSeenOneUnseen) {
  auto spec = tiny_spec();
  spec.languages = 5;
  spec.utterances = 1;
  spec.unseen = {};
  const Corpus c = build_corpus(spec);
  const auto [seen, held] = split_seen_unseen(c.languages, {"lang3"}, c.universe);
  EXPECT_EQ(seen.size(), 4u);
  ASSERT_EQ(held.size(), 1u);
  EXPECT_EQ(held[0].spec.name, "lang3");
  for (const auto& l : seen) EXPECT_NE(l.spec.name, "lang3");
}

TEST(Split, EmptyUnseenAndRejections) {
  auto spec = tiny_spec();
  spec.utterances = 1;
  const Corpus c = build_corpus(spec);
  const auto [seen, held] = split_seen_unseen(c.languages, {}, c.universe);
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_TRUE(held.empty());
  EXPECT_THROW(split_seen_unseen(c.languages, {"klingon"}, c.universe), ConfigError);
  auto langs = c.languages;
  langs[2].spec.subset[0] = 40;
  EXPECT_THROW(split_seen_unseen(langs, {"lang2"}, c.universe), ConfigError);
}

TEST(Corpus, SeenLanguagesCoverUniverse) {
  const Corpus c = build_corpus(tiny_spec());
  std::vector<bool> hit(c.universe.size(), false);
  for (const Language* l : c.seen()) {
    for (std::size_t id : l->spec.subset) hit[id] = true;
  }
  for (bool h : hit) EXPECT_TRUE(h);
  ASSERT_EQ(c.unseen().size(), 1u);
  EXPECT_EQ(c.unseen()[0]->spec.name, "lang2");
  EXPECT_THROW(c.language("nope"), ConfigError);
  EXPECT_TRUE(validate_corpus(c).empty());
}

TEST(Corpus, SpecValidation) {
  auto s = tiny_spec();
  s.unseen = {"lang7"};
  EXPECT_THROW(s.validate(), ConfigError);
  s = tiny_spec();
  s.unseen = {"lang0", "lang1", "lang2"};
  EXPECT_THROW(s.validate(), ConfigError);
  s = tiny_spec();
  s.subset_size = 9;
  EXPECT_THROW(s.validate(), ConfigError);
  s = tiny_spec();
  s.stay = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Corpus, SameSpecSameBytes) {
  const auto a = scratch("a"), b = scratch("b"), c = scratch("c");
  const std::string ha = save_corpus(build_corpus(tiny_spec()), a);
  const std::string hb = save_corpus(build_corpus(tiny_spec()), b);
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(corpus_content_hash(a), ha);
  auto other = tiny_spec();
  other.seed = 12;
  EXPECT_NE(save_corpus(build_corpus(other), c), ha);
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Corpus, SaveLoadRoundTrip) {
  const auto dir = scratch("rt");
  const Corpus c = build_corpus(tiny_spec());
  save_corpus(c, dir);
  const Corpus back = load_corpus(dir);
  ASSERT_EQ(back.languages.size(), c.languages.size());
  EXPECT_EQ(back.universe.correspondence, c.universe.correspondence);
  for (std::size_t l = 0; l < c.languages.size(); ++l) {
    const auto& x = c.languages[l];
    const auto& y = back.languages[l];
    EXPECT_EQ(x.spec.name, y.spec.name);
    EXPECT_EQ(x.spec.subset, y.spec.subset);
    ASSERT_EQ(x.utterances.size(), y.utterances.size());
    for (std::size_t i = 0; i < x.utterances.size(); ++i) {
      EXPECT_EQ(x.utterances[i].phonemes, y.utterances[i].phonemes);
      EXPECT_EQ(x.utterances[i].z_p.data, y.utterances[i].z_p.data);
      EXPECT_EQ(x.utterances[i].z_v.data, y.utterances[i].z_v.data);
      EXPECT_EQ(x.utterances[i].frames, y.utterances[i].frames);
      EXPECT_EQ(x.utterances[i].landmarks.coords(), y.utterances[i].landmarks.coords());
    }
  }
  fs::remove_all(dir);
}

TEST(Corpus, LoadErrors) {
  const auto dir = scratch("bad");
  EXPECT_THROW(load_corpus(dir), IoError);
  save_corpus(build_corpus(tiny_spec()), dir);
  std::ofstream(dir / "manifest.json") << "{\"format\": \"something else\"}";
  EXPECT_THROW(load_corpus(dir), ConfigError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace pvlab
