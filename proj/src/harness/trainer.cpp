// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/harness/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "pvlab/align/pair_batch.hpp"
#include "pvlab/common/hash.hpp"
#include "pvlab/common/log.hpp"
#include "pvlab/diffcore/adam.hpp"
#include "pvlab/harness/evaluation.hpp"
#include "pvlab/prototypes/kmeans.hpp"

namespace pvlab {
namespace {

// Lowest within-cluster sum of squares over several K-means++ seedings.
PrototypeBank best_seeding(const Matrix& features, const ExperimentConfig& cfg, std::uint64_t stream,
                           Modality modality) {
  std::optional<PrototypeBank> best;
  double best_ss = 0.0;
  for (std::size_t r = 0; r < cfg.kmeans_restarts; ++r) {
    const std::uint64_t seed = r == 0 ? mix_seed(cfg.seed, stream) : mix_seed(mix_seed(cfg.seed, stream), r);
    PrototypeBank bank = kmeanspp_init(features, cfg.K, seed, modality, cfg.tau);
    const double ss = within_cluster_ss(features, bank.centroids());
    if (!best || ss < best_ss) {
      best = std::move(bank);
      best_ss = ss;
    }
  }
  return std::move(*best);
}

Matrix stack(const std::vector<const Utterance*>& utts, bool phoneme) {
  std::size_t rows = 0;
  for (const auto* u : utts) rows += u->length();
  const std::size_t cols = phoneme ? utts.front()->z_p.cols : utts.front()->z_v.cols;
  Matrix out(rows, cols);
  std::size_t r = 0;
  for (const auto* u : utts) {
    const Matrix& z = phoneme ? u->z_p : u->z_v;
    std::copy(z.data.begin(), z.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * cols));
    r += z.rows;
  }
  return out;
}

std::vector<std::size_t> true_visemes(const std::vector<const Utterance*>& utts, const Universe& u) {
  std::vector<std::size_t> out;
  for (const auto* utt : utts) {
    for (std::size_t t = 0; t < utt->length(); ++t) out.push_back(utt->viseme(t, u));
  }
  return out;
}

struct CodeSet {
  Matrix x_p, x_v;
  std::vector<std::size_t> visemes;
};

CodeSet code_set(const std::vector<const Utterance*>& utts, const Universe& u) {
  return {stack(utts, true), stack(utts, false), true_visemes(utts, u)};
}

struct Window {
  const Utterance* utt;
  std::size_t offset;
};

struct Optimised {
  ParameterBlock* block;
  AdamState state;
};

}  // namespace

DataSplit split_corpus(const Corpus& corpus, double holdout_fraction) {
  DataSplit split;
  for (const Language* lang : corpus.seen()) {
    const std::size_t n = lang->utterances.size();
    const std::size_t held = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n))), 1, n > 1 ? n - 1 : 1);
    for (std::size_t i = 0; i < n; ++i) {
      (i + held < n ? split.train : split.held_out).push_back(&lang->utterances[i]);
    }
  }
  for (const Language* lang : corpus.unseen()) {
    for (const auto& u : lang->utterances) split.zero_shot.push_back(&u);
  }
  if (split.train.empty()) throw ConfigError("corpus leaves no training utterances");
  return split;
}

TrainResult train(const ExperimentConfig& cfg, const Corpus& corpus, const TrainOptions& options) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const DataSplit split = split_corpus(corpus, cfg.holdout_fraction);
  const Universe& universe = corpus.universe;
  if (split.train.front()->length() < cfg.window) throw ConfigError("window exceeds the utterance length");

  Model model = Model::create(cfg, universe.phoneme_dim(), universe.viseme_dim());
  const CodeSet train_set = code_set(split.train, universe);
  const CodeSet held_set = split.held_out.empty() ? train_set : code_set(split.held_out, universe);

  std::vector<Window> windows;
  for (const auto* u : split.train) {
    for (std::size_t off = 0; off + cfg.window <= u->length(); off += cfg.window) windows.push_back({u, off});
  }
  const std::size_t per_batch = cfg.batch / cfg.window;
  if (windows.size() < per_batch) throw ConfigError("not enough training windows for one batch");
  const std::size_t steps_per_epoch = cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch : windows.size() / per_batch;

  std::vector<Optimised> model_opt, est_opt;
  for (auto& [name, block] : model.model_blocks()) model_opt.push_back({block, AdamState::for_block(*block)});
  for (auto& [name, block] : model.estimator_blocks()) est_opt.push_back({block, AdamState::for_block(*block)});
  if (cfg.freeze_raw_estimator) est_opt.pop_back();
  const AdamConfig model_adam{cfg.lr};
  const AdamConfig est_adam{cfg.disc_lr};

  auto fit_banks = [&](std::size_t epoch) {
    const Matrix ep = model.encode_p(train_set.x_p);
    const Matrix ev = model.encode_v(train_set.x_v);
    const int e = static_cast<int>(epoch);
    if (!model.bank_p) {
      model.bank_p = best_seeding(ep, cfg, 31, Modality::phoneme);
      model.bank_v = best_seeding(ev, cfg, 32, Modality::viseme);
    } else {
      model.bank_p = refit(*model.bank_p, ep, e);
      model.bank_v = refit(*model.bank_v, ev, e);
    }
  };

  auto map_and_accuracy = [&](const CodeSet& eval) {
    const auto cp = hard_assign_rows(model.encode_p(train_set.x_p), *model.bank_p);
    const auto cv = hard_assign_rows(model.encode_v(train_set.x_v), *model.bank_v);
    const CorrespondenceMap map = fit_correspondence(cp, cv, train_set.visemes, cfg.K, universe.size());
    const auto ce = hard_assign_rows(model.encode_p(eval.x_p), *model.bank_p);
    return std::pair{map, correspondence_accuracy(map, ce, eval.visemes)};
  };

  const std::filesystem::path ckpt = options.out_dir ? *options.out_dir / "checkpoint" : std::filesystem::path{};
  fit_banks(0);
  if (options.out_dir) model.save(ckpt);

  RunReport report;
  report.config = cfg.to_json();
  report.parameter_count = model.parameter_count();
  double train_seconds = 0.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch + 1;
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x65706f6300000000ULL + epoch));
    std::shuffle(windows.begin(), windows.end(), rng);

    const auto t_epoch = std::chrono::steady_clock::now();
    StepTerms sum;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      Matrix x_p(cfg.batch, model.d_p), x_v(cfg.batch, model.d_v), real(cfg.batch, kFramePixels);
      for (std::size_t w = 0; w < per_batch; ++w) {
        const Window& win = windows[(step * per_batch + w) % windows.size()];
        for (std::size_t k = 0; k < cfg.window; ++k) {
          const std::size_t row = w * cfg.window + k, t = win.offset + k;
          std::copy_n(win.utt->z_p.row(t).begin(), model.d_p, x_p.row(row).begin());
          std::copy_n(win.utt->z_v.row(t).begin(), model.d_v, x_v.row(row).begin());
          std::copy_n(win.utt->frames.frame(t).begin(), kFramePixels, real.row(row).begin());
        }
      }
      const auto shuffle = random_derangement(cfg.batch, mix_seed(cfg.seed, (epoch << 32) + step + 1));

      Tape tape;
      const Pass pass = run_model(tape, model, x_p, x_v);
      StepLosses losses;
      try {
        losses = step_losses(tape, model, pass, real, cfg.window, shuffle);
      } catch (const NumericalError& e) {
        report.status = "aborted";
        if (options.out_dir) write_report(report, *options.out_dir);
        throw TrainingAborted(std::string(e.what()) + " at epoch " + std::to_string(epoch + 1) + ", step " +
                              std::to_string(step));
      }
      const std::optional<Node> est_loss =
          losses.estimator_objective ? std::optional<Node>(tape.scale(*losses.estimator_objective, -1.0)) : std::nullopt;

      tape.backward(losses.total);
      std::vector<std::vector<double>> model_grads;
      for (const auto& o : model_opt) model_grads.push_back(tape.gradient(*o.block));
      std::vector<std::vector<double>> est_grads;
      if (est_loss) {
        tape.backward(*est_loss);
        for (const auto& o : est_opt) est_grads.push_back(tape.gradient(*o.block));
      }
      for (std::size_t i = 0; i < model_opt.size(); ++i) {
        if (!adam_step(*model_opt[i].block, model_grads[i], model_opt[i].state, model_adam)) ++rec.skipped_steps;
      }
      for (std::size_t i = 0; i < est_grads.size(); ++i) {
        if (!adam_step(*est_opt[i].block, est_grads[i], est_opt[i].state, est_adam)) ++rec.skipped_steps;
      }

      const StepTerms& t = losses.terms;
      sum.l_align += t.l_align;
      sum.l_router += t.l_router;
      sum.l_gen += t.l_gen;
      sum.total += t.total;
      sum.mi_proto += t.mi_proto;
      sum.mi_raw += t.mi_raw;
      sum.route += t.route;
      sum.utilization += t.utilization;
      sum.entropy += t.entropy;
      ++report.steps;
      report.tokens += cfg.batch;
    }
    train_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch).count();
    if (refit_due(*model.bank_p, static_cast<int>(epoch + 1), static_cast<int>(cfg.refit_period))) {
      fit_banks(epoch + 1);
      rec.refit = true;
    }

    const double inv = 1.0 / static_cast<double>(steps_per_epoch);
    rec.l_align = sum.l_align * inv;
    rec.l_router = sum.l_router * inv;
    rec.l_gen = sum.l_gen * inv;
    rec.total = sum.total * inv;
    rec.mi_proto = sum.mi_proto * inv;
    rec.mi_raw = sum.mi_raw * inv;
    rec.route = sum.route * inv;
    rec.utilization = sum.utilization * inv;
    rec.entropy = sum.entropy * inv;
    rec.alignment_accuracy = map_and_accuracy(held_set).second;
    report.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    log::info("epoch " + std::to_string(rec.epoch) + " total " + std::to_string(rec.total) + " acc " +
              std::to_string(rec.alignment_accuracy));
    if (options.out_dir) model.save(ckpt);
  }

  const auto [map, train_acc] = map_and_accuracy(train_set);
  report.train_accuracy = train_acc;
  report.held_out = summarize("held_out", infer(model, split.held_out, universe, true), map);
  if (!split.zero_shot.empty()) {
    report.zero_shot = summarize("zero_shot", infer(model, split.zero_shot, universe, true), map);
  } else {
    report.zero_shot.name = "zero_shot";
  }
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  report.tokens_per_sec = train_seconds > 0.0 ? static_cast<double>(report.tokens) / train_seconds : 0.0;
  if (options.out_dir) write_report(report, *options.out_dir);
  return TrainResult{std::move(report), std::move(model)};
}

}  // namespace pvlab
