// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/harness/model.hpp"

#include <cmath>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"
#include "pvlab/common/hash.hpp"

namespace pvlab {
namespace {

enum Stream : std::uint64_t {
  kEncP = 11,
  kEncV,
  kEstProto,
  kEstRaw,
  kGates,
  kExperts,
  kDecoder,
  kPhi,
};

Matrix squash(Matrix m) {
  for (double& v : m.data) v = std::tanh(v);
  return m;
}

}  // namespace

Model Model::create(const ExperimentConfig& cfg, std::size_t d_p, std::size_t d_v) {
  cfg.validate();
  const auto s = [&](std::uint64_t stream) { return mix_seed(cfg.seed, stream); };
  const std::size_t M = cfg.disable_moe ? 1 : cfg.M;
  const std::size_t S = cfg.disable_moe ? 1 : cfg.S;
  const double beta = cfg.disable_phoneme_guidance ? 0.0 : cfg.beta;

  std::vector<Mlp> experts;
  for (std::size_t i = 0; i < M; ++i) {
    experts.push_back(
        Mlp::create(MLPSpec::one_hidden(d_p, cfg.expert_width, cfg.expert_width), mix_seed(s(kExperts), i)));
  }
  RouterConfig router = RouterConfig::make(cfg.K, M, S, beta, cfg.lambda_util, cfg.lambda_ent);
  router.flip_entropy_sign = cfg.flip_entropy_sign;

  return Model{cfg,
               d_p,
               d_v,
               Mlp::create(MLPSpec::dense(d_p, cfg.embed_dim), s(kEncP)),
               Mlp::create(MLPSpec::dense(d_v, cfg.embed_dim), s(kEncV)),
               std::nullopt,
               std::nullopt,
               MIEstimator::create(cfg.K, cfg.K, cfg.disc_hidden, s(kEstProto)),
               MIEstimator::create(cfg.embed_dim, cfg.embed_dim, cfg.disc_hidden, s(kEstRaw)),
               router,
               Gates::create(cfg.K, d_p, M, s(kGates)),
               std::move(experts),
               Mlp::create(MLPSpec::dense(cfg.expert_width, kFramePixels), s(kDecoder)),
               PerceptualNet::create(s(kPhi))};
}

std::vector<std::pair<std::string, ParameterBlock*>> Model::model_blocks() {
  std::vector<std::pair<std::string, ParameterBlock*>> out{
      {"enc_p", &enc_p.params}, {"enc_v", &enc_v.params}, {"decoder", &decoder.params}};
  if (routed()) {
    out.emplace_back("gate_phoneme", &gates.phoneme.params);
    out.emplace_back("gate_content", &gates.content.params);
  }
  for (std::size_t i = 0; i < experts.size(); ++i) out.emplace_back("expert" + std::to_string(i), &experts[i].params);
  return out;
}

std::vector<std::pair<std::string, ParameterBlock*>> Model::estimator_blocks() {
  return {{"est_proto", &est_proto.discriminator.params}, {"est_raw", &est_raw.discriminator.params}};
}

std::size_t Model::parameter_count() const {
  std::size_t n = enc_p.params.size() + enc_v.params.size() + decoder.params.size() +
                  est_proto.discriminator.params.size() + est_raw.discriminator.params.size();
  if (routed()) n += gates.phoneme.params.size() + gates.content.params.size();
  for (const auto& e : experts) n += e.params.size();
  return n;
}

Matrix Model::encode_p(const Matrix& x) const { return squash(enc_p(x)); }
Matrix Model::encode_v(const Matrix& x) const { return squash(enc_v(x)); }

void Model::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto& self = const_cast<Model&>(*this);
  for (const auto& [name, block] : self.model_blocks()) block->save(dir / name);
  for (const auto& [name, block] : self.estimator_blocks()) block->save(dir / name);
  if (bank_p) bank_p->save(dir / "bank_p");
  if (bank_v) bank_v->save(dir / "bank_v");
}

void Model::load(const std::filesystem::path& dir) {
  auto restore = [&](const std::string& name, ParameterBlock* block) {
    ParameterBlock loaded = ParameterBlock::load(dir / name);
    if (!loaded.same_layout(*block)) throw ConfigError("checkpoint block " + name + " does not match the config");
    *block = std::move(loaded);
  };
  for (const auto& [name, block] : model_blocks()) restore(name, block);
  for (const auto& [name, block] : estimator_blocks()) restore(name, block);
  bank_p = PrototypeBank::load(dir / "bank_p");
  bank_v = PrototypeBank::load(dir / "bank_v");
}

Pass run_model(Tape& tape, const Model& model, const Matrix& x_p, const Matrix& x_v) {
  if (!model.bank_p || !model.bank_v) throw ConfigError("run_model: prototype banks are not initialised");
  if (x_p.rows != x_v.rows) throw DimensionError(dimension_message("run_model rows", x_p.rows, x_v.rows));
  Pass p;
  p.x_p = tape.constant(x_p);
  p.e_p = tape.tanh(model.enc_p.record(tape, p.x_p));
  p.e_v = tape.tanh(model.enc_v.record(tape, tape.constant(x_v)));
  p.q_p = soft_assign(tape, p.e_p, *model.bank_p, model.cfg.tau);
  p.q_v = soft_assign(tape, p.e_v, *model.bank_v, model.cfg.tau);
  if (model.routed()) {
    p.routing = route(tape, p.x_p, p.q_p, model.router, model.gates);
    p.moe_out = moe_forward(tape, p.x_p, *p.routing, model.experts, &p.rows_evaluated);
  } else {
    p.moe_out = model.experts.front().record(tape, p.x_p);
    p.rows_evaluated = {x_p.rows};
  }
  p.frames = decode_frames(tape, p.moe_out, model.decoder);
  return p;
}

StepLosses step_losses(Tape& tape, const Model& model, const Pass& pass, const Matrix& real_frames,
                       std::size_t segment, const std::vector<std::size_t>& shuffle) {
  const auto& cfg = model.cfg;
  StepLosses out;
  StepTerms& t = out.terms;

  Node total = tape.constant(Matrix(1, 1, 0.0));
  if (!cfg.disable_pv_align) {
    const TapeAlignment al = alignment_loss(tape, pass.q_p, pass.q_v, pass.e_p, pass.e_v, model.est_proto,
                                            model.est_raw, cfg.lambda_neg, shuffle, cfg.freeze_raw_estimator);
    total = tape.add(total, al.loss);
    t.l_align = tape.scalar(al.loss);
    t.mi_proto = tape.scalar(al.mi_prototype);
    t.mi_raw = tape.scalar(al.mi_raw);
    t.clamped = al.clamped;
    out.estimator_objective = cfg.freeze_raw_estimator ? al.mi_prototype : tape.add(al.mi_prototype, al.mi_raw);
  }

  if (pass.routing) {
    const Matrix labels = tape.value(pass.q_p);
    const TapeRouterLoss rl = router_loss(tape, *pass.routing, labels, model.router);
    t.route = tape.scalar(rl.route);
    t.entropy = tape.scalar(rl.entropy);
    t.utilization = rl.utilization;
    Node router_total = cfg.disable_phoneme_guidance ? tape.add_scalar(rl.entropy, rl.utilization) : rl.total;
    if (cfg.disable_phoneme_guidance) t.route = 0.0;
    t.l_router = tape.scalar(router_total);
    total = tape.add(total, router_total);
  }

  const GenerationWeights w{cfg.lambda1, cfg.lambdap, cfg.lambdat};
  const TapeGeneration gen = generation_loss(tape, pass.frames, real_frames, model.phi, w, segment);
  t.l_gen = gen.values.total;
  t.gen_l1 = gen.values.l1;
  t.gen_perceptual = gen.values.perceptual;
  t.gen_temporal = gen.values.temporal;
  total = tape.add(total, tape.scale(gen.total, cfg.lambda_task));
  t.total = total_loss(t.l_align, t.l_router, t.l_gen, cfg.lambda_task);
  out.total = total;
  return out;
}

}  // namespace pvlab
