// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/generator/frames.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"

namespace pvlab {

FrameSequence::FrameSequence(std::size_t t, std::vector<double> px) : T(t), pixels(std::move(px)) {
  if (pixels.size() != T * kFramePixels) {
    throw DimensionError(dimension_message("frame sequence pixel count", T * kFramePixels, pixels.size()));
  }
  if (!all_finite(pixels)) throw NumericalError("frame sequence has non-finite pixels");
}

FrameSequence FrameSequence::from_matrix(const Matrix& m) {
  if (m.cols != kFramePixels) throw DimensionError(dimension_message("frame width", kFramePixels, m.cols));
  return FrameSequence(m.rows, m.data);
}

void FrameSequence::save(const std::filesystem::path& stem) const {
  io::write_f64(io::bin_path(stem), pixels);
  io::write_json(io::json_path(stem), {{"format", "pvlab.frames"},
                                       {"dtype", "f64"},
                                       {"shape", {T, kFrameSide, kFrameSide}}});
}

FrameSequence FrameSequence::load(const std::filesystem::path& stem) {
  const auto meta = io::read_json(io::json_path(stem));
  std::vector<std::size_t> shape;
  try {
    shape = meta.at("shape").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad frame sidecar " + stem.string() + ": " + e.what());
  }
  if (shape.size() != 3 || shape[1] != kFrameSide || shape[2] != kFrameSide) {
    throw DimensionError("frame sidecar " + stem.string() + ": expected shape [T,16,16]");
  }
  return FrameSequence(shape[0], io::read_f64(io::bin_path(stem)));
}

void FrameSequence::write_pgm(const std::filesystem::path& dir, const std::string& prefix) const {
  std::filesystem::create_directories(dir);
  for (std::size_t t = 0; t < T; ++t) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04zu.pgm", prefix.c_str(), t);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    out << "P5\n" << kFrameSide << ' ' << kFrameSide << "\n255\n";
    for (double v : frame(t)) {
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
  }
}

Matrix temporal_diff(const FrameSequence& seq) {
  if (seq.T < 2) throw ConfigError("temporal_diff needs T >= 2, got " + std::to_string(seq.T));
  Matrix out(seq.T - 1, kFramePixels);
  for (std::size_t t = 0; t + 1 < seq.T; ++t) {
    const auto a = seq.frame(t);
    const auto b = seq.frame(t + 1);
    for (std::size_t p = 0; p < kFramePixels; ++p) out(t, p) = b[p] - a[p];
  }
  return out;
}

namespace {

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_decoder(const Mlp& decoder) {
  if (decoder.spec.output_width() != kFramePixels) {
    throw DimensionError(dimension_message("decoder output width", kFramePixels, decoder.spec.output_width()));
  }
}

}  // namespace

FrameSequence decode_frames(const Matrix& moe_outputs, const Mlp& decoder) {
  check_decoder(decoder);
  Matrix y = decoder(moe_outputs);
  for (double& v : y.data) v = logistic(v);
  return FrameSequence(y.rows, std::move(y.data));
}

Node decode_frames(Tape& tape, Node moe_outputs, const Mlp& decoder) {
  check_decoder(decoder);
  return tape.sigmoid(decoder.record(tape, moe_outputs));
}

PerceptualNet PerceptualNet::create(std::uint64_t seed) {
  return PerceptualNet(Mlp::create(MLPSpec::one_hidden(kFramePixels, kFeatureWidth, kFeatureWidth), seed));
}

}  // namespace pvlab
