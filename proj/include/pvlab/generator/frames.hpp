// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pvlab/diffcore/matrix.hpp"
#include "pvlab/diffcore/mlp.hpp"
#include "pvlab/diffcore/tape.hpp"

namespace pvlab {

inline constexpr std::size_t kFrameSide = 16;
inline constexpr std::size_t kFramePixels = kFrameSide * kFrameSide;

// T grayscale 16x16 frames, row-major per frame, values in [0,1].
struct FrameSequence {
  std::size_t T = 0;
  std::vector<double> pixels;

  FrameSequence() = default;
  FrameSequence(std::size_t t, std::vector<double> px);
  static FrameSequence from_matrix(const Matrix& m);

  std::span<const double> frame(std::size_t t) const {
    return std::span<const double>(pixels).subspan(t * kFramePixels, kFramePixels);
  }
  std::span<double> frame(std::size_t t) {
    return std::span<double>(pixels).subspan(t * kFramePixels, kFramePixels);
  }
  Matrix as_matrix() const { return Matrix(T, kFramePixels, pixels); }

  // "<stem>.bin" flat f64 + "<stem>.json" {"shape":[T,16,16]}.
  void save(const std::filesystem::path& stem) const;
  static FrameSequence load(const std::filesystem::path& stem);
  // One binary PGM per frame: <dir>/<prefix>_<t>.pgm
  void write_pgm(const std::filesystem::path& dir, const std::string& prefix) const;

  bool operator==(const FrameSequence&) const = default;
};

// (T-1) x 256: out[t] = frame[t+1] - frame[t]. Throws for T < 2.
Matrix temporal_diff(const FrameSequence& seq);

// Decoder output passed through the logistic map; one frame per row.
FrameSequence decode_frames(const Matrix& moe_outputs, const Mlp& decoder);
Node decode_frames(Tape& tape, Node moe_outputs, const Mlp& decoder);

// Fixed random feature extractor standing in for a pretrained perceptual
// network. Parameters never receive updates.
class PerceptualNet {
 public:
  static constexpr std::size_t kFeatureWidth = 32;

  static PerceptualNet create(std::uint64_t seed);

  const Mlp& network() const { return net_; }
  Matrix features(const Matrix& frames) const { return net_(frames); }
  Node features(Tape& tape, Node frames) const {
    return mlp_forward_frozen(tape, net_.params, net_.spec, frames);
  }

 private:
  explicit PerceptualNet(Mlp net) : net_(std::move(net)) {}
  Mlp net_;
};

}  // namespace pvlab
