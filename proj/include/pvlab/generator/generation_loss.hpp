// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "pvlab/diffcore/tape.hpp"
#include "pvlab/generator/frames.hpp"

namespace pvlab {

struct GenerationWeights {
  double l1 = 1.0;
  double perceptual = 0.1;
  double temporal = 0.5;
};

struct GenerationTerms {
  double l1 = 0.0;          // mean |gen - real| over all pixels
  double perceptual = 0.0;  // mean over frames and features of (phi(gen) - phi(real))^2
  double temporal = 0.0;    // mean |diff_t gen - diff_t real|
  double total = 0.0;       // weighted sum
};

GenerationTerms generation_loss(const FrameSequence& gen, const FrameSequence& real,
                                const PerceptualNet& phi, const GenerationWeights& w);

struct TapeGeneration {
  Node total;
  GenerationTerms values;
};

// gen: T x 256 frames on the tape. Temporal differences are taken inside
// consecutive segments of `segment_length` rows (0 = the whole sequence),
// so independent clips can share one batch.
TapeGeneration generation_loss(Tape& tape, Node gen, const Matrix& real, const PerceptualNet& phi,
                               const GenerationWeights& w, std::size_t segment_length = 0);

// L = L_align + L_router + lambda_task * L_gen. Throws NumericalError naming
// the first non-finite term.
double total_loss(double l_align, double l_router, double l_gen, double lambda_task);

}  // namespace pvlab
