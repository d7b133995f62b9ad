// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "pvlab/diffcore/matrix.hpp"
#include "pvlab/router/router.hpp"

namespace pvlab {

// CSV: t,label,experts,weights  (experts/weights ';'-joined, best first).
// `label` is the argmax pseudo-phoneme class of each row of `labels`.
std::string routing_trace_csv(std::span<const RoutingOutcome> outcomes, const Matrix& labels);
void write_routing_trace(const std::filesystem::path& path, std::span<const RoutingOutcome> outcomes,
                         const Matrix& labels);

}  // namespace pvlab
