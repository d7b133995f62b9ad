// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/router/routing_trace.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"

namespace pvlab {

std::string routing_trace_csv(std::span<const RoutingOutcome> outcomes, const Matrix& labels) {
  if (labels.rows != outcomes.size()) throw DimensionError(dimension_message("trace label rows", outcomes.size(), labels.rows));
  std::ostringstream out;
  out << "t,label,experts,weights\n";
  char buf[32];
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    const auto row = labels.row(t);
    const auto label = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    out << t << ',' << label << ',';
    const auto& o = outcomes[t];
    for (std::size_t j = 0; j < o.selected.size(); ++j) out << (j ? ";" : "") << o.selected[j];
    out << ',';
    for (std::size_t j = 0; j < o.weights.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", o.weights[j]);
      out << (j ? ";" : "") << buf;
    }
    out << '\n';
  }
  return out.str();
}

void write_routing_trace(const std::filesystem::path& path, std::span<const RoutingOutcome> outcomes,
                         const Matrix& labels) {
  io::write_text(path, routing_trace_csv(outcomes, labels));
}

}  // namespace pvlab
