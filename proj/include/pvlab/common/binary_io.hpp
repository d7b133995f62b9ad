// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace pvlab::io {

// Flat little-endian f64 arrays, independent of host byte order.
void write_f64(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_f64(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc, int indent = 2);
nlohmann::json read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// "<stem>.bin" + "<stem>.json" pair used by every array-with-metadata format.
std::filesystem::path bin_path(const std::filesystem::path& stem);
std::filesystem::path json_path(const std::filesystem::path& stem);

}  // namespace pvlab::io
