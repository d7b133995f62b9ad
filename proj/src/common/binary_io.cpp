// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/common/binary_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pvlab/common/errors.hpp"

namespace pvlab::io {
namespace {

std::array<char, 8> encode_le(double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> out{};
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<char>(bits & 0xff);
    bits >>= 8;
  }
  return out;
}

double decode_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_f64(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      const auto bytes = encode_le(v);
      out.write(bytes.data(), 8);
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> read_f64(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.size() % 8 != 0) {
    throw IoError("f64 file size not a multiple of 8: " + path.string());
  }
  std::vector<double> values(raw.size() / 8);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = decode_le(p + 8 * i);
  return values;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc, int indent) {
  write_text(path, doc.dump(indent) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path bin_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".bin";
  return p;
}

std::filesystem::path json_path(const std::filesystem::path& stem) {
  auto p = stem;
  p += ".json";
  return p;
}

}  // namespace pvlab::io
