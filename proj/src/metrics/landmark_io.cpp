// Copyright 2026 The pvlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pvlab/metrics/landmark_io.hpp"

#include <cstdio>

#include "pvlab/common/binary_io.hpp"
#include "pvlab/common/errors.hpp"

namespace pvlab {

using nlohmann::json;

json landmarks_to_json(const LandmarkSequence& seq) {
  const auto& a = seq.anchors();
  json frames = json::array();
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    json pts = json::array();
    for (std::size_t i = 0; i < kLipLandmarks; ++i) {
      const Point2 p = seq.point(t, i);
      pts.push_back({p.x, p.y});
    }
    frames.push_back(std::move(pts));
  }
  return {{"fps", seq.fps()},
          {"anchors", {{"left", a.left}, {"right", a.right}, {"top", a.top}, {"bottom", a.bottom}}},
          {"frames", std::move(frames)}};
}

LandmarkSequence landmarks_from_json(const json& doc, LandmarkRole role, const std::string& source) {
  double fps = 25.0;
  LandmarkAnchors anchors;
  try {
    if (!doc.is_object()) throw ConfigError(source + ": landmark document is not an object");
    if (doc.contains("fps")) fps = doc.at("fps").get<double>();
    if (doc.contains("anchors")) {
      const auto& a = doc.at("anchors");
      anchors.left = a.at("left").get<std::size_t>();
      anchors.right = a.at("right").get<std::size_t>();
      anchors.top = a.at("top").get<std::size_t>();
      anchors.bottom = a.at("bottom").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(source + ": bad landmark header: " + e.what());
  }
  if (!doc.contains("frames") || !doc.at("frames").is_array()) {
    throw ConfigError(source + ": missing \"frames\" array");
  }
  const auto& frames = doc.at("frames");
  std::vector<double> coords;
  coords.reserve(frames.size() * kLipLandmarks * 2);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    if (!f.is_array() || f.size() != kLipLandmarks) {
      throw ConfigError(source + ": frame " + std::to_string(t) + " must hold 26 points");
    }
    for (const auto& p : f) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ConfigError(source + ": frame " + std::to_string(t) + " has a malformed point");
      }
      coords.push_back(p[0].get<double>());
      coords.push_back(p[1].get<double>());
    }
  }
  try {
    return LandmarkSequence(std::move(coords), role, anchors, fps);
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

void save_landmarks(const std::filesystem::path& path, const LandmarkSequence& seq) {
  io::write_json(path, landmarks_to_json(seq));
}

LandmarkSequence load_landmarks(const std::filesystem::path& path, LandmarkRole role) {
  return landmarks_from_json(io::read_json(path), role, path.string());
}

std::string metrics_csv_header() { return "id,lse_d,tmdc,r_1,r_2,r_3,r_4,r_5"; }

std::string metrics_csv_row(const std::string& id, double lse, const TmdcResult& tm) {
  std::string row = id;
  char buf[40];
  auto add = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    row += buf;
  };
  add(lse);
  add(tm.score);
  for (double r : tm.r) add(r);
  return row;
}

}  // namespace pvlab
