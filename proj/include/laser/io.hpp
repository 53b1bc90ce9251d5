/*
 * Copyright 2026 The laserloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "laser/circular_feature.hpp"
#include "laser/localizer.hpp"
#include "laser/raycast.hpp"
#include "laser/training.hpp"

namespace laser {

using json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// ---- circular features ----------------------------------------------------

inline json to_json(const CircularFeature& f) {
  json valid = json::array();
  json segs = json::array();
  for (std::size_t a = 0; a < f.V(); ++a) {
    valid.push_back(f.valid(a));
    json row = json::array();
    for (std::size_t j = 0; j < f.D(); ++j) row.push_back(f.segments()(a, j));
    segs.push_back(std::move(row));
  }
  return {{"V", f.V()}, {"D", f.D()}, {"valid", std::move(valid)}, {"segments", std::move(segs)}};
}

inline CircularFeature feature_from_json(const json& j) {
  const json& f = j.contains("feature") ? j.at("feature") : j;
  const std::size_t V = f.at("V").get<std::size_t>();
  const std::size_t D = f.at("D").get<std::size_t>();
  const json& valid = f.at("valid");
  const json& segs = f.at("segments");
  if (V == 0 || D == 0) throw std::invalid_argument("feature: V and D must be positive");
  if (valid.size() != V || segs.size() != V) throw std::invalid_argument("feature: expected V rows");
  Matrix m(V, D);
  Mask mask(V);
  for (std::size_t a = 0; a < V; ++a) {
    if (segs[a].size() != D) throw std::invalid_argument("feature: row " + std::to_string(a) + " has wrong length");
    mask[a] = valid[a].get<bool>() ? 1 : 0;
    for (std::size_t k = 0; k < D; ++k) m(a, k) = segs[a][k].get<double>();
  }
  return {std::move(m), std::move(mask)};
}

// A query file holds one feature, one {"feature": ...} record, or a list.
inline std::vector<CircularFeature> features_from_json(const json& j) {
  std::vector<CircularFeature> out;
  if (j.is_array()) {
    for (const json& e : j) out.push_back(feature_from_json(e));
  } else {
    out.push_back(feature_from_json(j));
  }
  return out;
}

inline json pose_to_json(const Pose& p) { return {{"x", p.t.x()}, {"y", p.t.y()}, {"theta", p.theta}}; }

inline Pose pose_from_json(const json& j) {
  return {Vec2(j.at("x").get<double>(), j.at("y").get<double>()), j.at("theta").get<double>()};
}

inline json to_json(const QuerySample& q) {
  return {{"gt", pose_to_json(q.gt)},
          {"source", q.source == QuerySource::depth_encoded ? "depth_encoded" : "oracle_noisy"},
          {"fov", q.fov},
          {"feature", to_json(q.feature)}};
}

// ---- depth scans ------------------------------------------------------------

inline json to_json(const DepthScan& s) {
  json depths = json::array();
  json sem = json::array();
  json psi = json::array();
  for (std::size_t k = 0; k < s.num_rays(); ++k) {
    depths.push_back(std::isinf(s.depths[k]) ? json(nullptr) : json(s.depths[k]));
    sem.push_back(s.semantics[k] ? json(std::string(to_string(*s.semantics[k]))) : json(nullptr));
    psi.push_back(std::isinf(s.depths[k]) ? json(nullptr) : json(s.incident_angles[k]));
  }
  return {{"origin", {s.origin.x(), s.origin.y()}},
          {"heading", s.heading},
          {"depths", std::move(depths)},
          {"semantics", std::move(sem)},
          {"incident_angles", std::move(psi)}};
}

inline DepthScan scan_from_json(const json& j) {
  DepthScan s;
  if (j.contains("origin")) s.origin = Vec2(j["origin"].at(0).get<double>(), j["origin"].at(1).get<double>());
  s.heading = j.value("heading", 0.0);
  const json& depths = j.at("depths");
  if (depths.empty()) throw std::invalid_argument("scan: no rays");
  const double inf = std::numeric_limits<double>::infinity();
  for (const json& d : depths) s.depths.push_back(d.is_null() ? inf : d.get<double>());
  s.semantics.assign(s.depths.size(), std::nullopt);
  s.incident_angles.assign(s.depths.size(), 0.0);
  if (j.contains("semantics")) {
    const json& sem = j["semantics"];
    for (std::size_t k = 0; k < sem.size() && k < s.depths.size(); ++k) {
      if (sem[k].is_null()) continue;
      const auto label = parse_semantic(sem[k].get<std::string>());
      if (!label) throw std::invalid_argument("scan: unknown semantic label at ray " + std::to_string(k));
      s.semantics[k] = label;
    }
  }
  if (j.contains("incident_angles")) {
    const json& psi = j["incident_angles"];
    for (std::size_t k = 0; k < psi.size() && k < s.depths.size(); ++k) {
      if (!psi[k].is_null()) s.incident_angles[k] = psi[k].get<double>();
    }
  }
  return s;
}

inline std::vector<DepthScan> scans_from_json(const json& j) {
  std::vector<DepthScan> out;
  if (j.is_array()) {
    for (const json& e : j) out.push_back(scan_from_json(e.contains("scan") ? e["scan"] : e));
  } else {
    out.push_back(scan_from_json(j.contains("scan") ? j["scan"] : j));
  }
  return out;
}

// ---- hypotheses -------------------------------------------------------------

inline json to_json(const std::vector<PoseHypothesis>& hyps) {
  json out = json::array();
  for (const PoseHypothesis& h : hyps) {
    out.push_back({{"x", h.t.x()}, {"y", h.t.y()}, {"theta", h.theta}, {"score", h.score}, {"likelihood", h.likelihood}});
  }
  return out;
}

inline std::vector<PoseHypothesis> hypotheses_from_json(const json& j) {
  std::vector<PoseHypothesis> out;
  for (const json& e : j) {
    PoseHypothesis h;
    h.t = Vec2(e.at("x").get<double>(), e.at("y").get<double>());
    h.theta = e.at("theta").get<double>();
    h.score = e.value("score", 0.0);
    h.likelihood = e.value("likelihood", 0.0);
    out.push_back(h);
  }
  return out;
}

// Results: one hypothesis list per query.
inline std::vector<std::vector<PoseHypothesis>> results_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("results: expected a list of hypothesis lists");
  std::vector<std::vector<PoseHypothesis>> out;
  for (const json& e : j) out.push_back(hypotheses_from_json(e));
  return out;
}

inline std::vector<Pose> poses_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("ground truth: expected a list of poses");
  std::vector<Pose> out;
  for (const json& e : j) out.push_back(pose_from_json(e.contains("gt") ? e["gt"] : e));
  return out;
}

// ---- posterior exports ------------------------------------------------------

/// Binary 16-bit PGM; the top row is the largest y.
inline void write_pgm16(std::ostream& os, const PosteriorGrid& g) {
  const std::size_t nx = g.spec.nx;
  const std::size_t ny = g.spec.ny;
  os << "P5\n" << nx << ' ' << ny << "\n65535\n";
  for (std::size_t r = 0; r < ny; ++r) {
    const std::size_t j = ny - 1 - r;
    for (std::size_t i = 0; i < nx; ++i) {
      const double s = std::clamp(g.scores(i, j), 0.0, 1.0);
      const auto v = static_cast<std::uint16_t>(std::lround(s * 65535.0));
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      os.write(bytes, 2);
    }
  }
}

inline void save_pgm16(const std::string& path, const PosteriorGrid& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_pgm16(os, g);
}

inline std::string fmt_double(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

inline void write_grid_csv(std::ostream& os, const PosteriorGrid& g) {
  os << "x,y,score,best_theta\n";
  for (std::size_t j = 0; j < g.spec.ny; ++j) {
    for (std::size_t i = 0; i < g.spec.nx; ++i) {
      if (!g.free_mask(i, j)) continue;
      const Vec2 c = g.spec.center(i, j);
      os << fmt_double(c.x()) << ',' << fmt_double(c.y()) << ',' << fmt_double(g.scores(i, j)) << ','
         << fmt_double(g.best_theta(i, j)) << '\n';
    }
  }
}

inline void write_loss_csv(std::ostream& os, const std::vector<EpochLoss>& curve) {
  os << "epoch,mean_triplet,mean_context,total\n";
  for (const EpochLoss& e : curve) {
    os << e.epoch << ',' << fmt_double(e.mean_triplet) << ',' << fmt_double(e.mean_context) << ','
       << fmt_double(e.total) << '\n';
  }
}

}  // namespace laser
