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

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "laser/geometry.hpp"

namespace laser {

enum class Semantic : std::uint8_t { wall = 0, door = 1, window = 2 };

inline constexpr std::size_t kNumSemantics = 3;

inline std::string_view to_string(Semantic s) {
  switch (s) {
    case Semantic::wall: return "wall";
    case Semantic::door: return "door";
    case Semantic::window: return "window";
  }
  return "wall";
}

inline std::optional<Semantic> parse_semantic(std::string_view name) {
  if (name == "wall") return Semantic::wall;
  if (name == "door") return Semantic::door;
  if (name == "window") return Semantic::window;
  return std::nullopt;
}

/// Raised for malformed floor maps. `ring` / `edge` locate the offending
/// element when known.
class FloorMapError : public std::runtime_error {
 public:
  FloorMapError(const std::string& what, std::optional<std::size_t> ring = {},
                std::optional<std::size_t> edge = {})
      : std::runtime_error(format(what, ring, edge)), ring_(ring), edge_(edge) {}

  std::optional<std::size_t> ring() const { return ring_; }
  std::optional<std::size_t> edge() const { return edge_; }

 private:
  static std::string format(const std::string& what, std::optional<std::size_t> ring,
                            std::optional<std::size_t> edge) {
    std::string msg = what;
    if (ring) msg += " (ring " + std::to_string(*ring);
    if (ring && edge) msg += ", edge " + std::to_string(*edge);
    if (ring) msg += ")";
    return msg;
  }

  std::optional<std::size_t> ring_;
  std::optional<std::size_t> edge_;
};

struct Edge {
  Vec2 a;
  Vec2 b;
  Vec2 normal;  // unit, pointing into free space
  Semantic label = Semantic::wall;
  std::size_t ring = 0;

  double length() const { return (b - a).norm(); }
};

struct Ring {
  std::vector<Vec2> vertices;      // closing vertex not repeated
  std::vector<Semantic> labels;    // labels[i] belongs to vertices[i] -> vertices[i+1]
  bool hole = false;
};

/// Polygonal floor map. Outer rings are stored counter-clockwise and holes
/// clockwise, so free space is always on the left of edge travel.
class FloorMap {
 public:
  FloorMap() = default;

  /// Validates and normalizes raw rings. Hole / outer status is derived from
  /// nesting depth; the input winding is irrelevant.
  static FloorMap from_rings(std::vector<Ring> rings, std::optional<Vec2> free_space_hint = {}) {
    if (rings.empty()) throw FloorMapError("floor map has no rings");
    for (std::size_t r = 0; r < rings.size(); ++r) validate_ring(rings[r], r);

    FloorMap map;
    map.rings_ = std::move(rings);
    for (std::size_t r = 0; r < map.rings_.size(); ++r) {
      Ring& ring = map.rings_[r];
      std::size_t depth = 0;
      for (std::size_t o = 0; o < map.rings_.size(); ++o) {
        if (o != r && point_in_ring(ring_probe(ring), map.rings_[o].vertices)) ++depth;
      }
      ring.hole = depth % 2 == 1;
      const bool ccw = signed_area2(ring.vertices) > 0.0;
      if (ccw == ring.hole) reverse_ring(ring);
    }
    map.build_edges();
    map.hint_ = free_space_hint;
    if (free_space_hint && !map.contains(*free_space_hint)) {
      throw FloorMapError("free_space_hint does not lie in free space");
    }
    return map;
  }

  const std::vector<Ring>& rings() const { return rings_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::optional<Vec2>& free_space_hint() const { return hint_; }
  const BoundingBox& bbox() const { return bbox_; }

  /// Even-odd free-space test over all rings.
  bool contains(const Vec2& p) const {
    bool inside = false;
    for (const Ring& r : rings_) {
      if (point_in_ring(p, r.vertices)) inside = !inside;
    }
    return inside;
  }

  /// Distance from p to the nearest edge.
  double clearance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const Edge& e : edges_) best = std::min(best, point_segment_distance(p, e.a, e.b));
    return best;
  }

 private:
  static void validate_ring(Ring& ring, std::size_t r) {
    auto& v = ring.vertices;
    if (v.size() >= 2 && (v.front() - v.back()).norm() < 1e-12) {
      v.pop_back();
      if (ring.labels.size() == v.size() + 1) ring.labels.pop_back();
    }
    if (v.size() < 3) throw FloorMapError("degenerate ring: fewer than 3 distinct vertices", r);
    if (ring.labels.size() != v.size()) {
      throw FloorMapError("label count " + std::to_string(ring.labels.size()) +
                              " does not match edge count " + std::to_string(v.size()),
                          r);
    }
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
      if ((v[(i + 1) % n] - v[i]).norm() < 1e-12) throw FloorMapError("zero-length edge", r, i);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a0 = v[i];
      const Vec2& a1 = v[(i + 1) % n];
      // Adjacent edge folding back onto this one.
      const Vec2& a2 = v[(i + 2) % n];
      if (cross2(a1 - a0, a2 - a1) == 0.0 && (a1 - a0).dot(a2 - a1) < 0.0) {
        throw FloorMapError("self-intersecting ring", r, (i + 1) % n);
      }
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        if (intersect_segments(a0, a1, v[j], v[(j + 1) % n])) {
          throw FloorMapError("self-intersecting ring", r, j);
        }
      }
    }
    if (signed_area2(v) == 0.0) throw FloorMapError("degenerate ring: zero area", r);
  }

  // A point strictly inside the ring, used for nesting tests.
  static Vec2 ring_probe(const Ring& ring) {
    const auto& v = ring.vertices;
    const bool ccw = signed_area2(v) > 0.0;
    double best_len = -1.0;
    Vec2 probe = v[0];
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Vec2 a = v[i];
      const Vec2 b = v[(i + 1) % v.size()];
      const double len = (b - a).norm();
      if (len <= best_len) continue;
      Vec2 left(-(b - a).y(), (b - a).x());
      left /= len;
      const Vec2 inward = ccw ? left : Vec2(-left);
      probe = 0.5 * (a + b) + inward * std::min(1e-6, 1e-3 * len);
      best_len = len;
    }
    return probe;
  }

  static void reverse_ring(Ring& ring) {
    const std::size_t n = ring.vertices.size();
    std::vector<Vec2> v(n);
    std::vector<Semantic> l(n);
    for (std::size_t j = 0; j < n; ++j) {
      v[j] = ring.vertices[(n - j) % n];
      l[j] = ring.labels[n - 1 - j];
    }
    ring.vertices = std::move(v);
    ring.labels = std::move(l);
  }

  void build_edges() {
    edges_.clear();
    bbox_.min = rings_.front().vertices.front();
    bbox_.max = bbox_.min;
    for (std::size_t r = 0; r < rings_.size(); ++r) {
      const Ring& ring = rings_[r];
      const std::size_t n = ring.vertices.size();
      for (std::size_t i = 0; i < n; ++i) {
        Edge e;
        e.a = ring.vertices[i];
        e.b = ring.vertices[(i + 1) % n];
        const Vec2 d = (e.b - e.a).normalized();
        e.normal = Vec2(-d.y(), d.x());
        e.label = ring.labels[i];
        e.ring = r;
        edges_.push_back(e);
        bbox_.min = bbox_.min.cwiseMin(e.a);
        bbox_.max = bbox_.max.cwiseMax(e.a);
      }
    }
  }

  std::vector<Ring> rings_;
  std::vector<Edge> edges_;
  std::optional<Vec2> hint_;
  BoundingBox bbox_;
};

inline FloorMap parse_floormap(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw FloorMapError(std::string("schema violation: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("rings") || !doc["rings"].is_array()) {
    throw FloorMapError("schema violation: missing \"rings\" array");
  }
  std::vector<Ring> rings;
  for (std::size_t r = 0; r < doc["rings"].size(); ++r) {
    const auto& jr = doc["rings"][r];
    if (!jr.is_object() || !jr.contains("vertices") || !jr["vertices"].is_array()) {
      throw FloorMapError("schema violation: ring needs a \"vertices\" array", r);
    }
    if (jr.contains("closed") && jr["closed"].is_boolean() && !jr["closed"].get<bool>()) {
      throw FloorMapError("open ring", r);
    }
    Ring ring;
    for (const auto& jv : jr["vertices"]) {
      if (!jv.is_array() || jv.size() != 2 || !jv[0].is_number() || !jv[1].is_number()) {
        throw FloorMapError("schema violation: vertex must be [x, y]", r);
      }
      ring.vertices.emplace_back(jv[0].get<double>(), jv[1].get<double>());
    }
    if (jr.contains("labels")) {
      if (!jr["labels"].is_array()) throw FloorMapError("schema violation: labels must be an array", r);
      for (std::size_t e = 0; e < jr["labels"].size(); ++e) {
        const auto& jl = jr["labels"][e];
        if (!jl.is_string()) throw FloorMapError("schema violation: label must be a string", r, e);
        auto s = parse_semantic(jl.get<std::string>());
        if (!s) throw FloorMapError("unknown semantic label \"" + jl.get<std::string>() + "\"", r, e);
        ring.labels.push_back(*s);
      }
    } else {
      ring.labels.assign(ring.vertices.size(), Semantic::wall);
    }
    rings.push_back(std::move(ring));
  }
  std::optional<Vec2> hint;
  if (doc.contains("free_space_hint") && !doc["free_space_hint"].is_null()) {
    const auto& jh = doc["free_space_hint"];
    if (!jh.is_array() || jh.size() != 2) throw FloorMapError("schema violation: free_space_hint must be [x, y]");
    hint = Vec2(jh[0].get<double>(), jh[1].get<double>());
  }
  return FloorMap::from_rings(std::move(rings), hint);
}

inline nlohmann::json to_json(const FloorMap& map) {
  nlohmann::json doc;
  doc["rings"] = nlohmann::json::array();
  for (const Ring& r : map.rings()) {
    nlohmann::json jr;
    jr["vertices"] = nlohmann::json::array();
    for (const Vec2& v : r.vertices) jr["vertices"].push_back({v.x(), v.y()});
    jr["labels"] = nlohmann::json::array();
    for (Semantic s : r.labels) jr["labels"].push_back(std::string(to_string(s)));
    doc["rings"].push_back(std::move(jr));
  }
  if (map.free_space_hint()) {
    doc["free_space_hint"] = {map.free_space_hint()->x(), map.free_space_hint()->y()};
  }
  return doc;
}

struct MapPoint {
  Vec2 t;
  Vec2 n;
  Semantic s = Semantic::wall;
  std::size_t edge_id = 0;

  std::array<double, kNumSemantics> one_hot() const {
    std::array<double, kNumSemantics> h{};
    h[static_cast<std::size_t>(s)] = 1.0;
    return h;
  }
};

struct PointCloudMap {
  std::vector<MapPoint> points;
  double interval = 0.1;
  BoundingBox bbox;
};

inline constexpr double kDefaultInterval = 0.10;

/// Samples every edge at arclength k * interval from its start. Points that
/// coincide (within 1e-9) with an earlier point are dropped, so a shared
/// corner keeps the normal of the first edge that produced it.
inline PointCloudMap rasterize(const FloorMap& map, double interval = kDefaultInterval) {
  if (!(interval > 0.0)) throw std::invalid_argument("rasterize: interval must be positive");
  PointCloudMap out;
  out.interval = interval;
  out.bbox = map.bbox();

  constexpr double kCoincident = 1e-9;
  constexpr double kBucket = 1e-3;
  auto key = [](long ix, long iy) { return (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint32_t>(iy); };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;

  const auto& edges = map.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    const double len = edge.length();
    const auto [whole, frac] = split_index(len / interval);
    const long count = whole + 1;
    for (long k = 0; k < count; ++k) {
      const double s = std::min(1.0, static_cast<double>(k) * interval / len);
      const Vec2 p = (k == whole && frac == 0.0) ? edge.b : Vec2(edge.a + s * (edge.b - edge.a));
      const long ix = static_cast<long>(std::floor(p.x() / kBucket));
      const long iy = static_cast<long>(std::floor(p.y() / kBucket));
      bool duplicate = false;
      for (long dx = -1; dx <= 1 && !duplicate; ++dx) {
        for (long dy = -1; dy <= 1 && !duplicate; ++dy) {
          auto it = buckets.find(key(ix + dx, iy + dy));
          if (it == buckets.end()) continue;
          for (std::size_t idx : it->second) {
            if ((out.points[idx].t - p).norm() < kCoincident) {
              duplicate = true;
              break;
            }
          }
        }
      }
      if (duplicate) continue;
      buckets[key(ix, iy)].push_back(out.points.size());
      out.points.push_back(MapPoint{p, edge.normal, edge.label, e});
    }
  }
  return out;
}

}  // namespace laser
