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
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "laser/floormap.hpp"
#include "laser/training.hpp"

namespace laser {

enum class SceneStyle : std::uint8_t { single_room, multi_room, symmetric };

inline std::string_view to_string(SceneStyle s) {
  switch (s) {
    case SceneStyle::single_room: return "single_room";
    case SceneStyle::multi_room: return "multi_room";
    case SceneStyle::symmetric: return "symmetric";
  }
  return "single_room";
}

inline SceneStyle parse_scene_style(std::string_view s) {
  if (s == "single_room") return SceneStyle::single_room;
  if (s == "multi_room") return SceneStyle::multi_room;
  if (s == "symmetric") return SceneStyle::symmetric;
  throw std::invalid_argument("unknown scene style \"" + std::string(s) + "\"");
}

struct SceneParams {
  double width = 4.0;   // single_room
  double height = 3.0;  // single_room
  std::size_t rooms = 3;  // multi_room
  double wall = 0.15;     // partition thickness
  double door_width = 0.9;
  bool semantics = true;        // random door / window edges (ignored for symmetric)
  bool disambiguate = false;    // symmetric: label one outer wall as a door
  std::size_t num_queries = 10;
  double clearance = 0.3;
  // Depth-encoded query features.
  std::size_t V = 16;
  std::size_t D = 128;
  double d_max = 10.0;
  double fov = kTwoPi;
};

struct SyntheticScene {
  FloorMap floormap;
  std::vector<QuerySample> gt_queries;
  std::uint64_t seed = 0;
  SceneStyle style = SceneStyle::single_room;
};

namespace detail {

struct RoomBox {
  double xs, xe, b, t;
};

struct Doorway {
  double lo, hi;
};

// Boundary of a left-to-right chain of rooms joined by doorway passages
// through walls of thickness (xs[i+1] - xe[i]). Counter-clockwise.
inline std::vector<Vec2> chain_outline(const std::vector<RoomBox>& rooms, const std::vector<Doorway>& doors) {
  std::vector<Vec2> v;
  const std::size_t n = rooms.size();
  for (std::size_t i = 0; i < n; ++i) {
    v.emplace_back(rooms[i].xs, rooms[i].b);
    v.emplace_back(rooms[i].xe, rooms[i].b);
    if (i + 1 < n) {
      v.emplace_back(rooms[i].xe, doors[i].lo);
      v.emplace_back(rooms[i + 1].xs, doors[i].lo);
    }
  }
  for (std::size_t r = n; r-- > 0;) {
    v.emplace_back(rooms[r].xe, rooms[r].t);
    v.emplace_back(rooms[r].xs, rooms[r].t);
    if (r > 0) {
      v.emplace_back(rooms[r].xs, doors[r - 1].hi);
      v.emplace_back(rooms[r - 1].xe, doors[r - 1].hi);
    }
  }
  return v;
}

// Splits long edges to insert door / window openings on them.
template <typename Rng>
Ring decorate(const std::vector<Vec2>& outline, Rng& rng, double door_width) {
  Ring ring;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::size_t n = outline.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = outline[i];
    const Vec2 b = outline[(i + 1) % n];
    const double len = (b - a).norm();
    const double roll = u01(rng);
    const double frac = u01(rng);
    const double win = 0.8 + 0.7 * u01(rng);
    if (len < 2.0 || roll > 0.45) {
      ring.vertices.push_back(a);
      ring.labels.push_back(Semantic::wall);
      continue;
    }
    const Semantic label = roll < 0.2 ? Semantic::door : Semantic::window;
    const double w = label == Semantic::door ? door_width : std::min(win, len - 0.8);
    const double start = 0.4 + frac * (len - 0.8 - w);
    const Vec2 dir = (b - a) / len;
    ring.vertices.push_back(a);
    ring.labels.push_back(Semantic::wall);
    ring.vertices.push_back(a + dir * start);
    ring.labels.push_back(label);
    ring.vertices.push_back(a + dir * (start + w));
    ring.labels.push_back(Semantic::wall);
  }
  return ring;
}

}  // namespace detail

/// Procedural rectilinear floor plans with ground-truth depth-encoded
/// queries. Deterministic for a given seed.
inline SyntheticScene generate_scene(SceneStyle style, const SceneParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  SyntheticScene scene;
  scene.seed = seed;
  scene.style = style;
  std::vector<detail::RoomBox> rooms;
  std::vector<detail::Doorway> doors;
  constexpr double kMargin = 0.3;

  switch (style) {
    case SceneStyle::single_room: {
      if (!(params.width > 2 * params.clearance) || !(params.height > 2 * params.clearance)) {
        throw std::invalid_argument("generate_scene: room too small for the requested clearance");
      }
      rooms.push_back({0.0, params.width, 0.0, params.height});
      break;
    }
    case SceneStyle::multi_room: {
      if (params.rooms < 2) throw std::invalid_argument("generate_scene: multi_room needs at least 2 rooms");
      if (params.door_width + 2 * kMargin > 2.0) throw std::invalid_argument("generate_scene: door does not fit");
      double x = 0.0;
      for (std::size_t r = 0; r < params.rooms; ++r) {
        const double w = uniform(2.5, 4.5);
        const double h = uniform(2.5, 4.5);
        const double b = r == 0 ? 0.0 : rooms.back().b + uniform(-0.8, 0.8);
        rooms.push_back({x, x + w, b, b + h});
        x += w + params.wall;
      }
      for (std::size_t r = 0; r + 1 < rooms.size(); ++r) {
        const double lo = std::max(rooms[r].b, rooms[r + 1].b) + kMargin;
        const double hi = std::min(rooms[r].t, rooms[r + 1].t) - kMargin - params.door_width;
        if (hi < lo) throw std::invalid_argument("generate_scene: rooms do not overlap enough for a doorway");
        const double d = uniform(lo, hi);
        doors.push_back({d, d + params.door_width});
      }
      break;
    }
    case SceneStyle::symmetric: {
      // Room 1 is room 0 rotated by pi about the origin.
      const double w = uniform(2.5, 4.0);
      const double h = uniform(2.5, 4.0);
      const double off = uniform(0.3, 0.5 * h - 0.5 * params.door_width - kMargin);
      const double half = 0.5 * params.wall;
      rooms.push_back({-half - w, -half, -0.5 * h + off, 0.5 * h + off});
      rooms.push_back({half, half + w, -0.5 * h - off, 0.5 * h - off});
      doors.push_back({-0.5 * params.door_width, 0.5 * params.door_width});
      break;
    }
  }

  const std::vector<Vec2> outline = detail::chain_outline(rooms, doors);
  Ring ring;
  if (style != SceneStyle::symmetric && params.semantics) {
    ring = detail::decorate(outline, rng, params.door_width);
  } else {
    ring.vertices = outline;
    ring.labels.assign(outline.size(), Semantic::wall);
    // The last outline edge is room 0's outer (left) wall.
    if (style == SceneStyle::symmetric && params.disambiguate) ring.labels.back() = Semantic::door;
  }
  const Vec2 hint(0.5 * (rooms[0].xs + rooms[0].xe), 0.5 * (rooms[0].b + rooms[0].t));
  scene.floormap = FloorMap::from_rings({ring}, hint);

  const Vec2 centroid = scene.floormap.bbox().center();
  while (scene.gt_queries.size() < params.num_queries) {
    const Pose p = sample_free_pose(scene.floormap, rng, params.clearance);
    // Keep symmetric twins apart so that the ambiguity is observable.
    if (style == SceneStyle::symmetric && (p.t - centroid).norm() < 1.0) continue;
    scene.gt_queries.push_back(encode_depth_query(scene.floormap, p, params.V, params.D, params.d_max, params.fov));
  }
  return scene;
}

}  // namespace laser
