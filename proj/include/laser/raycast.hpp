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

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "laser/floormap.hpp"
#include "laser/geometry.hpp"

namespace laser {

// Occluders closer than this to the target point are the point's own wall.
inline constexpr double kSelfOcclusionEps = 1e-6;

struct VisibilityResult {
  std::vector<std::size_t> visible_indices;  // sorted ascending
};

class OutsideFreeSpace : public std::invalid_argument {
 public:
  explicit OutsideFreeSpace(const Vec2& p)
      : std::invalid_argument("location (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                              ") is outside free space") {}
};

namespace detail {

// Edges bucketed by the angular interval they subtend as seen from one
// origin. A point only needs testing against the edges of its own bucket.
class AngularEdgeBuckets {
 public:
  AngularEdgeBuckets(const std::vector<Edge>& edges, const Vec2& origin, std::size_t bins)
      : bins_(bins), offsets_(bins + 1, 0) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // (first bin, bin count)
    spans.reserve(edges.size());
    for (const Edge& e : edges) {
      const Vec2 da = e.a - origin;
      const Vec2 db = e.b - origin;
      const double c = cross2(da, db);
      if (c == 0.0) {
        spans.emplace_back(0, 0);  // seen edge-on: parallel to every ray that could touch it
        continue;
      }
      double start = wrap_angle(std::atan2(da.y(), da.x()));
      double end = wrap_angle(std::atan2(db.y(), db.x()));
      if (c < 0.0) std::swap(start, end);
      const long b0 = bin_of(start) - 1;
      long b1 = bin_of(end) + 1;
      if (end < start) b1 += static_cast<long>(bins_);
      const std::size_t count = std::min<std::size_t>(bins_, static_cast<std::size_t>(b1 - b0 + 1));
      spans.emplace_back(static_cast<std::size_t>(wrap_index(b0, static_cast<long>(bins_))), count);
    }
    for (const auto& [first, count] : spans) {
      for (std::size_t k = 0; k < count; ++k) ++offsets_[(first + k) % bins_ + 1];
    }
    for (std::size_t b = 0; b < bins_; ++b) offsets_[b + 1] += offsets_[b];
    members_.resize(offsets_.back());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t e = 0; e < spans.size(); ++e) {
      const auto [first, count] = spans[e];
      for (std::size_t k = 0; k < count; ++k) members_[cursor[(first + k) % bins_]++] = e;
    }
  }

  long bin_of(double angle) const {
    return std::min(static_cast<long>(bins_) - 1, static_cast<long>(angle / kTwoPi * static_cast<double>(bins_)));
  }

  std::span<const std::size_t> bucket(long b) const {
    return {members_.data() + offsets_[b], offsets_[b + 1] - offsets_[b]};
  }

 private:
  std::size_t bins_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> members_;
};

}  // namespace detail

/// Indices of map points with an unobstructed, front-facing line of sight to
/// `origin`. Set `check_free` to false when the caller already knows the
/// origin is in free space.
inline VisibilityResult visible_points(const PointCloudMap& cloud, const FloorMap& map, const Vec2& origin,
                                       bool check_free = true) {
  if (check_free && !map.contains(origin)) throw OutsideFreeSpace(origin);
  const auto& edges = map.edges();
  const std::size_t bins = std::max<std::size_t>(32, std::min<std::size_t>(512, 2 * edges.size()));
  const detail::AngularEdgeBuckets buckets(edges, origin, bins);

  VisibilityResult out;
  out.visible_indices.reserve(cloud.points.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const MapPoint& p = cloud.points[i];
    const Vec2 ray = p.t - origin;
    if (ray.dot(p.n) >= 0.0) continue;
    const double len = ray.norm();
    const long b = buckets.bin_of(wrap_angle(std::atan2(ray.y(), ray.x())));
    bool blocked = false;
    for (std::size_t e : buckets.bucket(b)) {
      const auto s = intersect_segments(origin, p.t, edges[e].a, edges[e].b);
      if (s && (1.0 - *s) * len > kSelfOcclusionEps) {
        blocked = true;
        break;
      }
    }
    if (!blocked) out.visible_indices.push_back(i);
  }
  return out;
}

struct DepthScan {
  Vec2 origin{0.0, 0.0};
  double heading = 0.0;  // ray k points at heading + 2*pi*k/R
  std::vector<double> depths;
  std::vector<std::optional<Semantic>> semantics;
  std::vector<double> incident_angles;

  std::size_t num_rays() const { return depths.size(); }
  double ray_angle(std::size_t k) const {
    return heading + kTwoPi * static_cast<double>(k) / static_cast<double>(depths.size());
  }
};

/// Incident angle of a viewing ray `d` on a surface with normal `n`, using
/// the signed cross product so the result spans [0, 2pi).
inline double incident_angle(const Vec2& d, const Vec2& n) {
  return wrap_angle(std::atan2(cross2(d, n), d.dot(n)));
}

struct RayHit {
  double depth = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> edge;
};

// Nearest edge hit along a direction; ties keep the lower edge index.
inline RayHit cast_ray(const FloorMap& map, const Vec2& origin, const Vec2& dir) {
  RayHit hit;
  const auto& edges = map.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto t = intersect_ray(origin, dir, edges[e].a, edges[e].b);
    if (t && *t < hit.depth) {
      hit.depth = *t;
      hit.edge = e;
    }
  }
  return hit;
}

/// Simulated noiseless 2D LiDAR. Hits beyond `max_range` read as no-hit.
inline DepthScan lidar_scan(const FloorMap& map, const Vec2& origin, std::size_t num_rays, double heading = 0.0,
                            double max_range = std::numeric_limits<double>::infinity(), bool check_free = true) {
  if (num_rays == 0) throw std::invalid_argument("lidar_scan: num_rays must be >= 1");
  if (check_free && !map.contains(origin)) throw OutsideFreeSpace(origin);
  DepthScan scan;
  scan.origin = origin;
  scan.heading = heading;
  scan.depths.assign(num_rays, std::numeric_limits<double>::infinity());
  scan.semantics.assign(num_rays, std::nullopt);
  scan.incident_angles.assign(num_rays, 0.0);
  for (std::size_t k = 0; k < num_rays; ++k) {
    const double a = scan.ray_angle(k);
    const Vec2 dir(std::cos(a), std::sin(a));
    const RayHit hit = cast_ray(map, origin, dir);
    if (!hit.edge || hit.depth > max_range) continue;
    const Edge& e = map.edges()[*hit.edge];
    scan.depths[k] = hit.depth;
    scan.semantics[k] = e.label;
    scan.incident_angles[k] = incident_angle(dir * hit.depth, e.normal);
  }
  return scan;
}

}  // namespace laser
