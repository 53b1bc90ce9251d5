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
#include <numbers>
#include <optional>
#include <span>
#include <utility>

#include <Eigen/Core>

namespace laser {

using Vec2 = Eigen::Vector2d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Fractional indices closer than this to an integer are treated as integers.
inline constexpr double kIndexSnap = 1e-9;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Maps any angle into [0, 2pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// Absolute angular difference folded into [0, pi].
inline double angle_distance(double a, double b) {
  const double d = std::fabs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

// Splits a non-negative fractional index into (floor, fraction), snapping
// near-integers so that exact lattice positions stay exact.
inline std::pair<long, double> split_index(double x) {
  const double r = std::round(x);
  if (std::fabs(x - r) < kIndexSnap) return {static_cast<long>(r), 0.0};
  const double f = std::floor(x);
  return {static_cast<long>(f), x - f};
}

inline long wrap_index(long i, long n) {
  const long m = i % n;
  return m < 0 ? m + n : m;
}

struct Segment {
  Vec2 a;
  Vec2 b;
};

/// Intersection of segment p0->p1 with segment q0->q1.
///
/// Returns the parameter s in [0, 1] along p0->p1. Collinear (parallel)
/// pairs never intersect; that is the grazing tie-break used everywhere.
inline std::optional<double> intersect_segments(const Vec2& p0, const Vec2& p1, const Vec2& q0,
                                                const Vec2& q1) {
  const Vec2 r = p1 - p0;
  const Vec2 s = q1 - q0;
  const double denom = cross2(r, s);
  if (denom == 0.0) return std::nullopt;
  const Vec2 qp = q0 - p0;
  const double t = cross2(qp, s) / denom;
  const double u = cross2(qp, r) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

// Slack on the edge parameter so a ray through a shared vertex cannot slip
// between both edges after rounding.
inline constexpr double kVertexSlack = 1e-12;

/// Ray (origin + t * dir, t > 0) against a segment. Returns t.
inline std::optional<double> intersect_ray(const Vec2& origin, const Vec2& dir, const Vec2& q0,
                                           const Vec2& q1) {
  const Vec2 s = q1 - q0;
  const double denom = cross2(dir, s);
  if (denom == 0.0) return std::nullopt;
  const Vec2 qp = q0 - origin;
  const double t = cross2(qp, s) / denom;
  const double u = cross2(qp, dir) / denom;
  if (t <= 0.0 || u < -kVertexSlack || u > 1.0 + kVertexSlack) return std::nullopt;
  return t;
}

// Even-odd crossing test against one closed ring.
inline bool point_in_ring(const Vec2& p, std::span<const Vec2> ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

// Twice the signed area; positive for counter-clockwise rings.
inline double signed_area2(std::span<const Vec2> ring) {
  double acc = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) acc += cross2(ring[i], ring[(i + 1) % n]);
  return acc;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Planar pose: position plus heading in [0, 2pi).
struct Pose {
  Vec2 t{0.0, 0.0};
  double theta = 0.0;
};

struct BoundingBox {
  Vec2 min{0.0, 0.0};
  Vec2 max{0.0, 0.0};

  double width() const { return max.x() - min.x(); }
  double height() const { return max.y() - min.y(); }
  Vec2 center() const { return 0.5 * (min + max); }
};

}  // namespace laser
