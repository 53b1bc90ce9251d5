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
#include <stdexcept>
#include <string>
#include <vector>

#include "laser/circular_feature.hpp"
#include "laser/codebook.hpp"
#include "laser/floormap.hpp"
#include "laser/raycast.hpp"

namespace laser {

struct RayDynamics {
  double d = 0.0;      // ray length
  double psi = 0.0;    // incident angle, [0, 2pi)
  double omega = 0.0;  // viewing-ray direction, [0, 2pi)
};

inline RayDynamics ray_dynamics(const Vec2& origin, const MapPoint& point) {
  const Vec2 ray = point.t - origin;
  const double d = ray.norm();
  if (d == 0.0) throw std::invalid_argument("ray_dynamics: origin coincides with map point");
  return {d, incident_angle(ray, point.n), wrap_angle(std::atan2(ray.y(), ray.x()))};
}

/// Two-tap interpolation into both banks of one class.
struct CodeTaps {
  std::size_t angle0 = 0, angle1 = 0;
  double angle_w0 = 1.0, angle_w1 = 0.0;
  std::size_t dist0 = 0, dist1 = 0;
  double dist_w0 = 1.0, dist_w1 = 0.0;
};

// Angle index wraps around the bank; distance index saturates at H - 1.
inline CodeTaps code_taps(const CodebookSet& cb, const RayDynamics& dyn) {
  CodeTaps t;
  const long G = static_cast<long>(cb.G);
  const auto [ka, fa] = split_index(static_cast<double>(G) * wrap_angle(dyn.psi) / kTwoPi);
  t.angle0 = static_cast<std::size_t>(wrap_index(ka, G));
  t.angle1 = static_cast<std::size_t>(wrap_index(ka + 1, G));
  t.angle_w0 = 1.0 - fa;
  t.angle_w1 = fa;

  const double last = static_cast<double>(cb.H - 1);
  const double b = std::min(static_cast<double>(cb.H) * dyn.d / cb.d_max, last);
  const auto [kd, fd] = split_index(b);
  if (static_cast<double>(kd) >= last) {
    t.dist0 = t.dist1 = cb.H - 1;
    t.dist_w0 = 1.0;
    t.dist_w1 = 0.0;
  } else {
    t.dist0 = static_cast<std::size_t>(kd);
    t.dist1 = static_cast<std::size_t>(kd + 1);
    t.dist_w0 = 1.0 - fd;
    t.dist_w1 = fd;
  }
  return t;
}

inline void check_class(const CodebookSet& cb, std::size_t c) {
  if (c >= cb.num_classes()) {
    throw std::out_of_range("unknown codebook class " + std::to_string(c) + " (have " +
                            std::to_string(cb.num_classes()) + ")");
  }
}

/// View-dependent feature of one map point: interpolated angle code plus
/// interpolated distance code.
inline Vector lookup_feature(const CodebookSet& cb, std::size_t point_class, const RayDynamics& dyn) {
  check_class(cb, point_class);
  const CodeTaps t = code_taps(cb, dyn);
  const Matrix& g = cb.angle_codes[point_class];
  const Matrix& h = cb.dist_codes[point_class];
  Vector f = t.angle_w0 * g.row(static_cast<Eigen::Index>(t.angle0)).transpose();
  if (t.angle_w1 != 0.0) f += t.angle_w1 * g.row(static_cast<Eigen::Index>(t.angle1)).transpose();
  f += t.dist_w0 * h.row(static_cast<Eigen::Index>(t.dist0)).transpose();
  if (t.dist_w1 != 0.0) f += t.dist_w1 * h.row(static_cast<Eigen::Index>(t.dist1)).transpose();
  return f;
}

inline std::size_t segment_of(double omega, std::size_t V) {
  const auto s = static_cast<std::size_t>(static_cast<double>(V) * omega / kTwoPi);
  return std::min(s, V - 1);
}

/// Latent rendering at `location` in the canonical orientation: every
/// visible map point's looked-up feature is averaged into the segment its
/// viewing ray falls in. Segments that receive no point are invalid.
inline CircularFeature render(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb,
                              const Vec2& location, bool check_free = true) {
  const VisibilityResult vis = visible_points(cloud, map, location, check_free);
  Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(cb.V), static_cast<Eigen::Index>(cb.D));
  std::vector<std::size_t> count(cb.V, 0);
  for (std::size_t i : vis.visible_indices) {
    const MapPoint& p = cloud.points[i];
    const std::size_t c = cb.class_of(i, p);
    check_class(cb, c);
    const RayDynamics dyn = ray_dynamics(location, p);
    const CodeTaps t = code_taps(cb, dyn);
    const auto seg = static_cast<Eigen::Index>(segment_of(dyn.omega, cb.V));
    auto row = acc.row(seg);
    const Matrix& g = cb.angle_codes[c];
    const Matrix& h = cb.dist_codes[c];
    row += t.angle_w0 * g.row(static_cast<Eigen::Index>(t.angle0));
    if (t.angle_w1 != 0.0) row += t.angle_w1 * g.row(static_cast<Eigen::Index>(t.angle1));
    row += t.dist_w0 * h.row(static_cast<Eigen::Index>(t.dist0));
    if (t.dist_w1 != 0.0) row += t.dist_w1 * h.row(static_cast<Eigen::Index>(t.dist1));
    ++count[static_cast<std::size_t>(seg)];
  }
  Mask valid(cb.V, 0);
  for (std::size_t a = 0; a < cb.V; ++a) {
    if (count[a] == 0) continue;
    valid[a] = 1;
    acc.row(static_cast<Eigen::Index>(a)) /= static_cast<double>(count[a]);
  }
  return {std::move(acc), std::move(valid)};
}

/// Hypothesis feature for pose (location, theta).
inline CircularFeature render_pose(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb,
                                   const Vec2& location, double theta, bool check_free = true) {
  return rotate(render(cloud, map, cb, location, check_free), theta);
}

/// Rendering expressed as a linear map from the stacked codebook (see
/// CodebookSet::stacked) to the feature: feature = weights * stacked.
/// Only meaningful for shared (per-semantic) codebooks.
struct RenderWeights {
  Matrix weights;  // V x num_rows
  Mask valid;

  CircularFeature apply(const Matrix& stacked_codes) const { return {weights * stacked_codes, valid}; }
};

inline RenderWeights render_weights(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb,
                                    const Vec2& location, double theta = 0.0, bool check_free = true) {
  const VisibilityResult vis = visible_points(cloud, map, location, check_free);
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(cb.V), static_cast<Eigen::Index>(cb.num_rows()));
  std::vector<std::size_t> count(cb.V, 0);
  for (std::size_t i : vis.visible_indices) {
    const MapPoint& p = cloud.points[i];
    const std::size_t c = cb.class_of(i, p);
    check_class(cb, c);
    const RayDynamics dyn = ray_dynamics(location, p);
    const CodeTaps t = code_taps(cb, dyn);
    const auto seg = static_cast<Eigen::Index>(segment_of(dyn.omega, cb.V));
    w(seg, static_cast<Eigen::Index>(cb.angle_row(c, t.angle0))) += t.angle_w0;
    w(seg, static_cast<Eigen::Index>(cb.angle_row(c, t.angle1))) += t.angle_w1;
    w(seg, static_cast<Eigen::Index>(cb.dist_row(c, t.dist0))) += t.dist_w0;
    w(seg, static_cast<Eigen::Index>(cb.dist_row(c, t.dist1))) += t.dist_w1;
    ++count[static_cast<std::size_t>(seg)];
  }
  Mask valid(cb.V, 0);
  for (std::size_t a = 0; a < cb.V; ++a) {
    if (count[a] == 0) continue;
    valid[a] = 1;
    w.row(static_cast<Eigen::Index>(a)) /= static_cast<double>(count[a]);
  }
  // Rotation is linear in the segments, so it applies to the weight rows.
  CircularFeature rotated = rotate(CircularFeature(std::move(w), std::move(valid)), theta);
  return {rotated.segments(), rotated.valid()};
}

}  // namespace laser
