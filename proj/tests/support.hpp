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
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "laser/laser.hpp"

namespace laser::fixture {

inline FloorMap square_map(double side = 1.0, Vec2 lo = Vec2(0.0, 0.0)) {
  Ring r;
  r.vertices = {lo, lo + Vec2(side, 0), lo + Vec2(side, side), lo + Vec2(0, side)};
  r.labels.assign(4, Semantic::wall);
  return FloorMap::from_rings({r});
}

inline FloorMap rect_map(double w, double h) {
  Ring r;
  r.vertices = {Vec2(0, 0), Vec2(w, 0), Vec2(w, h), Vec2(0, h)};
  r.labels.assign(4, Semantic::wall);
  return FloorMap::from_rings({r});
}

inline FloorMap l_shaped_map() {
  Ring r;
  r.vertices = {Vec2(0, 0), Vec2(4, 0), Vec2(4, 1.5), Vec2(1.5, 1.5), Vec2(1.5, 4), Vec2(0, 4)};
  r.labels.assign(6, Semantic::wall);
  return FloorMap::from_rings({r});
}

// Two rooms separated by a full wall: outer 0..5 x 0..3 with a hole-free
// partition implemented as two disjoint rings.
inline FloorMap two_rooms_map() {
  Ring a;
  a.vertices = {Vec2(0, 0), Vec2(2, 0), Vec2(2, 3), Vec2(0, 3)};
  a.labels.assign(4, Semantic::wall);
  Ring b;
  b.vertices = {Vec2(2.2, 0), Vec2(5, 0), Vec2(5, 3), Vec2(2.2, 3)};
  b.labels.assign(4, Semantic::wall);
  return FloorMap::from_rings({a, b});
}

inline SceneParams no_query_params() {
  SceneParams p;
  p.num_queries = 0;
  return p;
}

inline SyntheticScene random_scene(std::uint64_t seed, SceneStyle style = SceneStyle::multi_room) {
  return generate_scene(style, no_query_params(), seed);
}

// Cramer's rule on origin + s (p - origin) = a + u (b - a).
inline bool brute_blocked(const Vec2& origin, const Vec2& p, const Edge& e) {
  Eigen::Matrix2d A;
  A.col(0) = p - origin;
  A.col(1) = e.a - e.b;
  const double det = A.determinant();
  if (det == 0.0) return false;
  const Eigen::Vector2d rhs = e.a - origin;
  Eigen::Matrix2d As = A;
  As.col(0) = rhs;
  Eigen::Matrix2d Au = A;
  Au.col(1) = rhs;
  const double s = As.determinant() / det;
  const double u = Au.determinant() / det;
  if (s < 0.0 || s > 1.0 || u < 0.0 || u > 1.0) return false;
  return (1.0 - s) * (p - origin).norm() > 1e-6;
}

inline std::vector<std::size_t> brute_visible(const PointCloudMap& cloud, const FloorMap& map, const Vec2& origin) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const MapPoint& p = cloud.points[i];
    if ((p.t - origin).dot(p.n) >= 0.0) continue;
    bool blocked = false;
    for (const Edge& e : map.edges()) blocked = blocked || brute_blocked(origin, p.t, e);
    if (!blocked) out.push_back(i);
  }
  return out;
}

inline double brute_depth(const FloorMap& map, const Vec2& origin, double angle) {
  const Vec2 dir(std::cos(angle), std::sin(angle));
  double best = std::numeric_limits<double>::infinity();
  for (const Edge& e : map.edges()) {
    Eigen::Matrix2d A;
    A.col(0) = dir;
    A.col(1) = e.a - e.b;
    const double det = A.determinant();
    if (det == 0.0) continue;
    Eigen::Matrix2d At = A;
    At.col(0) = e.a - origin;
    Eigen::Matrix2d Au = A;
    Au.col(1) = e.a - origin;
    const double t = At.determinant() / det;
    const double u = Au.determinant() / det;
    if (t > 0.0 && u >= 0.0 && u <= 1.0) best = std::min(best, t);
  }
  return best;
}

template <typename Rng>
CircularFeature random_feature(Rng& rng, std::size_t V, std::size_t D, double p_invalid = 0.0) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Matrix m(V, D);
  Mask valid(V, 1);
  for (std::size_t a = 0; a < V; ++a) {
    for (std::size_t j = 0; j < D; ++j) m(a, j) = n01(rng);
    if (u01(rng) < p_invalid) valid[a] = 0;
  }
  if (std::find(valid.begin(), valid.end(), 1) == valid.end()) valid[0] = 1;
  return {std::move(m), std::move(valid)};
}

inline std::vector<PoseHypothesis> brute_nms(const PosteriorGrid& g, double threshold) {
  std::vector<PoseHypothesis> out;
  for (std::size_t i = 0; i < g.spec.nx; ++i) {
    for (std::size_t j = 0; j < g.spec.ny; ++j) {
      if (!g.free_mask(i, j) || g.scores(i, j) < threshold) continue;
      bool peak = true;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const long ni = static_cast<long>(i) + di;
          const long nj = static_cast<long>(j) + dj;
          if (ni < 0 || nj < 0 || ni >= static_cast<long>(g.spec.nx) || nj >= static_cast<long>(g.spec.ny)) continue;
          if (!g.free_mask(ni, nj)) continue;
          if (!(g.scores(i, j) > g.scores(ni, nj))) peak = false;
        }
      }
      if (peak) out.push_back({g.spec.center(i, j), g.best_theta(i, j), g.scores(i, j), 0.0});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

// Central differences of the total loss against the analytic gradient.
// Relative error per entry, floored at 1e-6 in the denominator.
struct GradCheck {
  double max_rel_err = 0.0;
  double max_abs_grad = 0.0;
};

inline GradCheck finite_difference_check(const Matrix& stacked, const CircularFeature& anchor,
                                         const RenderWeights& pos, const std::vector<RenderWeights>& negs,
                                         bool use_context, double eps = 1e-5) {
  const Matrix g = loss_and_gradient(stacked, anchor, pos, negs, use_context).grad;
  GradCheck out;
  Matrix p = stacked;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double keep = p(r, c);
      p(r, c) = keep + eps;
      const double up = loss_and_gradient(p, anchor, pos, negs, use_context).total;
      p(r, c) = keep - eps;
      const double down = loss_and_gradient(p, anchor, pos, negs, use_context).total;
      p(r, c) = keep;
      const double fd = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(fd), std::abs(g(r, c)), 1e-6});
      out.max_rel_err = std::max(out.max_rel_err, std::abs(fd - g(r, c)) / denom);
      out.max_abs_grad = std::max(out.max_abs_grad, std::abs(g(r, c)));
    }
  }
  return out;
}

// Three wall points inside a 4 m square, one per side.
inline PointCloudMap three_point_cloud(const FloorMap& square4) {
  PointCloudMap c;
  c.interval = 1.0;
  c.bbox = square4.bbox();
  c.points = {{Vec2(1.3, 0.0), Vec2(0, 1), Semantic::wall, 0},
              {Vec2(4.0, 2.6), Vec2(-1, 0), Semantic::door, 1},
              {Vec2(0.0, 3.1), Vec2(1, 0), Semantic::window, 3}};
  return c;
}

}  // namespace laser::fixture
