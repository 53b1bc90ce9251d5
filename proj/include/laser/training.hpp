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
#include <vector>

#include "laser/circular_feature.hpp"
#include "laser/codebook.hpp"
#include "laser/floormap.hpp"
#include "laser/raycast.hpp"
#include "laser/renderer.hpp"

namespace laser {

enum class QuerySource : std::uint8_t { oracle_noisy, depth_encoded };

struct QuerySample {
  Pose gt;
  CircularFeature feature;
  QuerySource source = QuerySource::oracle_noisy;
  double fov = kTwoPi;
};

/// Stand-in for an image encoder: the hypothesis feature at the true pose,
/// plus per-element Gaussian noise, restricted to the camera field of view.
template <typename Rng>
QuerySample encode_oracle_query(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb,
                                const Pose& pose, double noise_sigma, double fov, Rng& rng) {
  CircularFeature f = render_pose(cloud, map, cb, pose.t, pose.theta);
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    Matrix m = f.segments();
    for (Eigen::Index a = 0; a < m.rows(); ++a)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(a, j) += noise(rng);
    f = CircularFeature(std::move(m), f.valid());
  }
  // render_pose already expresses the feature in the camera frame.
  return {pose, mask_fov(f, 0.0, fov), QuerySource::oracle_noisy, fov};
}

/// Deterministic geometric encoding of one camera ray: sinusoidal codes of
/// the clamped depth, sinusoidal codes of the incident angle, a semantic
/// one-hot, zero padding. Blocks are truncated when D is too small.
inline Vector encode_ray(double depth, double psi, Semantic s, std::size_t D, double d_max) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(D));
  const std::size_t block = 3 * ((D + 7) / 8);
  const double x = std::min(depth, d_max) / d_max;
  std::size_t e = 0;
  for (std::size_t i = 0; i < block && e < D; ++i, ++e) {
    const double arg = std::ldexp(1.0, static_cast<int>(i / 2)) * x * std::numbers::pi;
    v(static_cast<Eigen::Index>(e)) = i % 2 == 0 ? std::sin(arg) : std::cos(arg);
  }
  for (std::size_t i = 0; i < block && e < D; ++i, ++e) {
    const double arg = std::ldexp(1.0, static_cast<int>(i / 2)) * psi;
    v(static_cast<Eigen::Index>(e)) = i % 2 == 0 ? std::sin(arg) : std::cos(arg);
  }
  for (std::size_t i = 0; i < kNumSemantics && e < D; ++i, ++e) {
    v(static_cast<Eigen::Index>(e)) = i == static_cast<std::size_t>(s) ? 1.0 : 0.0;
  }
  return v;
}

/// Depth-sensor query encoder: one ray through the middle of every segment
/// in the camera frame. Segments whose ray hits nothing are invalid.
inline QuerySample encode_depth_query(const FloorMap& map, const Pose& pose, std::size_t V, std::size_t D,
                                      double d_max, double fov = kTwoPi) {
  const DepthScan scan = lidar_scan(map, pose.t, V, pose.theta + std::numbers::pi / static_cast<double>(V));
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(V), static_cast<Eigen::Index>(D));
  Mask valid(V, 0);
  for (std::size_t a = 0; a < V; ++a) {
    if (!scan.semantics[a]) continue;
    valid[a] = 1;
    m.row(static_cast<Eigen::Index>(a)) = encode_ray(scan.depths[a], scan.incident_angles[a], *scan.semantics[a], D, d_max);
  }
  return {pose, mask_fov(CircularFeature(std::move(m), std::move(valid)), 0.0, fov), QuerySource::depth_encoded, fov};
}

inline constexpr double kTripletMargin = 0.5;
inline constexpr double kContextMargin = 1.0;

inline double triplet_loss(const CircularFeature& anchor, const CircularFeature& positive,
                           const CircularFeature& negative) {
  return 2.0 * std::max(similarity(anchor, negative) - similarity(anchor, positive) + kTripletMargin, 0.0);
}

inline double context_loss(const CircularFeature& anchor, const CircularFeature& positive,
                           const CircularFeature& negative) {
  const Vector ca = context(anchor);
  return std::max(cosine(ca, context(negative)) - cosine(ca, context(positive)) + kContextMargin, 0.0);
}

namespace detail {

// d cos(u, v) / dv; zero when either vector vanishes.
inline Vector cosine_grad(const Vector& u, const Vector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return Vector::Zero(v.size());
  const double c = u.dot(v) / (nu * nv);
  return u / (nu * nv) - c * v / (nv * nv);
}

// d S(a, x) / dx as a V x D matrix.
inline Matrix similarity_grad(const CircularFeature& a, const CircularFeature& x) {
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(x.V()), static_cast<Eigen::Index>(x.D()));
  std::size_t n = 0;
  for (std::size_t s = 0; s < x.V(); ++s) n += a.valid(s) && x.valid(s) ? 1 : 0;
  if (n == 0) return g;
  const double scale = 1.0 / static_cast<double>(2 * n);
  for (std::size_t s = 0; s < x.V(); ++s) {
    if (!a.valid(s) || !x.valid(s)) continue;
    g.row(static_cast<Eigen::Index>(s)) =
        scale * cosine_grad(a.segment(s).transpose(), x.segment(s).transpose()).transpose();
  }
  return g;
}

// Pulls an upstream gradient on context(x) back onto the segments of x.
inline Matrix context_backprop(const CircularFeature& x, const Vector& upstream) {
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(x.V()), static_cast<Eigen::Index>(x.D()));
  const double n = static_cast<double>(x.valid_count());
  for (std::size_t s = 0; s < x.V(); ++s) {
    if (!x.valid(s)) continue;
    const Vector f = x.segment(s).transpose();
    const double norm = f.norm();
    if (norm == 0.0) continue;
    const Vector d = (upstream / norm - f * (f.dot(upstream) / (norm * norm * norm))) / n;
    g.row(static_cast<Eigen::Index>(s)) = d.transpose();
  }
  return g;
}

}  // namespace detail

struct LossGradient {
  double triplet = 0.0;  // mean over negatives
  double context = 0.0;  // mean over negatives
  double total = 0.0;
  Matrix grad;  // same shape as the stacked codebook
};

/// Mean triplet + mean context loss of one anchor against a shared positive
/// and a set of negatives, with its exact gradient w.r.t. the stacked codes.
/// The hinge kink takes the zero branch.
inline LossGradient loss_and_gradient(const Matrix& stacked, const CircularFeature& anchor,
                                      const RenderWeights& positive, const std::vector<RenderWeights>& negatives,
                                      bool use_context = true) {
  if (negatives.empty()) throw std::invalid_argument("loss_and_gradient: need at least one negative");
  LossGradient out;
  out.grad = Matrix::Zero(stacked.rows(), stacked.cols());
  const double inv_n = 1.0 / static_cast<double>(negatives.size());

  const CircularFeature fp = positive.apply(stacked);
  check_same_shape(anchor, fp);
  const double s_ap = similarity(anchor, fp);
  Matrix dfp = Matrix::Zero(fp.segments().rows(), fp.segments().cols());
  const Matrix ds_ap = detail::similarity_grad(anchor, fp);

  Vector ca, cp;
  double cos_ap = 0.0;
  Vector dcos_ap;
  if (use_context) {
    ca = context(anchor);
    cp = context(fp);
    cos_ap = cosine(ca, cp);
    dcos_ap = detail::cosine_grad(ca, cp);
  }
  Vector dcp = Vector::Zero(static_cast<Eigen::Index>(fp.D()));

  for (const RenderWeights& nw : negatives) {
    const CircularFeature fn = nw.apply(stacked);
    Matrix dfn = Matrix::Zero(fn.segments().rows(), fn.segments().cols());
    const double s_an = similarity(anchor, fn);
    const double hinge = s_an - s_ap + kTripletMargin;
    if (hinge > 0.0) {
      out.triplet += 2.0 * hinge * inv_n;
      dfn += 2.0 * inv_n * detail::similarity_grad(anchor, fn);
      dfp -= 2.0 * inv_n * ds_ap;
    }
    if (use_context) {
      const Vector cn = context(fn);
      const double ch = cosine(ca, cn) - cos_ap + kContextMargin;
      if (ch > 0.0) {
        out.context += ch * inv_n;
        dfn += detail::context_backprop(fn, inv_n * detail::cosine_grad(ca, cn));
        dcp -= inv_n * dcos_ap;
      }
    }
    out.grad.noalias() += nw.weights.transpose() * dfn;
  }
  if (use_context) dfp += detail::context_backprop(fp, dcp);
  out.grad.noalias() += positive.weights.transpose() * dfp;
  out.total = out.triplet + out.context;
  return out;
}

struct TrainConfig {
  std::size_t num_negatives = 100;
  double lr = 0.05;
  std::size_t epochs = 20;
  double noise_sigma = 0.0;  // anchor augmentation
  double fov = kTwoPi;
  bool use_context = true;
  std::uint64_t seed = 0;
};

struct TrainScene {
  FloorMap map;
  PointCloudMap cloud;
  std::vector<Pose> poses;
};

struct EpochLoss {
  std::size_t epoch = 0;
  double mean_triplet = 0.0;
  double mean_context = 0.0;
  double total = 0.0;
};

struct TrainResult {
  CodebookSet codebooks;
  std::vector<EpochLoss> curve;
};

template <typename Rng>
Pose sample_free_pose(const FloorMap& map, Rng& rng, double clearance = 0.0) {
  const BoundingBox& b = map.bbox();
  std::uniform_real_distribution<double> ux(b.min.x(), b.max.x());
  std::uniform_real_distribution<double> uy(b.min.y(), b.max.y());
  std::uniform_real_distribution<double> ut(0.0, kTwoPi);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Vec2 p(ux(rng), uy(rng));
    const double theta = ut(rng);
    if (map.contains(p) && (clearance <= 0.0 || map.clearance(p) >= clearance)) return {p, wrap_angle(theta)};
  }
  throw std::runtime_error("could not sample a free pose");
}

/// Plain SGD over shared per-semantic codebooks with depth-encoded anchors.
/// Each iteration visits one (scene, pose) pair: the positive is rendered at
/// the true pose and reused against every random negative.
inline TrainResult train_codebooks(const std::vector<TrainScene>& dataset, CodebookSet cb, const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train_codebooks: empty dataset");
  if (cfg.num_negatives == 0) throw std::invalid_argument("train_codebooks: num_negatives must be >= 1");
  if (cb.assignment != ClassAssignment::per_semantic) {
    throw std::invalid_argument("train_codebooks: only shared per-semantic codebooks are trainable");
  }
  cb.validate();
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t s = 0; s < dataset.size(); ++s)
    for (std::size_t q = 0; q < dataset[s].poses.size(); ++q) order.emplace_back(s, q);
  if (order.empty()) throw std::invalid_argument("train_codebooks: dataset has no poses");

  std::mt19937_64 rng(cfg.seed);
  Matrix stacked = cb.stacked();
  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLoss acc{epoch, 0.0, 0.0, 0.0};
    for (const auto& [si, qi] : order) {
      const TrainScene& scene = dataset[si];
      const Pose& gt = scene.poses[qi];
      QuerySample q = encode_depth_query(scene.map, gt, cb.V, cb.D, cb.d_max, cfg.fov);
      CircularFeature anchor = q.feature;
      if (cfg.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        Matrix m = anchor.segments();
        for (Eigen::Index a = 0; a < m.rows(); ++a)
          for (Eigen::Index j = 0; j < m.cols(); ++j) m(a, j) += noise(rng);
        anchor = CircularFeature(std::move(m), anchor.valid());
      }
      const RenderWeights pos = render_weights(scene.cloud, scene.map, cb, gt.t, gt.theta);
      std::vector<RenderWeights> negs;
      negs.reserve(cfg.num_negatives);
      while (negs.size() < cfg.num_negatives) {
        const Pose p = sample_free_pose(scene.map, rng);
        RenderWeights w = render_weights(scene.cloud, scene.map, cb, p.t, p.theta, false);
        bool any = false;
        for (unsigned char v : w.valid) any = any || v;
        if (any) negs.push_back(std::move(w));
      }
      const LossGradient lg = loss_and_gradient(stacked, anchor, pos, negs, cfg.use_context);
      if (!std::isfinite(lg.total) || !lg.grad.allFinite()) {
        throw std::runtime_error("train_codebooks: non-finite loss at epoch " + std::to_string(epoch) + ", scene " +
                                 std::to_string(si) + ", pose " + std::to_string(qi));
      }
      stacked -= cfg.lr * lg.grad;
      acc.mean_triplet += lg.triplet;
      acc.mean_context += lg.context;
    }
    const double n = static_cast<double>(order.size());
    acc.mean_triplet /= n;
    acc.mean_context /= n;
    acc.total = acc.mean_triplet + acc.mean_context;
    result.curve.push_back(acc);
  }
  cb.unstack(stacked);
  result.codebooks = std::move(cb);
  return result;
}

}  // namespace laser
