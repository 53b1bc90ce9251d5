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
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "laser/floormap.hpp"
#include "laser/grid.hpp"
#include "laser/localizer.hpp"
#include "laser/raycast.hpp"

namespace laser {

/// Gaussian beam model on depth residuals with a squared-error cutoff.
struct ScanLikelihoodConfig {
  std::size_t num_rays = 72;
  double sigma_d = 0.2;  // meters
  double max_range = 20.0;
  double cutoff_sigmas = 3.0;

  double cutoff() const { return (cutoff_sigmas * sigma_d) * (cutoff_sigmas * sigma_d); }

  void validate() const {
    if (num_rays == 0) throw std::invalid_argument("ScanLikelihoodConfig: num_rays must be >= 1");
    if (!(sigma_d > 0.0)) throw std::invalid_argument("ScanLikelihoodConfig: sigma_d must be positive");
  }
};

inline double clamp_range(double depth, double max_range) {
  return depth > max_range ? std::numeric_limits<double>::infinity() : depth;
}

// Truncated squared residual of one ray pair. Two misses agree; a single
// miss costs the full cutoff.
inline double ray_residual(double query, double simulated, double cutoff) {
  const bool qi = std::isinf(query);
  const bool si = std::isinf(simulated);
  if (qi && si) return 0.0;
  if (qi || si) return cutoff;
  const double d = query - simulated;
  return std::min(d * d, cutoff);
}

/// Likelihood of a camera-frame query scan at `pose`: ray k of the query is
/// compared with a simulated ray at pose.theta + 2*pi*k/R. The query's own
/// origin and heading are ignored.
inline double scan_likelihood(const DepthScan& query, const FloorMap& map, const Pose& pose,
                              const ScanLikelihoodConfig& cfg) {
  cfg.validate();
  if (query.num_rays() == 0) throw std::invalid_argument("scan_likelihood: empty query scan");
  const DepthScan sim = lidar_scan(map, pose.t, query.num_rays(), pose.theta, cfg.max_range);
  const double cutoff = cfg.cutoff();
  double acc = 0.0;
  for (std::size_t k = 0; k < query.num_rays(); ++k) {
    acc += ray_residual(clamp_range(query.depths[k], cfg.max_range), sim.depths[k], cutoff);
  }
  const double mean = acc / static_cast<double>(query.num_rays());
  return std::exp(-mean / (2.0 * cfg.sigma_d * cfg.sigma_d));
}

/// Simulated world-frame scans for every free cell, at an angular
/// resolution fine enough that every (rotation, ray) pair is one of its rays.
class ScanHypothesisGrid {
 public:
  static ScanHypothesisGrid build(const FloorMap& map, double cell, std::size_t num_rays, std::size_t num_angles,
                                  double max_range, std::size_t threads = 1) {
    if (num_rays == 0 || num_angles == 0) throw std::invalid_argument("scan grid: rays and angles must be >= 1");
    ScanHypothesisGrid g;
    g.spec_ = GridSpec::covering(map.bbox(), cell);
    g.rays_ = num_rays;
    g.angles_ = num_angles;
    g.fine_ = std::lcm(num_rays, num_angles);
    g.free_ = Grid2D<unsigned char>(g.spec_.nx, g.spec_.ny, 0);
    g.depths_.resize(g.spec_.cells());
    parallel_for(g.spec_.cells(), threads, [&](std::size_t k) {
      const Vec2 c = g.spec_.center(k / g.spec_.ny, k % g.spec_.ny);
      if (!map.contains(c)) return;
      g.free_.at_flat(k) = 1;
      g.depths_[k] = lidar_scan(map, c, g.fine_, 0.0, max_range, false).depths;
    });
    return g;
  }

  const GridSpec& spec() const { return spec_; }

  PosteriorGrid score(const DepthScan& query, const ScanLikelihoodConfig& cfg, std::size_t threads = 1) const {
    cfg.validate();
    if (query.num_rays() != rays_) throw std::invalid_argument("scan grid: query ray count mismatch");
    PosteriorGrid out;
    out.spec = spec_;
    out.scores = Grid2D<double>(spec_.nx, spec_.ny, 0.0);
    out.best_theta = Grid2D<double>(spec_.nx, spec_.ny, 0.0);
    out.free_mask = free_;
    const double cutoff = cfg.cutoff();
    const std::size_t ray_stride = fine_ / rays_;
    const std::size_t angle_stride = fine_ / angles_;
    std::vector<double> q(rays_);
    for (std::size_t j = 0; j < rays_; ++j) q[j] = clamp_range(query.depths[j], cfg.max_range);
    parallel_for(spec_.cells(), threads, [&](std::size_t k) {
      if (!free_.at_flat(k)) return;
      const std::vector<double>& world = depths_[k];
      double best = -1.0;
      double best_theta = 0.0;
      for (std::size_t a = 0; a < angles_; ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j < rays_; ++j) {
          acc += ray_residual(q[j], world[(j * ray_stride + a * angle_stride) % fine_], cutoff);
        }
        const double s = std::exp(-(acc / static_cast<double>(rays_)) / (2.0 * cfg.sigma_d * cfg.sigma_d));
        if (s > best) {
          best = s;
          best_theta = sampled_angle(a, angles_);
        }
      }
      out.scores.at_flat(k) = best;
      out.best_theta.at_flat(k) = best_theta;
    });
    out.finalize();
    return out;
  }

 private:
  GridSpec spec_;
  std::size_t rays_ = 0;
  std::size_t angles_ = 0;
  std::size_t fine_ = 0;
  Grid2D<unsigned char> free_;
  std::vector<std::vector<double>> depths_;
};

struct MclOptions {
  double cell = 0.1;
  std::size_t num_angles = 16;
  double threshold = 0.0;
  std::size_t topk = 3;
  std::size_t threads = 1;
};

/// Dense grid x rotation evaluation of the beam model, followed by the same
/// peak extraction as the latent localizer. No refinement.
inline LocalizeResult mcl_localize(const DepthScan& query, const FloorMap& map, const ScanLikelihoodConfig& cfg,
                                   const MclOptions& opt, const ScanHypothesisGrid* hypotheses = nullptr) {
  std::optional<ScanHypothesisGrid> owned;
  if (!hypotheses) {
    owned = ScanHypothesisGrid::build(map, opt.cell, query.num_rays(), opt.num_angles, cfg.max_range, opt.threads);
    hypotheses = &*owned;
  }
  LocalizeResult out;
  out.grid = hypotheses->score(query, cfg, opt.threads);
  out.hypotheses = extract_peaks(out.grid, opt.threshold);
  if (out.hypotheses.size() > opt.topk) out.hypotheses.resize(opt.topk);
  return out;
}

}  // namespace laser
