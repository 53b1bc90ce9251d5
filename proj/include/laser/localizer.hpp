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
#include <optional>
#include <stdexcept>
#include <vector>

#include "laser/circular_feature.hpp"
#include "laser/codebook.hpp"
#include "laser/floormap.hpp"
#include "laser/grid.hpp"
#include "laser/renderer.hpp"

namespace laser {

struct PoseHypothesis {
  Vec2 t{0.0, 0.0};
  double theta = 0.0;
  double score = 0.0;
  double likelihood = 0.0;
};

struct RotationMatch {
  double theta = 0.0;
  double score = 0.0;
};

inline double sampled_angle(std::size_t k, std::size_t num_angles) {
  return kTwoPi * static_cast<double>(k) / static_cast<double>(num_angles);
}

/// Exhaustive rotation search over num_angles uniformly spaced angles. Ties
/// keep the smallest angle index.
inline RotationMatch best_rotation(const CircularFeature& query, const CircularFeature& hyp, std::size_t num_angles) {
  check_same_shape(query, hyp);
  if (num_angles == 0) throw std::invalid_argument("best_rotation: num_angles must be >= 1");
  RotationMatch best{0.0, -1.0};
  for (std::size_t k = 0; k < num_angles; ++k) {
    const double theta = sampled_angle(k, num_angles);
    const double s = similarity(query, rotate(hyp, theta));
    if (s > best.score) best = {theta, s};
  }
  return best;
}

/// Segments scaled to unit norm (zero rows stay zero), for scoring many
/// integer rotations with one matrix product.
struct UnitFeature {
  Matrix unit;
  Mask valid;

  explicit UnitFeature(const CircularFeature& f) : unit(f.segments()), valid(f.valid()) {
    for (Eigen::Index a = 0; a < unit.rows(); ++a) {
      const double n = unit.row(a).norm();
      if (n > 0.0) unit.row(a) /= n;
    }
  }
};

// Fast path of best_rotation for num_angles dividing V: every candidate is an
// integer segment shift, so all cosines come from one V x V product.
inline RotationMatch best_rotation_shifts(const UnitFeature& query, const UnitFeature& hyp, std::size_t num_angles) {
  const std::size_t V = query.valid.size();
  const std::size_t step = V / num_angles;
  const Matrix cos = query.unit * hyp.unit.transpose();
  RotationMatch best{0.0, -1.0};
  for (std::size_t k = 0; k < num_angles; ++k) {
    const std::size_t shift = k * step;
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t a = 0; a < V; ++a) {
      const std::size_t b = (a + shift) % V;
      if (!query.valid[a] || !hyp.valid[b]) continue;
      acc += cos(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      ++n;
    }
    if (n == 0) continue;
    const double s = acc / static_cast<double>(2 * n) + 0.5;
    if (s > best.score) best = {sampled_angle(k, num_angles), s};
  }
  if (best.score < 0.0) best.score = 0.0;  // no overlap at any angle: no evidence
  return best;
}

/// Grid of similarity scores with the best rotation per cell. Cells whose
/// center is outside free space score 0 and carry no posterior mass.
struct PosteriorGrid {
  GridSpec spec;
  Grid2D<double> scores;
  Grid2D<double> best_theta;
  Grid2D<unsigned char> free_mask;
  double score_sum = 0.0;  // over free cells

  double likelihood(std::size_t i, std::size_t j) const {
    if (!free_mask(i, j)) return 0.0;
    if (score_sum <= 0.0) return 1.0 / static_cast<double>(free_cells());
    return scores(i, j) / score_sum;
  }

  double likelihood_of(double score) const {
    return score_sum > 0.0 ? score / score_sum : 0.0;
  }

  std::size_t free_cells() const {
    std::size_t n = 0;
    for (unsigned char f : free_mask.data()) n += f ? 1 : 0;
    return n;
  }

  void finalize() {
    score_sum = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      if (free_mask.at_flat(k)) score_sum += scores.at_flat(k);
    }
  }
};

/// Canonical-orientation hypothesis features for every free cell of a map.
/// Independent of the query, so one grid serves any number of queries.
class HypothesisGrid {
 public:
  static HypothesisGrid build(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb, double cell,
                              std::size_t threads = 1) {
    HypothesisGrid g;
    g.spec_ = GridSpec::covering(map.bbox(), cell);
    g.free_ = Grid2D<unsigned char>(g.spec_.nx, g.spec_.ny, 0);
    g.features_.resize(g.spec_.cells());
    g.units_.resize(g.spec_.cells());
    parallel_for(g.spec_.cells(), threads, [&](std::size_t k) {
      const std::size_t i = k / g.spec_.ny;
      const std::size_t j = k % g.spec_.ny;
      const Vec2 c = g.spec_.center(i, j);
      if (!map.contains(c)) return;
      CircularFeature f = render(cloud, map, cb, c, false);
      if (f.valid_count() == 0) return;
      g.free_.at_flat(k) = 1;
      g.units_[k].emplace(f);
      g.features_[k] = std::move(f);
    });
    std::size_t free = 0;
    for (unsigned char f : g.free_.data()) free += f;
    if (free == 0) throw std::invalid_argument("score grid: no free cells");
    return g;
  }

  const GridSpec& spec() const { return spec_; }
  const Grid2D<unsigned char>& free_mask() const { return free_; }
  const std::optional<CircularFeature>& feature(std::size_t i, std::size_t j) const {
    return features_[i * spec_.ny + j];
  }

  /// Best-rotation similarity of `query` at every free cell.
  PosteriorGrid score(const CircularFeature& query, std::size_t num_angles, std::size_t threads = 1) const {
    if (num_angles == 0) throw std::invalid_argument("score_grid: num_angles must be >= 1");
    PosteriorGrid out;
    out.spec = spec_;
    out.scores = Grid2D<double>(spec_.nx, spec_.ny, 0.0);
    out.best_theta = Grid2D<double>(spec_.nx, spec_.ny, 0.0);
    out.free_mask = free_;
    const bool shifts = query.V() % num_angles == 0;
    for (const auto& f : features_) {
      if (f) {
        check_same_shape(query, *f);
        break;
      }
    }
    const UnitFeature uq(query);
    parallel_for(spec_.cells(), threads, [&](std::size_t k) {
      if (!free_.at_flat(k)) return;
      const RotationMatch m = shifts ? best_rotation_shifts(uq, *units_[k], num_angles)
                                     : best_rotation(query, *features_[k], num_angles);
      out.scores.at_flat(k) = m.score;
      out.best_theta.at_flat(k) = m.theta;
    });
    out.finalize();
    return out;
  }

 private:
  GridSpec spec_;
  Grid2D<unsigned char> free_;
  std::vector<std::optional<CircularFeature>> features_;
  std::vector<std::optional<UnitFeature>> units_;
};

inline PosteriorGrid score_grid(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb,
                                const CircularFeature& query, double cell, std::size_t num_angles,
                                std::size_t threads = 1) {
  return HypothesisGrid::build(cloud, map, cb, cell, threads).score(query, num_angles, threads);
}

/// Cells that strictly dominate every free neighbour of their 3x3 window and
/// reach `threshold`, best first.
inline std::vector<PoseHypothesis> extract_peaks(const PosteriorGrid& grid, double threshold) {
  std::vector<PoseHypothesis> peaks;
  const auto nx = static_cast<long>(grid.spec.nx);
  const auto ny = static_cast<long>(grid.spec.ny);
  for (long i = 0; i < nx; ++i) {
    for (long j = 0; j < ny; ++j) {
      if (!grid.free_mask(i, j)) continue;
      const double s = grid.scores(i, j);
      if (s < threshold) continue;
      bool is_max = true;
      for (long di = -1; di <= 1 && is_max; ++di) {
        for (long dj = -1; dj <= 1; ++dj) {
          if ((di == 0 && dj == 0) || !grid.scores.in_bounds(i + di, j + dj)) continue;
          if (!grid.free_mask(i + di, j + dj)) continue;
          if (grid.scores(i + di, j + dj) >= s) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      peaks.push_back({grid.spec.center(i, j), grid.best_theta(i, j), s, grid.likelihood(i, j)});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const PoseHypothesis& a, const PoseHypothesis& b) { return a.score > b.score; });
  return peaks;
}

struct RefineConfig {
  double step_t = 0.05;                              // initial translation step, meters
  double step_theta = kTwoPi / 32.0;                 // initial rotation step, radians
  double min_step_t = 0.01;
  double min_step_theta = 0.5 * std::numbers::pi / 180.0;
  std::size_t max_iters = 60;

  /// Half a grid cell and half a rotation sample: the quantization error.
  static RefineConfig for_grid(double cell, std::size_t num_angles) {
    RefineConfig c;
    c.step_t = 0.5 * cell;
    c.step_theta = 0.5 * kTwoPi / static_cast<double>(num_angles);
    return c;
  }
};

struct RefineTrace {
  std::vector<double> accepted_scores;  // score after each accepted step
  std::size_t iterations = 0;
};

/// Pattern search over (x, y, theta) driven by rendered similarity. The first
/// step is always taken, which moves the estimate off the sampling lattice;
/// after that a step is kept only if it improves the score, otherwise the
/// step sizes halve.
inline PoseHypothesis refine(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb,
                             const CircularFeature& query, const PoseHypothesis& init, const RefineConfig& cfg,
                             RefineTrace* trace = nullptr) {
  if (!map.contains(init.t)) throw OutsideFreeSpace(init.t);
  PoseHypothesis cur = init;
  CircularFeature cur_canonical = render(cloud, map, cb, cur.t, false);
  cur.score = similarity(query, rotate(cur_canonical, cur.theta));
  PoseHypothesis best = cur;

  double step_t = cfg.step_t;
  double step_theta = cfg.step_theta;
  bool first = true;
  std::size_t iters = 0;
  while (iters < cfg.max_iters && (step_t >= cfg.min_step_t || step_theta >= cfg.min_step_theta)) {
    ++iters;
    std::optional<PoseHypothesis> prop;
    std::optional<CircularFeature> prop_canonical;
    auto consider = [&](const PoseHypothesis& p, const CircularFeature* canonical) {
      std::optional<CircularFeature> rendered;
      if (!canonical) {
        if (!map.contains(p.t)) return;
        rendered = render(cloud, map, cb, p.t, false);
        if (rendered->valid_count() == 0) return;
        canonical = &*rendered;
      }
      const CircularFeature hyp = rotate(*canonical, p.theta);
      double s;
      try {
        s = similarity(query, hyp);
      } catch (const std::invalid_argument&) {
        return;
      }
      if (!prop || s > prop->score) {
        prop = p;
        prop->score = s;
        prop_canonical = rendered ? std::move(*rendered) : *canonical;
      }
    };
    const Vec2 dx(step_t, 0.0);
    const Vec2 dy(0.0, step_t);
    for (const Vec2& d : {Vec2(dx), Vec2(-dx), Vec2(dy), Vec2(-dy)}) consider({cur.t + d, cur.theta, 0, 0}, nullptr);
    consider({cur.t, wrap_angle(cur.theta + step_theta), 0, 0}, &cur_canonical);
    consider({cur.t, wrap_angle(cur.theta - step_theta), 0, 0}, &cur_canonical);

    if (prop && (first || prop->score > cur.score)) {
      first = false;
      cur = *prop;
      cur_canonical = std::move(*prop_canonical);
      if (trace) trace->accepted_scores.push_back(cur.score);
      if (cur.score > best.score) best = cur;
    } else {
      step_t *= 0.5;
      step_theta *= 0.5;
    }
  }
  if (trace) trace->iterations = iters;
  return best;
}

struct LocalizeOptions {
  double cell = 0.1;
  std::size_t num_angles = 16;
  double threshold = 0.8;
  std::size_t topk = 3;
  bool refine = true;
  std::optional<RefineConfig> refine_config;  // defaults to RefineConfig::for_grid
  std::size_t threads = 1;
};

struct LocalizeResult {
  PosteriorGrid grid;
  std::vector<PoseHypothesis> hypotheses;  // best first, at most topk
};

/// Grid scoring, peak extraction, optional refinement of every peak, then
/// the top-k by score. Pass a prebuilt `hypotheses` grid to skip rendering.
inline LocalizeResult localize(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb,
                               const CircularFeature& query, const LocalizeOptions& opt,
                               const HypothesisGrid* hypotheses = nullptr) {
  std::optional<HypothesisGrid> owned;
  if (!hypotheses) {
    owned = HypothesisGrid::build(cloud, map, cb, opt.cell, opt.threads);
    hypotheses = &*owned;
  }
  LocalizeResult out;
  out.grid = hypotheses->score(query, opt.num_angles, opt.threads);
  std::vector<PoseHypothesis> peaks = extract_peaks(out.grid, opt.threshold);
  if (opt.refine) {
    const RefineConfig rc = opt.refine_config.value_or(RefineConfig::for_grid(opt.cell, opt.num_angles));
    parallel_for(peaks.size(), opt.threads, [&](std::size_t k) {
      peaks[k] = refine(cloud, map, cb, query, peaks[k], rc);
      peaks[k].likelihood = out.grid.likelihood_of(peaks[k].score);
    });
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const PoseHypothesis& a, const PoseHypothesis& b) { return a.score > b.score; });
  }
  if (peaks.size() > opt.topk) peaks.resize(opt.topk);
  out.hypotheses = std::move(peaks);
  return out;
}

}  // namespace laser
