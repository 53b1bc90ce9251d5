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
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "laser/circular_feature.hpp"
#include "laser/codebook.hpp"
#include "laser/localizer.hpp"
#include "laser/renderer.hpp"

namespace laser {

inline constexpr double kInlierRadius = 1.0;                        // m
inline constexpr double kInlierAngle = 30.0 * std::numbers::pi / 180.0;  // rad
inline constexpr double kRecallRadii[3] = {0.1, 0.5, 1.0};

struct EvalReport {
  std::map<double, double> recall_at;
  double recall_1m_30deg = 0.0;
  double topk_recall_1m = 0.0;
  double median_terr_under_1m = std::numeric_limits<double>::quiet_NaN();  // cm
  double median_rerr_under_1m = std::numeric_limits<double>::quiet_NaN();  // degrees
  std::size_t n_queries = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Top-1 recall at several radii, inlier recall, top-3 recall and medians
/// over queries localized within 1 m. Empty result lists count as misses.
inline EvalReport evaluate(const std::vector<std::vector<PoseHypothesis>>& results, const std::vector<Pose>& gts,
                           std::size_t topk = 3) {
  if (results.size() != gts.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(results.size()) + " results for " +
                                std::to_string(gts.size()) + " ground-truth poses");
  }
  EvalReport r;
  r.n_queries = gts.size();
  for (double radius : kRecallRadii) r.recall_at[radius] = 0.0;
  if (gts.empty()) return r;
  std::vector<double> terrs;
  std::vector<double> rerrs;
  std::size_t inliers = 0;
  std::size_t topk_hits = 0;
  for (std::size_t q = 0; q < gts.size(); ++q) {
    const auto& hyps = results[q];
    const Pose& gt = gts[q];
    for (std::size_t k = 0; k < std::min(topk, hyps.size()); ++k) {
      if ((hyps[k].t - gt.t).norm() < kInlierRadius) {
        ++topk_hits;
        break;
      }
    }
    if (hyps.empty()) continue;
    const double terr = (hyps.front().t - gt.t).norm();
    const double rerr = angle_distance(hyps.front().theta, gt.theta);
    for (double radius : kRecallRadii) {
      if (terr < radius) r.recall_at[radius] += 1.0;
    }
    if (terr < kInlierRadius) {
      terrs.push_back(terr * 100.0);
      rerrs.push_back(rerr * 180.0 / std::numbers::pi);
      if (rerr < kInlierAngle) ++inliers;
    }
  }
  const double n = static_cast<double>(gts.size());
  for (auto& [radius, value] : r.recall_at) value /= n;
  r.recall_1m_30deg = static_cast<double>(inliers) / n;
  r.topk_recall_1m = static_cast<double>(topk_hits) / n;
  r.median_terr_under_1m = median(std::move(terrs));
  r.median_rerr_under_1m = median(std::move(rerrs));
  return r;
}

struct InverseMatch {
  bool valid = false;
  std::size_t cls = 0;
  double distance = 0.0;
  double incident_angle = 0.0;
  double score = 0.0;  // cosine
};

/// Per-segment exhaustive search over class x angle code x distance code at
/// code centers. Ties keep the lowest (class, angle, distance) index.
inline std::vector<InverseMatch> inverse_match(const CircularFeature& query, const CodebookSet& cb) {
  cb.validate();
  if (query.D() != cb.D) throw std::invalid_argument("inverse_match: feature width differs from codebooks");
  std::vector<InverseMatch> out(query.V());
  for (std::size_t a = 0; a < query.V(); ++a) {
    if (!query.valid(a)) continue;
    const Vector seg = query.segment(a).transpose();
    InverseMatch best;
    best.valid = true;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cb.num_classes(); ++c) {
      for (std::size_t k = 0; k < cb.G; ++k) {
        for (std::size_t j = 0; j < cb.H; ++j) {
          const Vector code = (cb.angle_codes[c].row(static_cast<Eigen::Index>(k)) +
                               cb.dist_codes[c].row(static_cast<Eigen::Index>(j)))
                                  .transpose();
          const double s = cosine(seg, code);
          if (s > best_score) {
            best_score = s;
            best.cls = c;
            best.distance = cb.d_max * static_cast<double>(j) / static_cast<double>(cb.H);
            best.incident_angle = kTwoPi * static_cast<double>(k) / static_cast<double>(cb.G);
            best.score = s;
          }
        }
      }
    }
    out[a] = best;
  }
  return out;
}

struct BenchSample {
  std::size_t cells = 0;
  double seconds = 0.0;
  double samples_per_sec = 0.0;
};

struct BenchReport {
  std::vector<BenchSample> samples;
  double mean_rate = 0.0;
  double std_rate = 0.0;
  std::size_t threads = 1;
};

/// Wall-clock throughput of score_grid (hypothesis rendering plus rotation
/// search) for a query rendered at the first free cell. Rasterization is
/// excluded.
inline BenchReport bench_throughput(const PointCloudMap& cloud, const FloorMap& map, const CodebookSet& cb,
                                    double cell, std::size_t reps, std::size_t num_angles = 16,
                                    std::size_t threads = 1) {
  if (reps == 0) throw std::invalid_argument("bench: repetitions must be >= 1");
  const GridSpec spec = GridSpec::covering(map.bbox(), cell);
  std::optional<CircularFeature> query;
  for (std::size_t k = 0; k < spec.cells() && !query; ++k) {
    const Vec2 c = spec.center(k / spec.ny, k % spec.ny);
    if (!map.contains(c)) continue;
    CircularFeature f = render(cloud, map, cb, c, false);
    if (f.valid_count() > 0) query = std::move(f);
  }
  if (!query) throw std::invalid_argument("bench: map has no free cells");

  BenchReport report;
  report.threads = threads;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const PosteriorGrid g = score_grid(cloud, map, cb, *query, cell, num_angles, threads);
    const auto t1 = std::chrono::steady_clock::now();
    BenchSample s;
    s.cells = g.free_cells();
    s.seconds = std::chrono::duration<double>(t1 - t0).count();
    s.samples_per_sec = s.seconds > 0.0 ? static_cast<double>(s.cells) / s.seconds : 0.0;
    report.samples.push_back(s);
  }
  double sum = 0.0;
  for (const BenchSample& s : report.samples) sum += s.samples_per_sec;
  report.mean_rate = sum / static_cast<double>(reps);
  double var = 0.0;
  for (const BenchSample& s : report.samples) var += (s.samples_per_sec - report.mean_rate) * (s.samples_per_sec - report.mean_rate);
  report.std_rate = reps > 1 ? std::sqrt(var / static_cast<double>(reps - 1)) : 0.0;
  return report;
}

inline void write_bench_csv(std::ostream& os, const BenchReport& r) {
  os << "cells,seconds,samples_per_sec\n";
  for (const BenchSample& s : r.samples) {
    os << s.cells << ',' << s.seconds << ',' << s.samples_per_sec << '\n';
  }
}

}  // namespace laser
