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

// Acceptance checks. Prints one PASS/FAIL line per criterion; with a
// criterion number as the only argument, runs just that one.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "support.hpp"

#ifndef LASER_CLI_PATH
#error "LASER_CLI_PATH must point at the laser_cli binary"
#endif
#ifndef LASER_ACCEPT_WORKDIR
#error "LASER_ACCEPT_WORKDIR must name a scratch directory"
#endif

namespace laser {
namespace {

using namespace fixture;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss.setf(std::ios::fixed);
  ss.precision(prec);
  ss << v;
  return ss.str();
}

std::string sci(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss.setf(std::ios::scientific);
  ss.precision(2);
  ss << v;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ------------------------------------------------------------------

Outcome geometry_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t origins = 0, mismatches = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticScene s = random_scene(100 + seed, seed % 2 ? SceneStyle::multi_room : SceneStyle::symmetric);
    const PointCloudMap c = rasterize(s.floormap);
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 6; ++k) {
      const Vec2 o = sample_free_pose(s.floormap, rng).t;
      if (visible_points(c, s.floormap, o).visible_indices != brute_visible(c, s.floormap, o)) ++mismatches;
      ++origins;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && origins >= 50 && secs < 30.0,
          std::to_string(origins) + " origins on 10 scenes, " + std::to_string(mismatches) + " mismatches, " +
              fmt(secs) + " s"};
}

// ---- 2 ------------------------------------------------------------------

Outcome feature_algebra() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> shift(0, 15);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::size_t failures = 0;
  const int n = 1000;
  for (int t = 0; t < n; ++t) {
    const CircularFeature a = random_feature(rng, 16, 8, 0.2);
    const CircularFeature b = random_feature(rng, 16, 8, 0.2);
    const double s = similarity(a, b);
    if (!(s >= 0.0 && s <= 1.0)) ++failures;
    if (s != similarity(b, a)) ++failures;
    if (std::abs(similarity(a, a) - 1.0) > 1e-12) ++failures;
    const double ta = kTwoPi * shift(rng) / 16;
    const double tb = kTwoPi * shift(rng) / 16;
    const CircularFeature two = rotate(rotate(a, ta), tb);
    const CircularFeature once = rotate(a, ta + tb);
    if (two.segments() != once.segments() || two.valid() != once.valid()) ++failures;
    if (std::abs(similarity(rotate(a, ta), rotate(b, ta)) - s) > 1e-12) ++failures;
    const CircularFeature big(a.segments() * scale(rng), a.valid());
    if (std::abs(similarity(big, b) - s) > 1e-12) ++failures;
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 10.0,
          std::to_string(n) + " feature pairs, " + std::to_string(failures) + " violations, " + fmt(secs) + " s"};
}

// ---- 3 ------------------------------------------------------------------

Outcome render_covariance() {
  std::size_t pairs = 0, failures = 0;
  const CodebookSet cb = init_codebooks(32, 32, 16, 32, 3, 10.0, 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SyntheticScene s = random_scene(200 + seed);
    const PointCloudMap c = rasterize(s.floormap);
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 2; ++k) {
      const Vec2 t = sample_free_pose(s.floormap, rng).t;
      const CircularFeature base = render(c, s.floormap, cb, t);
      for (std::size_t a = 0; a < 16; ++a) {
        const double theta = sampled_angle(a, 16);
        const CircularFeature p = render_pose(c, s.floormap, cb, t, theta);
        const CircularFeature r = rotate(base, theta);
        if (p.segments() != r.segments() || p.valid() != r.valid()) ++failures;
      }
      ++pairs;
    }
  }
  return {failures == 0, std::to_string(pairs) + " (scene, location) pairs x 16 angles, " + std::to_string(failures) +
                             " differences"};
}

// ---- 4 ------------------------------------------------------------------

Outcome self_localization() {
  const auto t0 = std::chrono::steady_clock::now();
  const CodebookSet cb = init_codebooks(32, 32, 16, 64, 3, 10.0, 4);
  std::vector<std::vector<PoseHypothesis>> base, refined;
  std::vector<Pose> gts;
  std::size_t within_15cm = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticScene s = random_scene(400 + seed);
    const PointCloudMap c = rasterize(s.floormap);
    const HypothesisGrid hg = HypothesisGrid::build(c, s.floormap, cb, 0.1);
    std::mt19937_64 rng(seed);
    for (int q = 0; q < 10; ++q) {
      const Pose p = sample_free_pose(s.floormap, rng, 0.3);
      const CircularFeature f = render_pose(c, s.floormap, cb, p.t, p.theta);
      LocalizeOptions opt;
      opt.refine = false;
      const LocalizeResult r0 = localize(c, s.floormap, cb, f, opt, &hg);
      opt.refine = true;
      const LocalizeResult r1 = localize(c, s.floormap, cb, f, opt, &hg);
      if (!r0.hypotheses.empty() && (r0.hypotheses[0].t - p.t).norm() < 0.15) ++within_15cm;
      base.push_back(r0.hypotheses);
      refined.push_back(r1.hypotheses);
      gts.push_back(p);
    }
  }
  const EvalReport e0 = evaluate(base, gts);
  const EvalReport e1 = evaluate(refined, gts);
  const double recall15 = static_cast<double>(within_15cm) / static_cast<double>(gts.size());
  const double secs = seconds_since(t0);
  const bool pass = recall15 >= 0.95 && e0.recall_1m_30deg >= 0.95 &&
                    e1.median_terr_under_1m < e0.median_terr_under_1m && e1.median_rerr_under_1m < 2.0 &&
                    secs < 300.0;
  return {pass, "recall@0.15m " + fmt(recall15) + ", recall@(1m,30deg) " + fmt(e0.recall_1m_30deg) +
                    ", median terr " + fmt(e0.median_terr_under_1m, 2) + " -> " + fmt(e1.median_terr_under_1m, 2) +
                    " cm, median rerr " + fmt(e0.median_rerr_under_1m, 2) + " -> " +
                    fmt(e1.median_rerr_under_1m, 2) + " deg, " + fmt(secs, 1) + " s"};
}

// ---- 5 ------------------------------------------------------------------

// Top-1 within 1 m and 30 deg, and no peak farther than 1 m from it within
// `tie` of its score.
bool unique_success(const std::vector<PoseHypothesis>& h, const Pose& gt, double tie) {
  if (h.empty()) return false;
  if ((h[0].t - gt.t).norm() >= kInlierRadius || angle_distance(h[0].theta, gt.theta) >= kInlierAngle) return false;
  for (std::size_t k = 1; k < h.size(); ++k) {
    if ((h[k].t - h[0].t).norm() >= kInlierRadius && h[0].score - h[k].score <= tie) return false;
  }
  return true;
}

Outcome ambiguity() {
  const CodebookSet cb = init_codebooks(32, 32, 16, 64, 3, 10.0, 5);
  std::size_t cases = 0, ambiguous = 0, collapsed = 0;
  double worst_gap = 0.0, worst_margin = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneParams sp;
    sp.num_queries = 4;
    sp.D = 8;
    const SyntheticScene plain = generate_scene(SceneStyle::symmetric, sp, 500 + seed);
    sp.disambiguate = true;
    const SyntheticScene door = generate_scene(SceneStyle::symmetric, sp, 500 + seed);
    const PointCloudMap cp = rasterize(plain.floormap);
    const PointCloudMap cd = rasterize(door.floormap);
    const HypothesisGrid hp = HypothesisGrid::build(cp, plain.floormap, cb, 0.1);
    const HypothesisGrid hd = HypothesisGrid::build(cd, door.floormap, cb, 0.1);
    for (const QuerySample& q : plain.gt_queries) {
      const Pose& p = q.gt;
      LocalizeOptions opt;
      const LocalizeResult rp = localize(cp, plain.floormap, cb, render_pose(cp, plain.floormap, cb, p.t, p.theta), opt, &hp);
      const LocalizeResult rd = localize(cd, door.floormap, cb, render_pose(cd, door.floormap, cb, p.t, p.theta), opt, &hd);
      ++cases;
      if (rp.hypotheses.size() >= 2) {
        const double gap = rp.hypotheses[0].score - rp.hypotheses[1].score;
        worst_gap = std::max(worst_gap, gap);
        if (gap <= 0.02 && (rp.hypotheses[0].t - rp.hypotheses[1].t).norm() >= kInlierRadius) ++ambiguous;
      } else {
        worst_gap = 1.0;
      }
      if (unique_success(rd.hypotheses, p, 0.05)) {
        ++collapsed;
        for (std::size_t k = 1; k < rd.hypotheses.size(); ++k) {
          if ((rd.hypotheses[k].t - rd.hypotheses[0].t).norm() >= kInlierRadius) {
            worst_margin = std::min(worst_margin, rd.hypotheses[0].score - rd.hypotheses[k].score);
          }
        }
      }
    }
  }
  return {ambiguous == cases && collapsed == cases,
          std::to_string(ambiguous) + "/" + std::to_string(cases) + " wall-only queries with twin peaks (max gap " +
              fmt(worst_gap, 4) + "), " + std::to_string(collapsed) + "/" + std::to_string(cases) +
              " unique with a door label (min margin to a far peak " + fmt(worst_margin, 4) + ")"};
}

// ---- 6 ------------------------------------------------------------------

double depth_recall(const std::vector<SyntheticScene>& scenes, const CodebookSet& cb) {
  std::vector<std::vector<PoseHypothesis>> res;
  std::vector<Pose> gts;
  for (const SyntheticScene& s : scenes) {
    const PointCloudMap c = rasterize(s.floormap);
    const HypothesisGrid hg = HypothesisGrid::build(c, s.floormap, cb, 0.1);
    for (const QuerySample& q : s.gt_queries) {
      LocalizeOptions opt;
      opt.threshold = 0.0;
      res.push_back(localize(c, s.floormap, cb, q.feature, opt, &hg).hypotheses);
      gts.push_back(q.gt);
    }
  }
  return evaluate(res, gts).recall_at.at(1.0);
}

Outcome training_efficacy() {
  const auto t0 = std::chrono::steady_clock::now();
  SceneParams sp;
  sp.V = 16;
  sp.D = 32;
  sp.num_queries = 20;
  std::vector<TrainScene> train;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticScene s = generate_scene(SceneStyle::multi_room, sp, 600 + seed);
    TrainScene ts{s.floormap, rasterize(s.floormap), {}};
    for (const QuerySample& q : s.gt_queries) ts.poses.push_back(q.gt);
    train.push_back(std::move(ts));
  }
  sp.num_queries = 10;
  std::vector<SyntheticScene> held_out;
  for (std::uint64_t seed = 0; seed < 4; ++seed) held_out.push_back(generate_scene(SceneStyle::multi_room, sp, 700 + seed));

  const CodebookSet init = init_codebooks(32, 32, 16, 32, 3, 10.0, 6);
  TrainConfig cfg;
  cfg.seed = 6;
  const TrainResult tr = train_codebooks(train, init, cfg);
  const double first = tr.curve.front().total;
  const double last = tr.curve.back().total;
  const double drop = 1.0 - last / first;
  const double r_trained = depth_recall(held_out, tr.codebooks);
  const double r_random = depth_recall(held_out, init_codebooks(32, 32, 16, 32, 3, 10.0, 66));
  const double secs = seconds_since(t0);
  return {drop >= 0.5 && r_trained - r_random >= 0.2 && secs < 900.0,
          "loss " + fmt(first, 4) + " -> " + fmt(last, 4) + " (" + fmt(100 * drop, 1) + "% drop), held-out recall@1m " +
              fmt(r_trained) + " trained vs " + fmt(r_random) + " random, " + fmt(secs, 1) + " s"};
}

// ---- 7 ------------------------------------------------------------------

Outcome gradient_check() {
  const FloorMap m = square_map(4.0);
  const PointCloudMap c = three_point_cloud(m);
  const CodebookSet cb = init_codebooks(8, 8, 4, 8, 3, 10.0, 7);
  std::mt19937_64 rng(7);
  const CircularFeature anchor = random_feature(rng, 4, 8);
  const RenderWeights pos = render_weights(c, m, cb, Vec2(2.1, 1.7), 0.3);
  std::vector<RenderWeights> negs{render_weights(c, m, cb, Vec2(1.0, 2.5), 2.0),
                                  render_weights(c, m, cb, Vec2(3.0, 3.2), 4.0),
                                  render_weights(c, m, cb, Vec2(2.6, 0.8), 5.5)};
  // Stay away from the hinge kinks.
  const Matrix stacked = cb.stacked();
  const LossGradient lg = loss_and_gradient(stacked, anchor, pos, negs);
  const CircularFeature fp = pos.apply(stacked);
  double closest_kink = 1.0;
  for (const RenderWeights& n : negs) {
    const CircularFeature fn = n.apply(stacked);
    closest_kink = std::min(closest_kink, std::abs(similarity(anchor, fn) - similarity(anchor, fp) + kTripletMargin));
    closest_kink = std::min(closest_kink, std::abs(cosine(context(anchor), context(fn)) -
                                                   cosine(context(anchor), context(fp)) + kContextMargin));
  }
  const GradCheck gc = finite_difference_check(stacked, anchor, pos, negs, true, 1e-5);
  return {closest_kink > 1e-3 && gc.max_rel_err < 1e-4 && gc.max_abs_grad > 0.0 && lg.total > 0.0,
          "max relative error " + sci(gc.max_rel_err) + " at eps 1e-5, nearest hinge " + fmt(closest_kink, 4)};
}

// ---- 8 ------------------------------------------------------------------

Outcome baseline_parity() {
  ScanLikelihoodConfig scfg;
  MclOptions mopt;
  // Continuous poses, as for the latent pipeline. Headings snapped to the
  // rotation lattice are reported alongside as a diagnostic only.
  std::size_t n = 0, hits = 0, lattice_hits = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SyntheticScene s = random_scene(800 + seed);
    const ScanHypothesisGrid hg = ScanHypothesisGrid::build(s.floormap, mopt.cell, 72, mopt.num_angles, scfg.max_range);
    std::mt19937_64 rng(seed);
    for (int q = 0; q < 10; ++q) {
      const Pose p = sample_free_pose(s.floormap, rng, 0.3);
      const LocalizeResult r =
          mcl_localize(lidar_scan(s.floormap, p.t, 72, p.theta, scfg.max_range), s.floormap, scfg, mopt, &hg);
      ++n;
      if (!r.hypotheses.empty() && (r.hypotheses[0].t - p.t).norm() < 0.15) ++hits;
      const double snapped = sampled_angle(static_cast<std::size_t>(std::lround(p.theta / (kTwoPi / 16))) % 16, 16);
      const LocalizeResult rs =
          mcl_localize(lidar_scan(s.floormap, p.t, 72, snapped, scfg.max_range), s.floormap, scfg, mopt, &hg);
      if (!rs.hypotheses.empty() && (rs.hypotheses[0].t - p.t).norm() < 0.15) ++lattice_hits;
    }
  }
  const CodebookSet cb = init_codebooks(32, 32, 16, 64, 3, 10.0, 8);
  std::size_t cases = 0, mcl_unique = 0, latent_unique = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneParams sp;
    sp.num_queries = 4;
    sp.D = 8;
    sp.disambiguate = true;
    const SyntheticScene s = generate_scene(SceneStyle::symmetric, sp, 850 + seed);
    const PointCloudMap c = rasterize(s.floormap);
    const HypothesisGrid hg = HypothesisGrid::build(c, s.floormap, cb, 0.1);
    const ScanHypothesisGrid sg = ScanHypothesisGrid::build(s.floormap, mopt.cell, 72, mopt.num_angles, scfg.max_range);
    for (const QuerySample& q : s.gt_queries) {
      const Pose& p = q.gt;
      ++cases;
      const LocalizeResult rm =
          mcl_localize(lidar_scan(s.floormap, p.t, 72, p.theta, scfg.max_range), s.floormap, scfg, mopt, &sg);
      const LocalizeResult rl =
          localize(c, s.floormap, cb, render_pose(c, s.floormap, cb, p.t, p.theta), LocalizeOptions{}, &hg);
      if (unique_success(rm.hypotheses, p, 0.02)) ++mcl_unique;
      if (unique_success(rl.hypotheses, p, 0.02)) ++latent_unique;
    }
  }
  return {hits == n && mcl_unique < latent_unique,
          "MCL recall@0.15m " + std::to_string(hits) + "/" + std::to_string(n) + " (lattice headings " +
              std::to_string(lattice_hits) + "/" + std::to_string(n) + "); disambiguated symmetric scenes: " +
              "unique top-1 MCL " + std::to_string(mcl_unique) + "/" + std::to_string(cases) + " vs latent " +
              std::to_string(latent_unique) + "/" + std::to_string(cases)};
}

// ---- 9 ------------------------------------------------------------------

Outcome throughput() {
  SceneParams sp = no_query_params();
  sp.width = 10.0;
  sp.height = 10.0;
  const SyntheticScene s = generate_scene(SceneStyle::single_room, sp, 9);
  const PointCloudMap c = rasterize(s.floormap);
  const CodebookSet cb = init_codebooks(32, 32, 16, 128, 3, 10.0, 9);
  const BenchReport r = bench_throughput(c, s.floormap, cb, 0.1, 1, 16, 1);
  std::ostringstream csv;
  write_bench_csv(csv, r);
  const bool header = csv.str().rfind("cells,seconds,samples_per_sec\n", 0) == 0;
  const BenchSample& b = r.samples.front();
  return {header && b.seconds < 10.0 && b.cells > 9000,
          std::to_string(b.cells) + " poses in " + fmt(b.seconds) + " s on 1 thread (" + fmt(b.samples_per_sec, 0) +
              " samples/s; the 13238 samples/s GPU figure is not comparable)"};
}

// ---- 10 -----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// First CSV column only: wall-clock columns vary by design.
std::string csv_first_column(const std::string& text) {
  std::istringstream is(text);
  std::string line, out;
  while (std::getline(is, line)) out += line.substr(0, line.find(',')) + "\n";
  return out;
}

Outcome determinism() {
  const fs::path work = fs::path(LASER_ACCEPT_WORKDIR);
  fs::remove_all(work);
  const std::string cli = LASER_CLI_PATH;
  std::vector<std::string> failed;
  std::size_t commands = 0;
  auto run = [&](const fs::path& dir, const std::string& args) {
    const std::string cmd = "cd \"" + dir.string() + "\" && \"" + cli + "\" " + args;
    return std::system(cmd.c_str()) == 0;
  };
  // Each entry: name, arguments, primary outputs (relative to the run dir).
  struct Step {
    std::string name, args;
    std::vector<std::string> outputs;
    bool csv_first = false;
  };
  const std::vector<Step> steps{
      {"gen-scene", "gen-scene --style multi_room --seed 3 --queries 3 --V 16 --D 32 --out scene",
       {"scene/map.json", "scene/gt.json", "scene/queries.json", "scene/scans.json"}},
      {"init-codebooks", "init-codebooks --G 16 --H 16 --V 16 --D 32 --seed 4 --out init.bin", {"init.bin"}},
      {"rasterize", "rasterize scene/map.json --seed 1 > ras.json", {"ras.json"}},
      {"render", "render scene/map.json init.bin --x 1.0 --y 1.0 --theta 0.3 --seed 1 --out feat.json", {"feat.json"}},
      {"train", "train scene --epochs 2 --negatives 5 --G 16 --H 16 --V 16 --D 32 --seed 5 --out cb.bin --loss loss.csv",
       {"cb.bin", "loss.csv"}},
      {"localize", "localize scene/map.json cb.bin scene/queries.json --threshold 0 --seed 1 --posterior post.pgm > res.json",
       {"res.json", "post.pgm"}},
      {"baseline", "baseline scene/map.json scene/scans.json --cell 0.2 --seed 1 > mcl.json", {"mcl.json"}},
      {"eval", "eval res.json scene/gt.json --seed 1 > eval.json", {"eval.json"}},
      {"bench", "bench scene/map.json cb.bin --reps 2 --cell 0.25 --seed 1 > bench.csv 2> /dev/null", {"bench.csv"}, true},
      {"invmatch", "invmatch feat.json cb.bin --seed 1 > inv.json", {"inv.json"}},
  };
  for (const char* run_name : {"a", "b"}) {
    const fs::path dir = work / run_name;
    fs::create_directories(dir);
    for (const Step& s : steps) {
      if (!run(dir, s.args)) failed.push_back(std::string(s.name) + " exited non-zero");
    }
  }
  for (const Step& s : steps) {
    ++commands;
    for (const std::string& o : s.outputs) {
      std::string a = slurp(work / "a" / o);
      std::string b = slurp(work / "b" / o);
      if (s.csv_first) {
        a = csv_first_column(a);
        b = csv_first_column(b);
      }
      if (a.empty() || a != b) failed.push_back(s.name + ":" + o);
    }
  }
  std::string detail = std::to_string(commands) + " commands run twice";
  if (failed.empty()) {
    detail += ", all primary outputs byte-identical";
  } else {
    detail += ", differing or missing:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace
}  // namespace laser

int main(int argc, char** argv) {
  using namespace laser;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"geometry oracle", geometry_oracle},       {"circular feature algebra", feature_algebra},
      {"rendering covariance", render_covariance}, {"self-localization", self_localization},
      {"ambiguity surfacing", ambiguity},          {"training efficacy", training_efficacy},
      {"gradient correctness", gradient_check},    {"baseline parity", baseline_parity},
      {"throughput report", throughput},           {"determinism", determinism},
  };
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (only != 0 && id != only) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << " " << criteria[k].first << ": " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
