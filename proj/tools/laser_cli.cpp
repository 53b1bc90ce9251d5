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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "laser/laser.hpp"

namespace fs = std::filesystem;
using laser::json;

namespace {

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    laser::write_text_file(out, text);
  }
}

laser::FloorMap load_map(const std::string& path) { return laser::parse_floormap(laser::read_text_file(path)); }

json rasterize_json(const laser::PointCloudMap& cloud) {
  json pts = json::array();
  for (const laser::MapPoint& p : cloud.points) {
    pts.push_back({{"x", p.t.x()},
                   {"y", p.t.y()},
                   {"nx", p.n.x()},
                   {"ny", p.n.y()},
                   {"label", std::string(laser::to_string(p.s))},
                   {"edge", p.edge_id}});
  }
  return {{"interval", cloud.interval}, {"count", cloud.points.size()}, {"points", std::move(pts)}};
}

json report_json(const laser::EvalReport& r) {
  json recall = json::object();
  for (const auto& [radius, v] : r.recall_at) {
    std::ostringstream key;
    key.imbue(std::locale::classic());
    key << radius;
    recall[key.str()] = v;
  }
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"n_queries", r.n_queries},
          {"recall_at", recall},
          {"recall_1m_30deg", r.recall_1m_30deg},
          {"topk_recall_1m", r.topk_recall_1m},
          {"median_terr_under_1m_cm", num(r.median_terr_under_1m)},
          {"median_rerr_under_1m_deg", num(r.median_rerr_under_1m)}};
}

// A dataset is a directory holding map.json, or a directory of such
// directories. gt.json next to a map supplies its training poses.
std::vector<laser::TrainScene> load_dataset(const std::string& root, double interval, std::size_t poses_per_map,
                                            std::uint64_t seed) {
  std::vector<fs::path> dirs;
  if (fs::exists(fs::path(root) / "map.json")) {
    dirs.push_back(root);
  } else {
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_directory() && fs::exists(e.path() / "map.json")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
  }
  if (dirs.empty()) throw std::invalid_argument("no map.json found under " + root);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::vector<laser::TrainScene> out;
  for (const fs::path& d : dirs) {
    laser::TrainScene s{load_map((d / "map.json").string()), {}, {}};
    s.cloud = laser::rasterize(s.map, interval);
    if (fs::exists(d / "gt.json")) {
      s.poses = laser::poses_from_json(laser::parse_json_file((d / "gt.json").string()));
    } else {
      for (std::size_t k = 0; k < poses_per_map; ++k) s.poses.push_back(laser::sample_free_pose(s.map, rng, 0.3));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Floor-map localization with latent-space rendering"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double interval = laser::kDefaultInterval;
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads")->capture_default_str();

  // rasterize
  auto* ras = app.add_subcommand("rasterize", "sample a floor map into an annotated point cloud");
  std::string ras_map, ras_out;
  ras->add_option("map", ras_map)->required();
  ras->add_option("--interval", interval)->capture_default_str();
  ras->add_option("--out", ras_out);

  // render
  auto* ren = app.add_subcommand("render", "render the circular feature at a pose");
  std::string ren_map, ren_cb, ren_out;
  double rx = 0, ry = 0, rtheta = 0;
  ren->add_option("map", ren_map)->required();
  ren->add_option("codebooks", ren_cb)->required();
  ren->add_option("--x", rx)->required();
  ren->add_option("--y", ry)->required();
  ren->add_option("--theta", rtheta)->required();
  ren->add_option("--interval", interval)->capture_default_str();
  ren->add_option("--out", ren_out);

  // localize
  auto* loc = app.add_subcommand("localize", "localize query features against a map");
  std::string loc_map, loc_cb, loc_query, loc_out, loc_pgm, loc_csv;
  laser::LocalizeOptions lopt;
  bool no_refine = false;
  loc->add_option("map", loc_map)->required();
  loc->add_option("codebooks", loc_cb)->required();
  loc->add_option("query", loc_query)->required();
  loc->add_option("--cell", lopt.cell)->capture_default_str();
  loc->add_option("--angles", lopt.num_angles)->capture_default_str();
  loc->add_option("--threshold", lopt.threshold)->capture_default_str();
  loc->add_option("--topk", lopt.topk)->capture_default_str();
  loc->add_flag("--no-refine", no_refine);
  loc->add_option("--posterior", loc_pgm, "16-bit PGM of the first query's score grid");
  loc->add_option("--grid-csv", loc_csv, "CSV of the first query's score grid");
  loc->add_option("--interval", interval)->capture_default_str();
  loc->add_option("--out", loc_out);

  // train
  auto* tr = app.add_subcommand("train", "train per-semantic codebooks on a dataset");
  std::string tr_dir, tr_out, tr_init, tr_loss;
  laser::TrainConfig tcfg;
  std::size_t tr_G = 32, tr_H = 32, tr_V = 16, tr_D = 128, tr_poses = 10;
  double tr_dmax = 10.0;
  tr->add_option("dataset", tr_dir)->required();
  tr->add_option("--epochs", tcfg.epochs)->capture_default_str();
  tr->add_option("--lr", tcfg.lr)->capture_default_str();
  tr->add_option("--negatives", tcfg.num_negatives)->capture_default_str();
  tr->add_option("--noise", tcfg.noise_sigma)->capture_default_str();
  tr->add_option("--init", tr_init, "start from existing codebooks");
  tr->add_option("--G", tr_G)->capture_default_str();
  tr->add_option("--H", tr_H)->capture_default_str();
  tr->add_option("--V", tr_V)->capture_default_str();
  tr->add_option("--D", tr_D)->capture_default_str();
  tr->add_option("--d-max", tr_dmax)->capture_default_str();
  tr->add_option("--poses", tr_poses, "poses per map without gt.json")->capture_default_str();
  tr->add_option("--loss", tr_loss, "loss curve CSV");
  tr->add_option("--interval", interval)->capture_default_str();
  tr->add_option("--out", tr_out)->required();

  // baseline
  auto* bl = app.add_subcommand("baseline", "classical scan-matching grid localization");
  std::string bl_map, bl_scan, bl_out;
  laser::ScanLikelihoodConfig scfg;
  laser::MclOptions mopt;
  bl->add_option("map", bl_map)->required();
  bl->add_option("scan", bl_scan)->required();
  bl->add_option("--rays", scfg.num_rays)->capture_default_str();
  bl->add_option("--sigma", scfg.sigma_d)->capture_default_str();
  bl->add_option("--max-range", scfg.max_range)->capture_default_str();
  bl->add_option("--cell", mopt.cell)->capture_default_str();
  bl->add_option("--angles", mopt.num_angles)->capture_default_str();
  bl->add_option("--threshold", mopt.threshold)->capture_default_str();
  bl->add_option("--topk", mopt.topk)->capture_default_str();
  bl->add_option("--out", bl_out);

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "generate a synthetic floor plan with ground-truth queries");
  std::string gen_style = "multi_room", gen_out;
  laser::SceneParams sp;
  std::size_t gen_rays = 72;
  bool no_semantics = false;
  gen->add_option("--style", gen_style)->check(CLI::IsMember({"single_room", "multi_room", "symmetric"}))
      ->capture_default_str();
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--queries", sp.num_queries)->capture_default_str();
  gen->add_option("--rooms", sp.rooms)->capture_default_str();
  gen->add_option("--V", sp.V)->capture_default_str();
  gen->add_option("--D", sp.D)->capture_default_str();
  gen->add_option("--rays", gen_rays, "rays per LiDAR scan")->capture_default_str();
  gen->add_flag("--disambiguate", sp.disambiguate, "symmetric: label one outer wall as a door");
  gen->add_flag("--no-semantics", no_semantics);

  // eval
  auto* ev = app.add_subcommand("eval", "recall and median errors of localization results");
  std::string ev_results, ev_gt;
  ev->add_option("results", ev_results)->required();
  ev->add_option("gt", ev_gt)->required();

  // bench
  auto* be = app.add_subcommand("bench", "score-grid throughput");
  std::string be_map, be_cb;
  std::size_t reps = 3, be_angles = 16;
  double be_cell = 0.1;
  be->add_option("map", be_map)->required();
  be->add_option("codebooks", be_cb)->required();
  be->add_option("--reps", reps)->capture_default_str();
  be->add_option("--cell", be_cell)->capture_default_str();
  be->add_option("--angles", be_angles)->capture_default_str();

  // invmatch
  auto* im = app.add_subcommand("invmatch", "match query segments back to codebook entries");
  std::string im_query, im_cb;
  im->add_option("query", im_query)->required();
  im->add_option("codebooks", im_cb)->required();

  // init-codebooks
  auto* ic = app.add_subcommand("init-codebooks", "write freshly seeded random codebooks");
  std::string ic_out;
  std::size_t ic_G = 32, ic_H = 32, ic_V = 16, ic_D = 128;
  double ic_dmax = 10.0;
  ic->add_option("--G", ic_G)->capture_default_str();
  ic->add_option("--H", ic_H)->capture_default_str();
  ic->add_option("--V", ic_V)->capture_default_str();
  ic->add_option("--D", ic_D)->capture_default_str();
  ic->add_option("--d-max", ic_dmax)->capture_default_str();
  ic->add_option("--out", ic_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ras) {
      emit(rasterize_json(laser::rasterize(load_map(ras_map), interval)), ras_out);
    } else if (*ren) {
      const laser::FloorMap map = load_map(ren_map);
      const laser::CodebookSet cb = laser::load_codebooks(ren_cb);
      const laser::PointCloudMap cloud = laser::rasterize(map, interval);
      emit(laser::to_json(laser::render_pose(cloud, map, cb, laser::Vec2(rx, ry), rtheta)), ren_out);
    } else if (*loc) {
      const laser::FloorMap map = load_map(loc_map);
      const laser::CodebookSet cb = laser::load_codebooks(loc_cb);
      const laser::PointCloudMap cloud = laser::rasterize(map, interval);
      const json qj = laser::parse_json_file(loc_query);
      const std::vector<laser::CircularFeature> queries = laser::features_from_json(qj);
      lopt.refine = !no_refine;
      lopt.threads = threads;
      const laser::HypothesisGrid hyps = laser::HypothesisGrid::build(cloud, map, cb, lopt.cell, threads);
      json all = json::array();
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const laser::LocalizeResult r = laser::localize(cloud, map, cb, queries[q], lopt, &hyps);
        if (q == 0 && !loc_pgm.empty()) laser::save_pgm16(loc_pgm, r.grid);
        if (q == 0 && !loc_csv.empty()) {
          std::ofstream os(loc_csv, std::ios::binary);
          laser::write_grid_csv(os, r.grid);
        }
        all.push_back(laser::to_json(r.hypotheses));
      }
      emit(qj.is_array() ? all : all[0], loc_out);
    } else if (*tr) {
      const std::vector<laser::TrainScene> data = load_dataset(tr_dir, interval, tr_poses, seed);
      laser::CodebookSet cb = tr_init.empty()
                                  ? laser::init_codebooks(tr_G, tr_H, tr_V, tr_D, laser::kNumSemantics, tr_dmax, seed)
                                  : laser::load_codebooks(tr_init);
      tcfg.seed = seed;
      const laser::TrainResult res = laser::train_codebooks(data, std::move(cb), tcfg);
      laser::save_codebooks(tr_out, res.codebooks);
      std::ostringstream csv;
      laser::write_loss_csv(csv, res.curve);
      if (tr_loss.empty()) {
        std::cout << csv.str();
      } else {
        laser::write_text_file(tr_loss, csv.str());
      }
    } else if (*bl) {
      const laser::FloorMap map = load_map(bl_map);
      const json sj = laser::parse_json_file(bl_scan);
      const std::vector<laser::DepthScan> scans = laser::scans_from_json(sj);
      mopt.threads = threads;
      const laser::ScanHypothesisGrid grid =
          laser::ScanHypothesisGrid::build(map, mopt.cell, scfg.num_rays, mopt.num_angles, scfg.max_range, threads);
      json all = json::array();
      for (const laser::DepthScan& s : scans) {
        if (s.num_rays() != scfg.num_rays) {
          throw std::invalid_argument("scan has " + std::to_string(s.num_rays()) + " rays, expected " +
                                      std::to_string(scfg.num_rays));
        }
        all.push_back(laser::to_json(laser::mcl_localize(s, map, scfg, mopt, &grid).hypotheses));
      }
      emit(sj.is_array() ? all : all[0], bl_out);
    } else if (*gen) {
      sp.semantics = !no_semantics;
      const laser::SceneStyle style = laser::parse_scene_style(gen_style);
      const laser::SyntheticScene scene = laser::generate_scene(style, sp, seed);
      fs::create_directories(gen_out);
      const fs::path dir(gen_out);
      json gt = json::array();
      json queries = json::array();
      json scans = json::array();
      for (const laser::QuerySample& q : scene.gt_queries) {
        gt.push_back(laser::pose_to_json(q.gt));
        queries.push_back(laser::to_json(q));
        scans.push_back(laser::to_json(laser::lidar_scan(scene.floormap, q.gt.t, gen_rays, q.gt.theta)));
      }
      json map = laser::to_json(scene.floormap);
      laser::write_text_file((dir / "map.json").string(), map.dump(2) + "\n");
      laser::write_text_file((dir / "gt.json").string(), gt.dump(2) + "\n");
      laser::write_text_file((dir / "queries.json").string(), queries.dump() + "\n");
      laser::write_text_file((dir / "scans.json").string(), scans.dump(2) + "\n");
    } else if (*ev) {
      const auto results = laser::results_from_json(laser::parse_json_file(ev_results));
      const auto gts = laser::poses_from_json(laser::parse_json_file(ev_gt));
      emit(report_json(laser::evaluate(results, gts)), "");
    } else if (*be) {
      const laser::FloorMap map = load_map(be_map);
      const laser::CodebookSet cb = laser::load_codebooks(be_cb);
      const laser::PointCloudMap cloud = laser::rasterize(map, interval);
      const laser::BenchReport r = laser::bench_throughput(cloud, map, cb, be_cell, reps, be_angles, threads);
      laser::write_bench_csv(std::cout, r);
      std::cerr << "threads=" << r.threads << " samples_per_sec=" << r.mean_rate << " +- " << r.std_rate << "\n";
    } else if (*ic) {
      laser::save_codebooks(ic_out, laser::init_codebooks(ic_G, ic_H, ic_V, ic_D, laser::kNumSemantics, ic_dmax, seed));
    } else if (*im) {
      const laser::CodebookSet cb = laser::load_codebooks(im_cb);
      const json qj = laser::parse_json_file(im_query);
      const std::vector<laser::CircularFeature> queries = laser::features_from_json(qj);
      json all = json::array();
      for (const laser::CircularFeature& f : queries) {
        json segs = json::array();
        const auto matches = laser::inverse_match(f, cb);
        for (std::size_t a = 0; a < matches.size(); ++a) {
          const laser::InverseMatch& m = matches[a];
          if (!m.valid) {
            segs.push_back({{"segment", a}, {"valid", false}});
            continue;
          }
          json e = {{"segment", a},          {"valid", true},
                    {"class", m.cls},        {"distance", m.distance},
                    {"incident_angle", m.incident_angle}, {"score", m.score}};
          if (cb.assignment == laser::ClassAssignment::per_semantic && m.cls < laser::kNumSemantics) {
            e["label"] = std::string(laser::to_string(static_cast<laser::Semantic>(m.cls)));
          }
          segs.push_back(std::move(e));
        }
        all.push_back(std::move(segs));
      }
      emit(qj.is_array() ? all : all[0], "");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
