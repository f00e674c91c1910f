// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion. Usage:
//   bevkit_acceptance <path to bevkit executable>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "bevkit/app.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/future.hpp"
#include "bevkit/geometry.hpp"
#include "bevkit/grid_io.hpp"
#include "bevkit/temporal.hpp"
#include "oracles.hpp"
#include "pool_oracle.hpp"
#include "random_cases.hpp"

using namespace bevkit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure reasons.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    pass_ = false;
    if (++failures_ <= 3) notes_ << (notes_.tellp() > 0 ? "; " : "") << what;
  }
  Outcome done(const std::string& summary) const {
    std::string d = summary;
    if (!pass_) d += " | " + notes_.str() + (failures_ > 3 ? " (and more)" : "");
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  int failures_ = 0;
  std::ostringstream notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome grid_configuration() {
  Checker c;
  RunConfig config;
  config.scene.seed = 1;
  const Scene scene = generate(config.scene);
  const auto t0 = Clock::now();
  const PipelineResult r = run_pipeline(config, scene);
  const double secs = seconds_since(t0);
  std::map<std::string, std::pair<int, int>> shape;
  for (const auto& s : r.stages) shape[s.stage] = {s.nx, s.ny};
  c.expect(shape["detection"] == std::pair{128, 128}, "detection grid is not 128x128");
  c.expect(shape["map"] == std::pair{400, 200}, "map grid is not 400x200");
  c.expect(shape["motion"] == std::pair{200, 200}, "motion grid is not 200x200");
  c.expect(secs < 1.0, "pipeline took " + fmt("%.3f", secs) + " s");
  return c.done("stages 128x128, 400x200, 200x200; pipeline " + fmt("%.3f", secs) + " s");
}

Outcome lift_pool_oracle() {
  Checker c;
  std::mt19937_64 rng(20240501);
  const auto t0 = Clock::now();
  double worst_mass = 0.0;
  std::size_t largest = 0;
  int populated = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto lc = fixture::random_lift_case(rng, 10000);
    const auto& fm = lc.features;
    largest = std::max(largest, static_cast<std::size_t>(fm.cameras()) * fm.dims().height *
                                    fm.dims().width * fm.depth_bins());
    const BEVGrid pooled = pillar_pool(lift(lc.features, lc.bins, lc.rig), lc.spec);
    const auto ref = oracle::lift_pool(lc.features, lc.bins, lc.rig, lc.spec);
    populated += ref.in_extent_abs_sum > 0.0;
    const auto got = pooled.data();
    bool same = got.size() == ref.cells.size();
    for (std::size_t k = 0; same && k < got.size(); ++k) {
      same = std::bit_cast<std::uint32_t>(got[k]) == std::bit_cast<std::uint32_t>(ref.cells[k]);
    }
    c.expect(same, "case " + std::to_string(trial) + " differs from the oracle");
    const double rel = std::abs(pooled.total() - ref.in_extent_sum) /
                       std::max(1.0, ref.in_extent_abs_sum);
    worst_mass = std::max(worst_mass, rel);
    c.expect(rel <= 1e-5, "case " + std::to_string(trial) + " loses mass");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, "took " + fmt("%.1f", secs) + " s");
  return c.done("100 cases bitwise (largest " + std::to_string(largest) +
                " points, " +
                std::to_string(populated) + " with pooled mass); worst mass error " + fmt("%.2e", worst_mass) + "; " +
                fmt("%.2f", secs) + " s");
}

Outcome alignment_exactness() {
  Checker c;
  std::mt19937_64 rng(31);
  const GridSpec spec = GridSpec::make(-8, 8, -8, 8, 0.5);
  std::uniform_int_distribution<int> cells(-6, 6), turns(0, 3);
  const double half_pi = std::numbers::pi / 2;
  for (int trial = 0; trial < 100; ++trial) {
    const BEVGrid g = fixture::random_grid(rng, spec, 3);
    const int di = cells(rng), dj = cells(rng), q = turns(rng);
    const EgoPose shift = EgoPose::make(0, dj * 0.5, di * 0.5);
    c.expect(oracle::bitwise_equal(align(g, shift), oracle::shift(g, di, dj)),
             "integer shift mismatch");
    const EgoPose turn = EgoPose::make(q * half_pi, 0, 0);
    c.expect(oracle::bitwise_equal(align(g, turn), oracle::rot90(g, q)), "quarter turn mismatch");
  }

  // Affine field under sub-cell motions.
  double affine_err = 0.0;
  const GridSpec aspec = GridSpec::make(-10, 10, -10, 10, 0.5);
  std::uniform_real_distribution<double> ang(-0.6, 0.6), tr(-1.3, 1.3), coef(-0.5, 0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = coef(rng), b = coef(rng), k = coef(rng);
    BEVGrid g(aspec, 1);
    for (int i = 0; i < g.ny(); ++i) {
      for (int j = 0; j < g.nx(); ++j) {
        g.at(i, j) = static_cast<float>(a * aspec.center_x(j) + b * aspec.center_y(i) + k);
      }
    }
    const EgoPose m = EgoPose::make(ang(rng), tr(rng), tr(rng));
    const BEVGrid out = align(g, m);
    const EgoPose back = inverse(m);
    for (int i = 0; i < g.ny(); ++i) {
      for (int j = 0; j < g.nx(); ++j) {
        double px, py;
        back.apply(aspec.center_x(j), aspec.center_y(i), px, py);
        const double col = aspec.column_of(px), row = aspec.row_of(py);
        if (col < 0 || row < 0 || col > g.nx() - 1 || row > g.ny() - 1) continue;
        // Values are stored in float; compare against the float-rounded field.
        const double want = a * px + b * py + k;
        affine_err = std::max(affine_err, std::abs(out.at(i, j) - want) /
                                              std::max(1.0, std::abs(want)));
      }
    }
  }
  c.expect(affine_err <= 1e-6, "affine error " + fmt("%.2e", affine_err));

  // Composition on a smooth field, away from the borders.
  const GridSpec fine = GridSpec::make(-20, 20, -20, 20, 0.25);
  BEVGrid smooth(fine, 1);
  for (int i = 0; i < fine.ny(); ++i) {
    for (int j = 0; j < fine.nx(); ++j) {
      smooth.at(i, j) = static_cast<float>(std::sin(0.2 * fine.center_x(j)) *
                                           std::cos(0.15 * fine.center_y(i)));
    }
  }
  double comp_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const EgoPose m1 = EgoPose::make(ang(rng) / 2, tr(rng), tr(rng));
    const EgoPose m2 = EgoPose::make(ang(rng) / 2, tr(rng), tr(rng));
    const BEVGrid twice = align(align(smooth, m1), m2);
    const BEVGrid once = align(smooth, compose(m2, m1));
    for (int i = 0; i < fine.ny(); ++i) {
      for (int j = 0; j < fine.nx(); ++j) {
        if (std::hypot(fine.center_x(j), fine.center_y(i)) > 14.0) continue;
        comp_err = std::max(comp_err, std::abs(double(twice.at(i, j)) - once.at(i, j)));
      }
    }
  }
  c.expect(comp_err <= 1e-3, "composition error " + fmt("%.2e", comp_err));
  return c.done("shifts/turns bitwise; affine " + fmt("%.2e", affine_err) + "; composition " +
                fmt("%.2e", comp_err));
}

Outcome rollout_oracle() {
  Checker c;
  const auto t0 = Clock::now();
  int moving_scenes = 0;
  double worst_zero = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SceneConfig sc;
    sc.seed = seed;
    sc.future_frames = 4;
    sc.integer_motion = true;
    const Scene scene = generate(sc);
    const GridSpec& spec = sc.motion_spec;
    if (seed == 1) c.expect(spec.nx() == 200 && spec.ny() == 200, "motion grid is not 200x200");
    const int now = scene.present_index();
    const auto ids = scene_instance_ids(scene);
    if (ids.empty()) continue;
    const BEVGrid initial = instance_channels(scene.instances[now], spec, ids);
    const BEVGrid latent = sample_latent(LatentMap(BEVGrid(spec, 1), BEVGrid(spec, 1)),
                                         std::optional<std::uint64_t>{});
    const std::vector<InstanceSegFrame> gt(scene.instances.begin() + now, scene.instances.end());

    const StepFunction gt_step = [&](const BEVGrid&, const BEVGrid&, int k) {
      return StepOutput{gt_flow(scene, k), std::nullopt};
    };
    auto decode = [&](const StateSequence& seq) {
      std::vector<InstanceSegFrame> out;
      for (const auto& s : seq.states) out.push_back(decode_instance_channels(s, ids));
      return out;
    };
    const auto pred = decode(rollout(initial, latent, gt_step, 4));
    const double v = vpq(pred, gt).score;
    c.expect(v == 1.0, "seed " + std::to_string(seed) + " gt-flow VPQ " + fmt("%.4f", v));
    for (std::size_t t = 0; t < gt.size(); ++t) {
      const double iou = seg_iou(foreground(pred[t]), foreground(gt[t]));
      c.expect(iou == 1.0, "seed " + std::to_string(seed) + " frame IoU " + fmt("%.4f", iou));
    }

    bool moving = false;
    for (const auto& b : scene.boxes[now]) {
      const bool visible = std::any_of(gt.begin(), gt.end(), [&](const InstanceSegFrame& f) {
        return std::find(f.ids.begin(), f.ids.end(), b.id) != f.ids.end();
      });
      moving |= visible && (b.vx != 0.0 || b.vy != 0.0);
    }
    if (moving) {
      ++moving_scenes;
      const double z = vpq(decode(rollout(initial, latent, zero_flow_step(), 4)), gt).score;
      worst_zero = std::max(worst_zero, z);
      c.expect(z < v, "seed " + std::to_string(seed) + " zero-flow VPQ not lower");
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "took " + fmt("%.1f", secs) + " s");
  return c.done("50 scenes gt-flow VPQ 1 and IoU 1; zero-flow lower on " +
                std::to_string(moving_scenes) + " moving scenes (max " + fmt("%.3f", worst_zero) +
                "); " + fmt("%.2f", secs) + " s");
}

Outcome vpq_fidelity() {
  Checker c;
  auto frame = [](std::vector<std::uint32_t> ids) {
    InstanceSegFrame f(1, static_cast<int>(ids.size()));
    f.ids = std::move(ids);
    return f;
  };
  const std::vector<InstanceSegFrame> g1{frame({1, 1, 1, 1, 1, 0})}, p1{frame({0, 0, 4, 4, 4, 0})};
  const double a = vpq(p1, g1).score;
  c.expect(std::abs(a - 0.6) <= 1e-9, "first hand case gave " + fmt("%.12f", a));
  const std::vector<InstanceSegFrame> g2{frame({1, 1, 1, 1, 1, 0, 0, 0})},
      p2{frame({4, 4, 4, 4, 0, 0, 0, 9})};
  const double b = vpq(p2, g2).score;
  c.expect(std::abs(b - 0.8 / 1.5) <= 1e-9, "second hand case gave " + fmt("%.12f", b));

  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = 1 + trial % 3;
    std::vector<InstanceSegFrame> gt, pred;
    for (int t = 0; t < len; ++t) {
      gt.push_back(fixture::random_frame(rng, 6, 6, 4));
      pred.push_back(fixture::perturb_frame(rng, gt.back(), 2));
    }
    const double s = vpq(pred, gt).score;
    c.expect(s >= 0.0 && s <= 1.0, "VPQ out of range");
    c.expect(std::abs(s - oracle::brute_vpq(pred, gt)) <= 1e-12, "brute-force mismatch");
    // A one-cell prediction on background of both sides cannot match anything.
    auto more = pred;
    const int t = trial % len;
    for (std::size_t k = 0; k < more[t].ids.size(); ++k) {
      if (more[t].ids[k] == 0 && gt[t].ids[k] == 0) {
        more[t].ids[k] = 999;
        break;
      }
    }
    c.expect(vpq(more, gt).score <= s, "extra false positive raised VPQ");
  }
  return c.done("hand cases " + fmt("%.9f", a) + ", " + fmt("%.9f", b) +
                "; 1000 random sequences match brute force");
}

Outcome detection_metrics() {
  Checker c;
  std::mt19937_64 rng(4242);
  int differs_from_max_tp = 0, spread_cases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto preds = fixture::random_boxes(rng, 6, 3.0);
    const auto gts = fixture::random_boxes(rng, 6, 3.0);
    const double thr = default_distance_thresholds()[trial % 4];
    const Matching m = match_detections(preds, gts, thr);
    const auto got = oracle::as_assignment(m, preds.size());
    c.expect(got.gt_of_pred == oracle::lexicographic_matching(preds, gts, thr).gt_of_pred,
             "greedy differs from the exhaustive oracle");
    const auto best = oracle::max_tp_min_distance(preds, gts, thr);
    std::size_t best_tp = 0;
    for (int g : best.gt_of_pred) best_tp += g >= 0;
    bool spread = true;
    for (std::size_t x = 0; x < gts.size(); ++x) {
      for (std::size_t y = x + 1; y < gts.size(); ++y) {
        spread &= !(gts[x].label == gts[y].label &&
                    oracle::center_distance(gts[x], gts[y]) <= 2 * thr);
      }
    }
    if (spread) {
      ++spread_cases;
      c.expect(best_tp == m.true_positives.size(), "greedy below max-TP on separated boxes");
    } else if (best_tp != m.true_positives.size()) {
      ++differs_from_max_tp;
    }
  }

  DetectionBox g, p;
  g.label = p.label = "car";
  p.x = 1.5;
  const std::vector<DetectionBox> gs{g}, ps{p};
  for (double thr : {0.5, 1.0}) {
    c.expect(match_detections(ps, gs, thr).true_positives.empty(), "1.5 m should be FP");
  }
  for (double thr : {2.0, 4.0}) {
    c.expect(match_detections(ps, gs, thr).true_positives.size() == 1, "1.5 m should be TP");
  }

  const double n1 = nds(0.4, {0, 0, 0, 0});
  c.expect(std::abs(n1 - (5 * 0.4 + 4) / 9.0) <= 1e-9, "NDS spot value");
  c.expect(std::abs(nds(1.0, {0, 0, 0, 0}) - 1.0) <= 1e-9, "NDS perfect");
  c.expect(std::abs(nds(0.0, {1, 1, 1, 1})) <= 1e-9, "NDS zero");
  return c.done("1000 cases match the exhaustive score-order oracle; max-TP agrees on " +
                std::to_string(spread_cases) + " separated cases (" +
                std::to_string(differs_from_max_tp) + " crowded cases differ); 1.5 m flips; NDS " +
                fmt("%.9f", n1));
}

// ---------------------------------------------------------------------------

int run_command(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir,
                                            const std::function<bool(const fs::path&)>& keep) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || !keep(e.path())) continue;
    files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

Outcome determinism(const std::string& cli) {
  Checker c;
  const fs::path root = fs::temp_directory_path() / "bevkit_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  write_file_atomic(root / "bench.ini", "[bench]\nsizes = 32, 64\nrepetitions = 2\n");

  const auto all = [](const fs::path&) { return true; };
  const auto no_timings = [](const fs::path& p) { return p.filename() != "bench.txt"; };
  std::map<std::string, std::string> scene0, pred0, bench0;
  bool first = true;
  for (const char* threads : {"1", "4"}) {
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path run = root / (std::string("t") + threads + "_" + std::to_string(rep));
      const std::string env = std::string("BEVKIT_THREADS=") + threads + " " + cli;
      c.expect(run_command(env + " synth --seed 7 --out " + (run / "scene").string()) == 0,
               "synth failed");
      c.expect(run_command(env + " pipeline --scene " + (run / "scene").string() + " --out " +
                           (run / "pred").string()) == 0,
               "pipeline failed");
      c.expect(run_command(env + " bench --config " + (root / "bench.ini").string() + " --out " +
                           (run / "bench").string()) == 0,
               "bench failed");
      if (!fs::exists(run / "bench")) continue;
      const auto scene = snapshot(run / "scene", all);
      const auto pred = snapshot(run / "pred", all);
      const auto bench = snapshot(run / "bench", no_timings);
      if (first) {
        scene0 = scene;
        pred0 = pred;
        bench0 = bench;
        first = false;
        c.expect(!scene.empty() && !pred.empty() && bench.count("checksums.txt") == 1,
                 "outputs missing");
        continue;
      }
      const std::string tag = std::string(" (threads ") + threads + ", run " +
                              std::to_string(rep + 1) + ")";
      c.expect(scene == scene0, "scene directory differs" + tag);
      c.expect(pred == pred0, "pipeline outputs differ" + tag);
      c.expect(bench == bench0, "benchmark checksums differ" + tag);
    }
  }
  fs::remove_all(root);
  return c.done("synth, pipeline and bench checksums byte-identical over 2 runs x threads {1,4}");
}

Outcome format_round_trip() {
  Checker c;
  const fs::path dir = fs::temp_directory_path() / "bevkit_acceptance_io";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(88);
  std::uniform_int_distribution<int> dim(1, 40), ch(1, 6);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int trial = 0; trial < 100; ++trial) {
    const int nx = trial == 0 ? 1 : dim(rng);
    const int ny = trial == 0 ? 1 : dim(rng);
    const int nc = trial == 0 ? 1 : ch(rng);
    BEVGrid g(GridSpec::unit(nx, ny), nc);
    for (float& v : g.data()) {
      do {
        v = std::bit_cast<float>(bits(rng));
      } while (!std::isfinite(v));
    }
    if (trial == 1) g.data()[0] = -0.0f;
    const fs::path p = dir / ("g" + std::to_string(trial) + ".bvg");
    write_grid(g, p);
    const BEVGrid back = read_grid(p, g.spec());
    c.expect(oracle::bitwise_equal(back, g), "grid " + std::to_string(trial) + " changed");
  }
  fs::remove_all(dir);
  return c.done("100 grids (random finite bit patterns incl. subnormals and -0, first is 1x1x1) round-trip bitwise");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <bevkit executable>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "grid configuration fidelity", grid_configuration},
      {2, "lift/pool oracle equivalence", lift_pool_oracle},
      {3, "alignment exactness", alignment_exactness},
      {4, "future rollout oracle", rollout_oracle},
      {5, "VPQ fidelity", vpq_fidelity},
      {6, "detection metrics", detection_metrics},
      {7, "determinism", [&] { return determinism(cli); }},
      {8, "format round-trip", format_round_trip},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", cr.number, cr.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
