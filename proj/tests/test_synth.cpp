// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "bevkit/errors.hpp"
#include "bevkit/future.hpp"
#include "bevkit/synth.hpp"
#include "oracles.hpp"

using namespace bevkit;
namespace fs = std::filesystem;

namespace {

DetectionBox rect(double x, double y, double length, double width, std::uint32_t id,
                  double yaw = 0.0) {
  DetectionBox b;
  b.x = x;
  b.y = y;
  b.length = length;
  b.width = width;
  b.yaw = yaw;
  b.id = id;
  return b;
}

std::size_t count_id(const InstanceSegFrame& f, std::uint32_t id) {
  std::size_t n = 0;
  for (auto v : f.ids) n += v == id;
  return n;
}

double centroid_column(const InstanceSegFrame& f, std::uint32_t id) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int i = 0; i < f.ny; ++i) {
    for (int j = 0; j < f.nx; ++j) {
      if (f.at(i, j) == id) {
        sum += j;
        ++n;
      }
    }
  }
  return sum / static_cast<double>(n);
}

SceneConfig small_config(std::uint64_t seed) {
  SceneConfig c;
  c.seed = seed;
  c.agent_count = 6;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bevkit_test_synth_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("rasterize boxes") {
  const GridSpec spec = GridSpec::make(-10, 10, -10, 10, 0.5);
  const std::vector<DetectionBox> one{rect(1.0, -2.0, 4.0, 2.0, 3)};
  CHECK(count_id(rasterize_boxes(one, spec), 3) == 32);
  const std::vector<DetectionBox> outside{rect(40.0, 0.0, 4.0, 2.0, 3)};
  CHECK(count_id(rasterize_boxes(outside, spec), 3) == 0);

  const std::vector<DetectionBox> overlap{rect(0, 0, 4, 2, 1), rect(1, 0, 4, 2, 2)};
  const InstanceSegFrame f = rasterize_boxes(overlap, spec);
  CHECK(count_id(f, 2) == 32);
  CHECK(count_id(f, 1) == 8);
  int ri = 0, rj = 0;
  REQUIRE(spec.locate(0.25, 0.25, ri, rj));
  CHECK(f.at(ri, rj) == 2);

  // A quarter-turned box paints the transposed footprint.
  const std::vector<DetectionBox> turned{rect(0, 0, 4, 2, 5, std::numbers::pi / 2)};
  const InstanceSegFrame t = rasterize_boxes(turned, spec);
  CHECK(count_id(t, 5) == 32);
  REQUIRE(spec.locate(0.25, 1.75, ri, rj));
  CHECK(t.at(ri, rj) == 5);
}

TEST_CASE("rasterize commutes with grid flips") {
  const GridSpec spec = GridSpec::make(-8, 8, -8, 8, 0.5);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(-7, 7), size(0.6, 4.0), yaw(-3.1, 3.1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DetectionBox> boxes, mirrored_x, mirrored_y;
    for (std::uint32_t id = 1; id <= 4; ++id) {
      const DetectionBox b = rect(pos(rng), pos(rng), size(rng), size(rng), id, yaw(rng));
      boxes.push_back(b);
      DetectionBox mx = b;
      mx.x = -b.x;
      mx.yaw = std::numbers::pi - b.yaw;
      mirrored_x.push_back(mx);
      DetectionBox my = b;
      my.y = -b.y;
      my.yaw = -b.yaw;
      mirrored_y.push_back(my);
    }
    const BEVGrid base = labels_to_grid(rasterize_boxes(boxes, spec), spec);
    CHECK(oracle::bitwise_equal(labels_to_grid(rasterize_boxes(mirrored_x, spec), spec),
                                oracle::flip_columns(base)));
    CHECK(oracle::bitwise_equal(labels_to_grid(rasterize_boxes(mirrored_y, spec), spec),
                                oracle::flip_rows(base)));
  }
}

TEST_CASE("label grids and instance channels") {
  InstanceSegFrame f(2, 3);
  f.ids = {0, 4, 4, 9, 0, 4};
  const GridSpec spec = GridSpec::unit(3, 2);
  CHECK(grid_to_labels(labels_to_grid(f, spec)) == f);
  BEVGrid bad = labels_to_grid(f, spec);
  bad.at(0, 0) = 0.5f;
  CHECK_THROWS_AS(grid_to_labels(bad), FormatError);

  const std::vector<std::uint32_t> ids{4, 9};
  const BEVGrid ch = instance_channels(f, spec, ids);
  CHECK(ch.channels() == 2);
  CHECK(ch.at(0, 1, 0) == 1.0f);
  CHECK(ch.at(1, 0, 1) == 1.0f);
  CHECK(decode_instance_channels(ch, ids) == f);
  const std::vector<std::uint32_t> missing{4};
  CHECK_THROWS_AS(instance_channels(f, spec, missing), ContractError);
}

TEST_CASE("one agent advances one cell per frame") {
  SceneConfig c;
  c.agent_count = 0;
  AgentState a;
  a.id = 1;
  a.x = 0.0;
  a.y = 0.0;
  a.speed = 1.0;  // m/s with 0.5 s frames on a 0.5 m grid
  const std::vector<AgentState> agents{a};
  const Scene s = build_scene(c, agents, EgoMotion{});
  REQUIRE(s.frame_count() == c.past_frames + c.future_frames);
  for (int k = 1; k < s.frame_count(); ++k) {
    CHECK(centroid_column(s.instances[k], 1) - centroid_column(s.instances[k - 1], 1) == 1.0);
  }
  const DetectionBox& now = s.boxes[s.present_index()][0];
  CHECK(now.vx == 1.0);
  CHECK(now.vy == 0.0);

  const FlowField f = gt_flow(s, 0);
  const InstanceSegFrame& dst = s.instances[s.present_index() + 1];
  for (int i = 0; i < f.ny(); ++i) {
    for (int j = 0; j < f.nx(); ++j) {
      if (dst.at(i, j) == 1) {
        CHECK(f.dx(i, j) == 1.0f);
        CHECK(f.dy(i, j) == 0.0f);
      }
    }
  }
  CHECK(f.dx(0, 0) == 0.0f);
  CHECK_THROWS_AS(gt_flow(s, c.future_frames), ContractError);

  AgentState still = a;
  still.speed = 0.0;
  const std::vector<AgentState> parked{still};
  const Scene p = build_scene(c, parked, EgoMotion{});
  const FlowField z = gt_flow(p, 1);
  for (float v : z.grid().values()) CHECK(v == 0.0f);
}

TEST_CASE("zero agents") {
  SceneConfig c;
  c.agent_count = 0;
  const Scene s = generate(c);
  SceneConfig busy = c;
  busy.agent_count = 5;
  const Scene t = generate(busy);
  for (int k = 0; k < s.frame_count(); ++k) {
    CHECK(s.boxes[k].empty());
    CHECK(oracle::ids_of(s.instances[k]).empty());
  }
  CHECK(oracle::bitwise_equal(s.map, t.map));
  CHECK(s.map.total() > 0.0);
}

TEST_CASE("generated scenes: determinism, persistence and flow round trip") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const SceneConfig c = small_config(seed);
    const Scene a = generate(c);
    const Scene b = generate(c);
    REQUIRE(a.frame_count() == 7);
    for (int k = 0; k < a.frame_count(); ++k) {
      CHECK(a.boxes[k] == b.boxes[k]);
      CHECK(a.instances[k] == b.instances[k]);
      CHECK(a.ego_poses[k] == b.ego_poses[k]);
    }
    CHECK(oracle::bitwise_equal(a.map, b.map));

    const GridSpec& spec = c.motion_spec;
    for (int k = a.present_index(); k + 1 < a.frame_count(); ++k) {
      const auto now = oracle::ids_of(a.instances[k]);
      const std::set<std::uint32_t> known(now.begin(), now.end());
      for (std::uint32_t id : oracle::ids_of(a.instances[k + 1])) CHECK(known.count(id) == 1);

      const int step = k - a.present_index();
      const BEVGrid warped = flow_warp(labels_to_grid(a.instances[k], spec), gt_flow(a, step));
      CHECK(grid_to_labels(warped) == a.instances[k + 1]);
    }
  }
}

TEST_CASE("overfull scenes fail to generate") {
  SceneConfig c;
  c.motion_spec = GridSpec::make(-5, 5, -5, 5, 0.5);
  c.agent_count = 200;  // more than the area bound allows
  CHECK_THROWS_AS(generate(c), GenerationError);
  c.agent_count = 30;  // passes the area bound, fails placement
  CHECK_THROWS_AS(generate(c), GenerationError);
  SceneConfig bad;
  bad.future_frames = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SceneConfig{};
  bad.frame_period = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("scene directory round trip") {
  const Scene s = generate(small_config(4));
  const fs::path dir = scratch("roundtrip");
  write_scene(s, dir);
  std::size_t rasters = 0;
  for (const auto& e : fs::directory_iterator(dir)) rasters += e.path().extension() == ".bvg";
  CHECK(rasters == static_cast<std::size_t>(s.frame_count()) + 1);

  const Scene r = read_scene(dir);
  CHECK(r.config.canonical() == s.config.canonical());
  CHECK(r.timestamps == s.timestamps);
  CHECK(r.ego_poses == s.ego_poses);
  CHECK(r.boxes == s.boxes);
  CHECK(r.instances == s.instances);
  CHECK(oracle::bitwise_equal(r.map, s.map));

  {
    std::ofstream out(dir / "scene.txt", std::ios::app);
    out << "box 0 nonsense\n";
  }
  CHECK_THROWS_AS(read_scene(dir), FormatError);
  fs::remove_all(dir);
  CHECK_THROWS(read_scene(dir));
}

TEST_CASE("fnv1a") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
