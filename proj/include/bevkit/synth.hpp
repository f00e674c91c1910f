// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bevkit/box.hpp"
#include "bevkit/eval.hpp"
#include "bevkit/future.hpp"
#include "bevkit/grid.hpp"
#include "bevkit/temporal.hpp"

namespace bevkit {

inline constexpr int kMapClasses = 3;  // divider, pedestrian crossing, boundary
inline constexpr const char* kMapClassNames[kMapClasses] = {"divider", "ped_crossing",
                                                            "boundary"};

struct MapLayout {
  int lane_count = 4;
  double lane_width = 3.5;  // m
  int crossing_count = 2;
  double crossing_depth = 4.0;  // m along x
};

struct SceneConfig {
  std::uint64_t seed = 0;
  int past_frames = 3;  // N, including the present frame
  int future_frames = 4;  // T
  double frame_period = 0.5;  // s
  int agent_count = 8;
  double max_speed = 8.0;  // m/s, vehicles
  double max_pedestrian_speed = 1.5;
  double max_yaw_rate = 0.3;  // rad/s, continuous mode only
  double ego_max_speed = 8.0;
  double ego_max_turn_rate = 0.1;  // rad/s, continuous mode only
  /// Integer mode: axis-aligned boxes with sizes in even cell counts,
  /// centers on cell corners, and velocities of whole cells per frame.
  bool integer_motion = true;
  MapLayout map;
  GridSpec det_spec = detection_grid_spec();
  GridSpec map_spec = map_grid_spec();
  GridSpec motion_spec = motion_grid_spec();

  /// Throws ConfigError for N < 1, T < 1, period <= 0 or negative counts.
  void validate() const;
  /// Canonical "key value" lines, used for hashing and the scene metadata.
  std::string canonical() const;
};

/// Motion state of one agent at the present timestamp (t = 0).
struct AgentState {
  std::uint32_t id = 1;
  std::string label = "car";
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double speed = 0.0;  // along yaw
  double yaw_rate = 0.0;
  double width = 2.0;
  double length = 4.0;
  double height = 1.5;

  /// Box at time t seconds relative to the present (unicycle motion).
  DetectionBox box_at(double t) const;
};

struct EgoMotion {
  double speed = 0.0;
  double yaw_rate = 0.0;

  /// Pose of the ego frame at time t expressed in the present ego frame.
  EgoPose pose_at(double t) const;
};

/// Ground truth for N past frames (the last of which is the present) and T
/// future frames. Boxes, instance rasters and the map live in the present
/// ego frame; ego_poses[k] maps ego frame k into it.
struct Scene {
  SceneConfig config;
  std::vector<double> timestamps;  // seconds relative to the present
  std::vector<std::vector<DetectionBox>> boxes;
  std::vector<EgoPose> ego_poses;
  std::vector<InstanceSegFrame> instances;  // on config.motion_spec
  BEVGrid map;                               // on config.map_spec, kMapClasses channels

  int present_index() const { return config.past_frames - 1; }
  int frame_count() const { return static_cast<int>(timestamps.size()); }
};

/// Samples agents and an ego trajectory from the seeded generator. Throws
/// GenerationError when the agents cannot be placed without overlap.
Scene generate(const SceneConfig& config);

/// Builds a scene from explicit agent and ego states.
Scene build_scene(const SceneConfig& config, std::span<const AgentState> agents,
                  const EgoMotion& ego);

/// Paints each box id into the cells whose centers fall inside its
/// footprint; the footprint is half-open ([-l/2, l/2) x [-w/2, w/2) in box
/// coordinates) and later boxes overwrite earlier ones.
InstanceSegFrame rasterize_boxes(std::span<const DetectionBox> boxes, const GridSpec& spec);

/// Ids as a one-channel float grid and back (ids must stay below 2^24).
BEVGrid labels_to_grid(const InstanceSegFrame& frame, const GridSpec& spec);
InstanceSegFrame grid_to_labels(const BEVGrid& grid);

/// One channel per id (1 inside the instance), channel k holding ids[k].
BEVGrid instance_channels(const InstanceSegFrame& frame, const GridSpec& spec,
                          std::span<const std::uint32_t> ids);
/// Inverse of instance_channels: each cell takes the id of its largest
/// channel when that channel exceeds 0.5, otherwise background.
InstanceSegFrame decode_instance_channels(const BEVGrid& state,
                                          std::span<const std::uint32_t> ids);

/// Backward flow (cells) from future step k to k+1, k in [0, T): each cell of
/// an instance at k+1 points back to where that body point was at k. Cells
/// an instance vacates follow that instance's motion too (which lands on
/// background); all other background cells carry zero flow.
FlowField gt_flow(const Scene& scene, int step);

/// Rasterized map classes for the layout on `spec`.
BEVGrid rasterize_map(const MapLayout& layout, const GridSpec& spec, std::uint64_t seed);

/// Ids of all agents visible in any frame, ascending.
std::vector<std::uint32_t> scene_instance_ids(const Scene& scene);

// Scene directories: scene.txt (metadata, pose and box records),
// frame_XX.bvg (instance ids per timestamp), map.bvg.
void write_scene(const Scene& scene, const std::filesystem::path& dir);
Scene read_scene(const std::filesystem::path& dir);

/// FNV-1a 64-bit hash, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace bevkit
