// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

// Subcommands behind the bevkit executable. Each one writes its data to
// files under an output directory; summaries go to `log`.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "bevkit/box.hpp"
#include "bevkit/eval.hpp"
#include "bevkit/geometry.hpp"
#include "bevkit/grid.hpp"
#include "bevkit/synth.hpp"

namespace bevkit {

struct RigConfig {
  int cameras = 6;
  int image_width = 704;
  int image_height = 256;
  int stride = 16;
  double fov_deg = 70.0;  // horizontal
  double mount_height = 1.5;  // m above the ego origin
};

struct DepthConfig {
  double d_min = 1.0;
  double d_max = 60.0;
  int bins = 59;
};

struct PipelineConfig {
  std::string step = "gt";  // "gt" or "zero"
  int latent_dim = 32;
  double latent_log_variance = -4.0;
  double nms_threshold = 1.0;  // m, on scaled centers
  std::map<std::string, double> nms_scale = {{"car", 1.0}, {"truck", 0.7}, {"pedestrian", 2.5}};
  double box_jitter = 0.15;  // m, std-dev of stand-in detection noise
  int false_positives = 3;
};

struct BenchConfig {
  std::vector<int> sizes = {64, 128, 256};
  int repetitions = 5;
};

/// Everything a run depends on. Grid specs live inside `scene`.
struct RunConfig {
  SceneConfig scene;
  RigConfig rig;
  DepthConfig depth;
  PipelineConfig pipeline;
  BenchConfig bench;

  void validate() const;
  std::string canonical() const;
};

/// INI-style file: [section] headers and `key = value` lines, '#' or ';'
/// comments. Sections: scene, map, det_grid, map_grid, motion_grid, rig,
/// depth, pipeline, bench. Unknown sections or keys raise ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);

CameraRig make_rig(const RigConfig& rig);
DepthBins make_depth_bins(const DepthConfig& depth);

// ---------------------------------------------------------------------------

/// Writes the scene directory (scene.txt, frame_XX.bvg, map.bvg).
Scene cmd_synth(const RunConfig& config, const std::filesystem::path& out,
                std::ostream& log);

struct StageShape {
  std::string stage;
  int nx = 0;
  int ny = 0;
  int channels = 0;
};

struct Predictions {
  std::vector<DetectionBox> detections;  // present frame
  BEVGrid map{GridSpec::unit(1, 1), kMapClasses};  // map spec in practice
  std::vector<InstanceSegFrame> future;   // present .. present + T
};

struct PipelineResult {
  std::vector<StageShape> stages;
  Predictions predictions;
  std::vector<MetricRow> metrics;
};

/// lift -> pool -> align -> fuse -> sample per task -> decode with GT-driven
/// stand-ins -> evaluate. Writes metrics.csv, summary.txt, pred_XX.bvg,
/// pred_map.bvg, detections.txt and manifest.txt under `out`.
PipelineResult run_pipeline(const RunConfig& config, const Scene& scene);
PipelineResult cmd_pipeline(const RunConfig& config, const std::filesystem::path& scene_dir,
                            const std::filesystem::path& out, std::ostream& log);

/// Scores predictions against the scene ground truth.
std::vector<MetricRow> evaluate_predictions(const Scene& scene, const Predictions& pred);

/// Re-evaluates a prediction directory written by cmd_pipeline.
std::vector<MetricRow> cmd_eval(const std::filesystem::path& scene_dir,
                                const std::filesystem::path& pred_dir,
                                const std::filesystem::path& out, std::ostream& log);

struct BenchRow {
  std::string op;
  int size = 0;
  std::vector<double> seconds;
  std::string checksum;
  double median() const;
  double p95() const;
};

/// Times pillar_pool, align, flow_warp and grid_sample. Throws Error when
/// repetitions disagree bitwise. Writes bench.txt (timings) and
/// checksums.txt under `out`.
std::vector<BenchRow> cmd_bench(const RunConfig& config, const std::filesystem::path& out,
                                std::ostream& log);

/// Dumps one channel of a grid as whitespace text or as an ASCII PGM.
void cmd_dump(const std::filesystem::path& grid, const std::filesystem::path& out,
              const std::string& format, int channel);

void write_detections(std::span<const DetectionBox> boxes, const std::filesystem::path& path);
std::vector<DetectionBox> read_detections(const std::filesystem::path& path);

}  // namespace bevkit
