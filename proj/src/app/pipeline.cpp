// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "bevkit/app.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/future.hpp"
#include "bevkit/grid_io.hpp"
#include "bevkit/temporal.hpp"

namespace bevkit {
namespace {

constexpr int kFeatureChannels = 2;  // objectness, constant

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pred_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "pred_%02d.bvg", k);
  return buf;
}

// Ray parameter (depth along the optical axis) where a camera ray first
// enters the box, or +inf. `o` and `d` are the ray origin and per-unit-depth
// direction in ego coordinates.
double ray_box_depth(const Vec3& o, const Vec3& d, const DetectionBox& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double ox = c * (o[0] - b.x) + s * (o[1] - b.y);
  const double oy = -s * (o[0] - b.x) + c * (o[1] - b.y);
  const double dx = c * d[0] + s * d[1];
  const double dy = -s * d[0] + c * d[1];
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  const double o2[2] = {ox, oy};
  const double d2[2] = {dx, dy};
  const double half[2] = {0.5 * b.length, 0.5 * b.width};
  for (int a = 0; a < 2; ++a) {
    if (d2[a] == 0.0) {
      if (std::abs(o2[a]) > half[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t0 = (-half[a] - o2[a]) / d2[a];
    double t1 = (half[a] - o2[a]) / d2[a];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  if (lo > hi || lo <= 0.0) return std::numeric_limits<double>::infinity();
  const double z = o[2] + d[2] * lo;
  if (z < 0.0 || z > b.height) return std::numeric_limits<double>::infinity();
  return lo;
}

// Stand-in for the image encoder: one-hot depth where a pixel ray hits a
// ground-truth box, uniform depth and zero objectness elsewhere.
FeatureMap synthetic_features(const CameraRig& rig, const FeatureDims& dims,
                              const DepthBins& bins, std::span<const DetectionBox> boxes) {
  const int M = static_cast<int>(rig.size());
  const int D = bins.count();
  const std::size_t pixels = static_cast<std::size_t>(M) * dims.height * dims.width;
  std::vector<float> features(pixels * kFeatureChannels);
  std::vector<float> depth(pixels * D);
  std::size_t p = 0;
  for (int m = 0; m < M; ++m) {
    const Camera& cam = rig[m];
    const auto& K = cam.intrinsics;
    const Mat3& R = cam.rotation;
    for (int r = 0; r < dims.height; ++r) {
      for (int col = 0; col < dims.width; ++col, ++p) {
        const double u = (col + 0.5) * dims.stride;
        const double v = (r + 0.5) * dims.stride;
        const Vec3 ray = {(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
        Vec3 dir{};
        for (int i = 0; i < 3; ++i) {
          dir[i] = R[i * 3] * ray[0] + R[i * 3 + 1] * ray[1] + R[i * 3 + 2] * ray[2];
        }
        double hit = std::numeric_limits<double>::infinity();
        for (const auto& b : boxes) hit = std::min(hit, ray_box_depth(cam.translation, dir, b));
        float* dist = depth.data() + p * D;
        float* feat = features.data() + p * kFeatureChannels;
        feat[1] = 1.0f;
        if (hit >= bins.d_min() && hit < bins.d_max()) {
          dist[bins.nearest(hit)] = 1.0f;
          feat[0] = 1.0f;
        } else {
          std::fill(dist, dist + D, 1.0f / static_cast<float>(D));
        }
      }
    }
  }
  return FeatureMap(M, dims, kFeatureChannels, D, std::move(features), std::move(depth));
}

std::vector<DetectionBox> to_frame(std::span<const DetectionBox> boxes, const EgoPose& pose) {
  // Boxes are stored in the present frame; pose maps frame k to the present.
  const EgoPose back = inverse(pose);
  std::vector<DetectionBox> out(boxes.begin(), boxes.end());
  for (auto& b : out) {
    back.apply(b.x, b.y, b.x, b.y);
    b.yaw = wrap_angle(b.yaw + back.theta);
  }
  return out;
}

std::vector<DetectionBox> in_extent(std::span<const DetectionBox> boxes, const GridSpec& spec) {
  std::vector<DetectionBox> out;
  for (const auto& b : boxes) {
    if (spec.contains(b.x, b.y)) out.push_back(b);
  }
  return out;
}

// Stand-in for the detection head: jittered copies of the ground truth, a
// lower-scored duplicate of each, and a few low-score false positives.
std::vector<DetectionBox> standin_detections(const RunConfig& config,
                                             std::span<const DetectionBox> gts,
                                             const GridSpec& spec) {
  std::mt19937_64 rng(config.scene.seed ^ 0xd1b54a32d192ed03ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double jitter = config.pipeline.box_jitter;
  std::vector<DetectionBox> raw;
  for (const auto& g : gts) {
    DetectionBox p = g;
    p.x += jitter * noise(rng);
    p.y += jitter * noise(rng);
    p.yaw = wrap_angle(p.yaw + 0.05 * noise(rng));
    p.vx += 0.2 * noise(rng);
    p.vy += 0.2 * noise(rng);
    p.score = 0.5 + 0.5 * unit(rng);
    DetectionBox dup = p;
    dup.x += jitter * noise(rng);
    dup.y += jitter * noise(rng);
    dup.score = 0.5 * p.score;
    raw.push_back(p);
    raw.push_back(dup);
  }
  static const char* kLabels[] = {"car", "truck", "pedestrian"};
  for (int k = 0; k < config.pipeline.false_positives; ++k) {
    DetectionBox fp;
    fp.label = kLabels[k % 3];
    fp.x = spec.x_min() + (spec.x_max() - spec.x_min()) * unit(rng);
    fp.y = spec.y_min() + (spec.y_max() - spec.y_min()) * unit(rng);
    fp.width = 2.0;
    fp.length = 4.0;
    fp.height = 1.5;
    fp.score = 0.05 + 0.25 * unit(rng);
    raw.push_back(fp);
  }
  return bev_nms(raw, config.pipeline.nms_scale, config.pipeline.nms_threshold);
}

void require_same(const GridSpec& want, const GridSpec& got, const std::string& stage) {
  if (!(want == got)) {
    throw ContractError("pipeline stage '" + stage + "': scene grid " + got.to_string() +
                        " does not match configured grid " + want.to_string());
  }
}

std::string manifest(const std::string& command, const RunConfig& run, const Scene& scene,
                     std::span<const StageShape> stages) {
  // Scene parameters come from the scene itself; only the detection grid is
  // free to differ from the one it was generated with.
  RunConfig config = run;
  config.scene = scene.config;
  config.scene.det_spec = run.scene.det_spec;
  std::ostringstream os;
  os << "# bevkit run manifest\n"
     << "command " << command << '\n'
     << "grid_format BVG1\n"
     << "nds_divisor " << kNdsDivisor << " (no attribute error)\n"
     << "seed " << scene.config.seed << '\n'
     << "config_hash " << fnv1a_hex(config.canonical()) << '\n'
     << "scene_config_hash " << fnv1a_hex(scene.config.canonical()) << '\n';
  for (const auto& s : stages) {
    os << "stage " << s.stage << ' ' << s.nx << 'x' << s.ny << 'x' << s.channels << '\n';
  }
  std::istringstream cfg(config.canonical());
  for (std::string line; std::getline(cfg, line);) os << "config " << line << '\n';
  return os.str();
}

std::string summary(std::span<const MetricRow> rows) {
  std::ostringstream os;
  for (const auto& r : rows) {
    if (!r.cls.empty() || r.threshold) continue;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-16s %.6f\n", r.metric.c_str(), r.value);
    os << buf;
  }
  return os.str();
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const Scene& scene) {
  config.validate();
  const SceneConfig& sc = scene.config;
  require_same(config.scene.map_spec, sc.map_spec, "map");
  require_same(config.scene.motion_spec, sc.motion_spec, "motion");
  const GridSpec& det_spec = config.scene.det_spec;
  const int N = sc.past_frames;
  const int T = sc.future_frames;
  const int present = scene.present_index();
  if (scene.frame_count() != N + T) {
    throw ContractError("pipeline stage 'input': scene has " + std::to_string(scene.frame_count()) +
                        " frames, expected N+T = " + std::to_string(N + T));
  }

  PipelineResult result;
  const CameraRig rig = make_rig(config.rig);
  const DepthBins bins = make_depth_bins(config.depth);
  const FeatureDims dims{config.rig.image_height / config.rig.stride,
                         config.rig.image_width / config.rig.stride, config.rig.stride};

  // Lift and pool every past frame in its own ego frame.
  std::vector<BEVGrid> pooled;
  for (int k = 0; k < N; ++k) {
    const auto boxes = to_frame(scene.boxes[k], scene.ego_poses[k]);
    const FeatureMap fm = synthetic_features(rig, dims, bins, boxes);
    pooled.push_back(pillar_pool(lift(fm, bins, rig), det_spec));
  }

  // Relative motions k -> k+1, composed into direct motions to the present.
  std::vector<EgoPose> steps;
  for (int k = 0; k + 1 < N; ++k) {
    steps.push_back(compose(inverse(scene.ego_poses[k + 1]), scene.ego_poses[k]));
  }
  const auto direct = compose_to_present(steps);
  const auto aligned = align_sequence(pooled, direct);

  // Stand-in temporal encoder: mean over the aligned frames.
  BEVGrid fused(det_spec, kFeatureChannels);
  {
    auto out = fused.data();
    for (const auto& g : aligned) {
      auto in = g.data();
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
    }
    for (float& v : out) v /= static_cast<float>(N);
  }
  result.stages.push_back({"bev", fused.nx(), fused.ny(), fused.channels()});

  const BEVGrid det_features = grid_sample(fused, det_spec);
  const BEVGrid map_features = grid_sample(fused, sc.map_spec);
  const BEVGrid motion_features = grid_sample(fused, sc.motion_spec);
  result.stages.push_back({"detection", det_features.nx(), det_features.ny(), det_features.channels()});
  result.stages.push_back({"map", map_features.nx(), map_features.ny(), map_features.channels()});
  result.stages.push_back({"motion", motion_features.nx(), motion_features.ny(), motion_features.channels()});

  Predictions& pred = result.predictions;
  pred.detections =
      standin_detections(config, in_extent(scene.boxes[present], det_spec), det_spec);
  pred.map = grid_sample(scene.map, sc.map_spec);

  // Motion: initial state from the present instances, latent drawn around the
  // motion-stage features, rolled out T steps.
  std::vector<std::uint32_t> ids = scene_instance_ids(scene);
  if (ids.empty()) ids.push_back(1);  // one empty channel keeps the state well-formed
  const BEVGrid initial = instance_channels(scene.instances[present], sc.motion_spec, ids);
  const int L = config.pipeline.latent_dim;
  BEVGrid mean(sc.motion_spec, L);
  for (int i = 0; i < mean.ny(); ++i) {
    for (int j = 0; j < mean.nx(); ++j) {
      for (int l = 0; l < L; ++l) {
        mean.at(i, j, l) = motion_features.at(i, j, l % motion_features.channels());
      }
    }
  }
  BEVGrid log_var(sc.motion_spec, L);
  for (float& v : log_var.data()) v = static_cast<float>(config.pipeline.latent_log_variance);
  const BEVGrid latent = sample_latent(LatentMap(mean, log_var), sc.seed);
  StepFunction step = zero_flow_step();
  if (config.pipeline.step == "gt") {
    step = [&scene](const BEVGrid&, const BEVGrid&, int k) {
      return StepOutput{gt_flow(scene, k), std::nullopt};
    };
  }
  const StateSequence seq = rollout(initial, latent, step, T);
  for (const auto& s : seq.states) pred.future.push_back(decode_instance_channels(s, ids));

  result.metrics = evaluate_predictions(scene, pred);
  return result;
}

std::vector<MetricRow> evaluate_predictions(const Scene& scene, const Predictions& pred) {
  const SceneConfig& sc = scene.config;
  const int present = scene.present_index();
  const int T = sc.future_frames;
  std::vector<MetricRow> rows;

  const auto gts = in_extent(scene.boxes[present], sc.det_spec);
  const DetectionMetrics det = evaluate_detections(pred.detections, gts);
  for (const auto& [cls, by_thr] : det.ap) {
    for (const auto& [thr, ap] : by_thr) rows.push_back({"ap", cls, thr, ap});
  }
  rows.push_back({"map", "", std::nullopt, det.map});
  rows.push_back({"ate", "", std::nullopt, det.errors.ate});
  rows.push_back({"ase", "", std::nullopt, det.errors.ase});
  rows.push_back({"aoe", "", std::nullopt, det.errors.aoe});
  rows.push_back({"ave", "", std::nullopt, det.errors.ave});
  rows.push_back({"nds", "", std::nullopt, det.nds});

  if (!(pred.map.spec() == scene.map.spec()) || pred.map.channels() != kMapClasses) {
    throw ContractError("evaluate: predicted map does not match the scene map grid");
  }
  double miou = 0.0;
  for (int c = 0; c < kMapClasses; ++c) {
    const double iou = seg_iou(mask_from_channel(pred.map, c), mask_from_channel(scene.map, c));
    rows.push_back({"map_iou", kMapClassNames[c], std::nullopt, iou});
    miou += iou;
  }
  rows.push_back({"miou", "", std::nullopt, miou / kMapClasses});

  if (static_cast<int>(pred.future.size()) != T + 1) {
    throw ContractError("evaluate: expected " + std::to_string(T + 1) +
                        " future frames, got " + std::to_string(pred.future.size()));
  }
  const std::vector<InstanceSegFrame> gt_future(scene.instances.begin() + present,
                                                scene.instances.end());
  rows.push_back({"vpq", "", std::nullopt, vpq(pred.future, gt_future).score});
  for (const auto& [name, range] : {std::pair{"vpq_short", kShortRange},
                                    std::pair{"vpq_long", kLongRange}}) {
    std::vector<InstanceSegFrame> p, g;
    for (int k = 0; k <= T; ++k) {
      p.push_back(crop_centered(pred.future[k], sc.motion_spec, range, range));
      g.push_back(crop_centered(gt_future[k], sc.motion_spec, range, range));
    }
    rows.push_back({name, "", std::nullopt, vpq(p, g).score});
    double iou = 0.0;
    for (int k = 0; k <= T; ++k) iou += seg_iou(foreground(p[k]), foreground(g[k]));
    rows.push_back({std::string("iou") + (range == kShortRange ? "_short" : "_long"), "",
                    std::nullopt, iou / (T + 1)});
  }
  double iou_sum = 0.0;
  for (int k = 0; k <= T; ++k) {
    const double iou = seg_iou(foreground(pred.future[k]), foreground(gt_future[k]));
    rows.push_back({"future_iou", "t+" + std::to_string(k), std::nullopt, iou});
    iou_sum += iou;
  }
  rows.push_back({"future_iou_mean", "", std::nullopt, iou_sum / (T + 1)});
  return rows;
}

void write_detections(std::span<const DetectionBox> boxes, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "# box <id> <label> <x> <y> <z> <width> <length> <height> <yaw> <vx> <vy> <score>\n";
  for (const auto& b : boxes) {
    os << "box " << b.id << ' ' << b.label << ' ' << num(b.x) << ' ' << num(b.y) << ' '
       << num(b.z) << ' ' << num(b.width) << ' ' << num(b.length) << ' ' << num(b.height)
       << ' ' << num(b.yaw) << ' ' << num(b.vx) << ' ' << num(b.vy) << ' ' << num(b.score)
       << '\n';
  }
  write_file_atomic(path, os.str());
}

std::vector<DetectionBox> read_detections(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<DetectionBox> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    DetectionBox b;
    ls >> kind >> b.id >> b.label >> b.x >> b.y >> b.z >> b.width >> b.length >> b.height >>
        b.yaw >> b.vx >> b.vy >> b.score;
    std::string extra;
    if (kind != "box" || ls.fail() || (ls >> extra)) {
      throw FormatError(path.string() + " line " + std::to_string(line_no) +
                        ": expected a box record with 12 fields");
    }
    out.push_back(b);
  }
  return out;
}

PipelineResult cmd_pipeline(const RunConfig& config, const std::filesystem::path& scene_dir,
                            const std::filesystem::path& out, std::ostream& log) {
  const Scene scene = read_scene(scene_dir);
  PipelineResult result = run_pipeline(config, scene);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());

  const Predictions& pred = result.predictions;
  for (std::size_t k = 0; k < pred.future.size(); ++k) {
    write_grid(labels_to_grid(pred.future[k], scene.config.motion_spec),
               out / pred_name(static_cast<int>(k)));
  }
  write_grid(pred.map, out / "pred_map.bvg");
  write_detections(pred.detections, out / "detections.txt");
  write_file_atomic(out / "metrics.csv", metrics_csv(result.metrics));
  write_file_atomic(out / "manifest.txt", manifest("pipeline", config, scene, result.stages));

  for (const auto& s : result.stages) {
    log << "stage " << s.stage << ": " << s.nx << 'x' << s.ny << 'x' << s.channels << '\n';
  }
  const std::string text = summary(result.metrics);
  write_file_atomic(out / "summary.txt", text);
  log << text;
  return result;
}

std::vector<MetricRow> cmd_eval(const std::filesystem::path& scene_dir,
                                const std::filesystem::path& pred_dir,
                                const std::filesystem::path& out, std::ostream& log) {
  const Scene scene = read_scene(scene_dir);
  const GridSpec& motion = scene.config.motion_spec;
  Predictions pred{read_detections(pred_dir / "detections.txt"),
                   read_grid(pred_dir / "pred_map.bvg", scene.config.map_spec),
                   {}};
  for (int k = 0; k <= scene.config.future_frames; ++k) {
    pred.future.push_back(grid_to_labels(read_grid(pred_dir / pred_name(k), motion)));
  }
  const auto rows = evaluate_predictions(scene, pred);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  write_file_atomic(out / "metrics.csv", metrics_csv(rows));
  RunConfig config;
  config.scene.det_spec = scene.config.det_spec;
  write_file_atomic(out / "manifest.txt", manifest("eval", config, scene, {}));
  const std::string text = summary(rows);
  write_file_atomic(out / "summary.txt", text);
  log << text;
  return rows;
}

Scene cmd_synth(const RunConfig& config, const std::filesystem::path& out, std::ostream& log) {
  config.validate();
  Scene scene = generate(config.scene);
  write_scene(scene, out);
  std::size_t boxes = 0;
  for (const auto& b : scene.boxes) boxes += b.size();
  log << "scene: " << scene.frame_count() << " frames, "
      << scene_instance_ids(scene).size() << " visible instances, " << boxes
      << " box records -> " << out.string() << '\n';
  return scene;
}

}  // namespace bevkit
