// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "bevkit/app.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/grid_io.hpp"

namespace bevkit {
namespace {

namespace pt = boost::property_tree;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& where, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (s.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(where + ": expected a number, got '" + s + "'");
  }
}

long long parse_int(const std::string& where, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (s.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError(where + ": expected an integer, got '" + s + "'");
  }
}

bool parse_bool(const std::string& where, const std::string& s) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw ConfigError(where + ": expected true/false, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string f; std::getline(is, f, sep);) out.push_back(f);
  return out;
}

void apply_grid(GridSpec& spec, const std::string& section, const pt::ptree& tree) {
  double v[5] = {spec.x_min(), spec.x_max(), spec.y_min(), spec.y_max(), spec.cell_size()};
  static const char* kKeys[5] = {"x_min", "x_max", "y_min", "y_max", "cell_size"};
  for (const auto& [key, node] : tree) {
    int k = 0;
    while (k < 5 && key != kKeys[k]) ++k;
    if (k == 5) throw ConfigError("config [" + section + "]: unknown key '" + key + "'");
    v[k] = parse_double("config [" + section + "] " + key, node.data());
  }
  spec = GridSpec::make(v[0], v[1], v[2], v[3], v[4]);
}

}  // namespace

void RunConfig::validate() const {
  scene.validate();
  if (rig.cameras < 1 || rig.image_width < 1 || rig.image_height < 1 || rig.stride < 1) {
    throw ConfigError("config [rig]: cameras, image size and stride must be positive");
  }
  if (rig.image_width % rig.stride != 0 || rig.image_height % rig.stride != 0) {
    throw ConfigError("config [rig]: image size must be a multiple of the stride");
  }
  if (!(rig.fov_deg > 0.0 && rig.fov_deg < 180.0)) {
    throw ConfigError("config [rig]: fov_deg must be in (0, 180)");
  }
  if (!(depth.d_min > 0.0) || !(depth.d_max > depth.d_min) || depth.bins < 1) {
    throw ConfigError("config [depth]: need 0 < d_min < d_max and bins >= 1");
  }
  if (pipeline.step != "gt" && pipeline.step != "zero") {
    throw ConfigError("config [pipeline]: step must be 'gt' or 'zero', got '" + pipeline.step + "'");
  }
  if (!(pipeline.nms_threshold > 0.0) || pipeline.box_jitter < 0.0 ||
      pipeline.false_positives < 0 || pipeline.latent_dim < 1 || !std::isfinite(pipeline.latent_log_variance)) {
    throw ConfigError("config [pipeline]: invalid value");
  }
  for (const auto& [cls, s] : pipeline.nms_scale) {
    if (!(s > 0.0)) throw ConfigError("config [pipeline]: nms scale for '" + cls + "' must be > 0");
  }
  if (bench.sizes.empty() || bench.repetitions < 1) {
    throw ConfigError("config [bench]: need at least one size and one repetition");
  }
  for (int s : bench.sizes) {
    if (s < 1 || s > 4096) throw ConfigError("config [bench]: sizes must be in [1, 4096]");
  }
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << scene.canonical();
  os << "rig.cameras " << rig.cameras << '\n'
     << "rig.image_width " << rig.image_width << '\n'
     << "rig.image_height " << rig.image_height << '\n'
     << "rig.stride " << rig.stride << '\n'
     << "rig.fov_deg " << num(rig.fov_deg) << '\n'
     << "rig.mount_height " << num(rig.mount_height) << '\n'
     << "depth.d_min " << num(depth.d_min) << '\n'
     << "depth.d_max " << num(depth.d_max) << '\n'
     << "depth.bins " << depth.bins << '\n'
     << "pipeline.step " << pipeline.step << '\n'
     << "pipeline.latent_dim " << pipeline.latent_dim << '\n'
     << "pipeline.latent_log_variance " << num(pipeline.latent_log_variance) << '\n'
     << "pipeline.nms_threshold " << num(pipeline.nms_threshold) << '\n';
  for (const auto& [cls, s] : pipeline.nms_scale) {
    os << "pipeline.nms_scale." << cls << ' ' << num(s) << '\n';
  }
  os << "pipeline.box_jitter " << num(pipeline.box_jitter) << '\n'
     << "pipeline.false_positives " << pipeline.false_positives << '\n'
     << "bench.sizes";
  for (int s : bench.sizes) os << ' ' << s;
  os << '\n' << "bench.repetitions " << bench.repetitions << '\n';
  return os.str();
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) {
      throw ConfigError("config: key '" + section + "' must be inside a [section]");
    }
    if (section == "det_grid") {
      apply_grid(c.scene.det_spec, section, body);
      continue;
    }
    if (section == "map_grid") {
      apply_grid(c.scene.map_spec, section, body);
      continue;
    }
    if (section == "motion_grid") {
      apply_grid(c.scene.motion_spec, section, body);
      continue;
    }
    for (const auto& [key, node] : body) {
      const std::string where = "config [" + section + "] " + key;
      const std::string& v = node.data();
      auto unknown = [&] { throw ConfigError("config [" + section + "]: unknown key '" + key + "'"); };
      if (section == "scene") {
        SceneConfig& s = c.scene;
        if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(where, v));
        else if (key == "past_frames") s.past_frames = static_cast<int>(parse_int(where, v));
        else if (key == "future_frames") s.future_frames = static_cast<int>(parse_int(where, v));
        else if (key == "frame_period") s.frame_period = parse_double(where, v);
        else if (key == "agent_count") s.agent_count = static_cast<int>(parse_int(where, v));
        else if (key == "max_speed") s.max_speed = parse_double(where, v);
        else if (key == "max_pedestrian_speed") s.max_pedestrian_speed = parse_double(where, v);
        else if (key == "max_yaw_rate") s.max_yaw_rate = parse_double(where, v);
        else if (key == "ego_max_speed") s.ego_max_speed = parse_double(where, v);
        else if (key == "ego_max_turn_rate") s.ego_max_turn_rate = parse_double(where, v);
        else if (key == "integer_motion") s.integer_motion = parse_bool(where, v);
        else unknown();
      } else if (section == "map") {
        MapLayout& m = c.scene.map;
        if (key == "lane_count") m.lane_count = static_cast<int>(parse_int(where, v));
        else if (key == "lane_width") m.lane_width = parse_double(where, v);
        else if (key == "crossing_count") m.crossing_count = static_cast<int>(parse_int(where, v));
        else if (key == "crossing_depth") m.crossing_depth = parse_double(where, v);
        else unknown();
      } else if (section == "rig") {
        RigConfig& r = c.rig;
        if (key == "cameras") r.cameras = static_cast<int>(parse_int(where, v));
        else if (key == "image_width") r.image_width = static_cast<int>(parse_int(where, v));
        else if (key == "image_height") r.image_height = static_cast<int>(parse_int(where, v));
        else if (key == "stride") r.stride = static_cast<int>(parse_int(where, v));
        else if (key == "fov_deg") r.fov_deg = parse_double(where, v);
        else if (key == "mount_height") r.mount_height = parse_double(where, v);
        else unknown();
      } else if (section == "depth") {
        if (key == "d_min") c.depth.d_min = parse_double(where, v);
        else if (key == "d_max") c.depth.d_max = parse_double(where, v);
        else if (key == "bins") c.depth.bins = static_cast<int>(parse_int(where, v));
        else unknown();
      } else if (section == "pipeline") {
        PipelineConfig& p = c.pipeline;
        if (key == "step") p.step = v;
        else if (key == "latent_dim") p.latent_dim = static_cast<int>(parse_int(where, v));
        else if (key == "latent_log_variance") p.latent_log_variance = parse_double(where, v);
        else if (key == "nms_threshold") p.nms_threshold = parse_double(where, v);
        else if (key.starts_with("nms_scale.")) p.nms_scale[key.substr(10)] = parse_double(where, v);
        else if (key == "box_jitter") p.box_jitter = parse_double(where, v);
        else if (key == "false_positives") p.false_positives = static_cast<int>(parse_int(where, v));
        else unknown();
      } else if (section == "bench") {
        if (key == "sizes") {
          c.bench.sizes.clear();
          for (const auto& f : split(v, ',')) {
            c.bench.sizes.push_back(static_cast<int>(parse_int(where, f)));
          }
        } else if (key == "repetitions") {
          c.bench.repetitions = static_cast<int>(parse_int(where, v));
        } else {
          unknown();
        }
      } else {
        throw ConfigError("config: unknown section [" + section + "]");
      }
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text);
}

CameraRig make_rig(const RigConfig& rig) {
  const double fx = 0.5 * rig.image_width / std::tan(0.5 * rig.fov_deg * std::numbers::pi / 180.0);
  std::vector<Camera> cams;
  for (int m = 0; m < rig.cameras; ++m) {
    const double yaw = 2.0 * std::numbers::pi * m / rig.cameras;
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    Camera cam;
    cam.intrinsics = {fx, fx, 0.5 * rig.image_width, 0.5 * rig.image_height};
    // Columns: camera x (right), y (down), z (forward) in ego coordinates.
    cam.rotation = {s, 0.0, c,
                    -c, 0.0, s,
                    0.0, -1.0, 0.0};
    cam.translation = {0.0, 0.0, rig.mount_height};
    cams.push_back(cam);
  }
  return CameraRig(std::move(cams));
}

DepthBins make_depth_bins(const DepthConfig& depth) {
  return DepthBins(depth.d_min, depth.d_max, depth.bins);
}

}  // namespace bevkit
