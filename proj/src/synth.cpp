// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bevkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "bevkit/errors.hpp"
#include "bevkit/grid_io.hpp"

namespace bevkit {
namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;

// cos/sin that are exact on multiples of pi/2, so axis-aligned boxes
// rasterize without rounding noise.
void cos_sin(double angle, double& c, double& s) {
  const double quarter = angle / kHalfPi;
  const double q = std::round(quarter);
  if (std::abs(quarter - q) < 1e-12) {
    static constexpr double kCos[4] = {1, 0, -1, 0};
    static constexpr double kSin[4] = {0, 1, 0, -1};
    const int k = ((static_cast<int>(q) % 4) + 4) % 4;
    c = kCos[k];
    s = kSin[k];
    return;
  }
  c = std::cos(angle);
  s = std::sin(angle);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double snap_flow(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

bool box_fully_inside(const DetectionBox& b, const GridSpec& spec) {
  double c = 0.0, s = 0.0;
  cos_sin(b.yaw, c, s);
  const double hx = 0.5 * (std::abs(c) * b.length + std::abs(s) * b.width);
  const double hy = 0.5 * (std::abs(s) * b.length + std::abs(c) * b.width);
  return b.x - hx >= spec.x_min() && b.x + hx <= spec.x_max() &&
         b.y - hy >= spec.y_min() && b.y + hy <= spec.y_max();
}

std::size_t painted_cells(const DetectionBox& b, const GridSpec& spec) {
  const DetectionBox one[1] = {b};
  const InstanceSegFrame f = rasterize_boxes(one, spec);
  return static_cast<std::size_t>(
      std::count_if(f.ids.begin(), f.ids.end(), [](std::uint32_t v) { return v != 0; }));
}

double footprint_radius(const DetectionBox& b) {
  return 0.5 * std::hypot(b.width, b.length);
}

struct ClassShape {
  const char* label;
  double weight;
  double min_width, max_width, min_length, max_length, height;
  bool pedestrian;
};

constexpr ClassShape kClasses[] = {
    {"car", 0.6, 1.6, 2.0, 3.8, 4.8, 1.6, false},
    {"truck", 0.15, 2.3, 2.8, 6.0, 9.0, 3.0, false},
    {"pedestrian", 0.25, 0.5, 0.9, 0.5, 0.9, 1.7, true},
};

// Rounds a size up to an even number of cells (at least two).
double even_cells(double size, double cell) {
  const double n = std::max(1.0, std::round(size / (2.0 * cell)));
  return 2.0 * n * cell;
}

}  // namespace

void SceneConfig::validate() const {
  if (past_frames < 1) throw ConfigError("scene: past_frames (N) must be >= 1");
  if (future_frames < 1) throw ConfigError("scene: future_frames (T) must be >= 1");
  if (!(frame_period > 0.0)) throw ConfigError("scene: frame_period must be > 0");
  if (agent_count < 0) throw ConfigError("scene: agent_count must be >= 0");
  if (max_speed < 0.0 || max_pedestrian_speed < 0.0 || ego_max_speed < 0.0 ||
      max_yaw_rate < 0.0 || ego_max_turn_rate < 0.0) {
    throw ConfigError("scene: speed and rate limits must be >= 0");
  }
  if (map.lane_count < 1 || !(map.lane_width > 0.0) || map.crossing_count < 0 ||
      !(map.crossing_depth > 0.0)) {
    throw ConfigError("scene: invalid map layout");
  }
}

std::string SceneConfig::canonical() const {
  std::ostringstream os;
  os << "seed " << seed << '\n'
     << "past_frames " << past_frames << '\n'
     << "future_frames " << future_frames << '\n'
     << "frame_period " << fmt_double(frame_period) << '\n'
     << "agent_count " << agent_count << '\n'
     << "max_speed " << fmt_double(max_speed) << '\n'
     << "max_pedestrian_speed " << fmt_double(max_pedestrian_speed) << '\n'
     << "max_yaw_rate " << fmt_double(max_yaw_rate) << '\n'
     << "ego_max_speed " << fmt_double(ego_max_speed) << '\n'
     << "ego_max_turn_rate " << fmt_double(ego_max_turn_rate) << '\n'
     << "integer_motion " << (integer_motion ? 1 : 0) << '\n'
     << "lane_count " << map.lane_count << '\n'
     << "lane_width " << fmt_double(map.lane_width) << '\n'
     << "crossing_count " << map.crossing_count << '\n'
     << "crossing_depth " << fmt_double(map.crossing_depth) << '\n'
     << "det_spec " << det_spec.to_string() << '\n'
     << "map_spec " << map_spec.to_string() << '\n'
     << "motion_spec " << motion_spec.to_string() << '\n';
  return os.str();
}

DetectionBox AgentState::box_at(double t) const {
  DetectionBox b;
  b.id = id;
  b.label = label;
  b.width = width;
  b.length = length;
  b.height = height;
  b.z = 0.5 * height;
  b.score = 1.0;
  double c0 = 0.0, s0 = 0.0;
  cos_sin(yaw, c0, s0);
  if (yaw_rate == 0.0) {
    b.x = x + speed * c0 * t;
    b.y = y + speed * s0 * t;
    b.yaw = yaw;
  } else {
    const double heading = yaw + yaw_rate * t;
    b.x = x + speed / yaw_rate * (std::sin(heading) - s0);
    b.y = y - speed / yaw_rate * (std::cos(heading) - c0);
    b.yaw = wrap_angle(heading);
  }
  double c = 0.0, s = 0.0;
  cos_sin(b.yaw, c, s);
  b.vx = speed * c;
  b.vy = speed * s;
  return b;
}

EgoPose EgoMotion::pose_at(double t) const {
  if (yaw_rate == 0.0) return {0.0, speed * t, 0.0};
  const double heading = yaw_rate * t;
  return {wrap_angle(heading), speed / yaw_rate * std::sin(heading),
          -speed / yaw_rate * (std::cos(heading) - 1.0)};
}

InstanceSegFrame rasterize_boxes(std::span<const DetectionBox> boxes, const GridSpec& spec) {
  InstanceSegFrame frame(spec.ny(), spec.nx());
  for (const DetectionBox& b : boxes) {
    double c = 0.0, s = 0.0;
    cos_sin(b.yaw, c, s);
    const double hl = 0.5 * b.length;
    const double hw = 0.5 * b.width;
    const double ex = std::abs(c) * hl + std::abs(s) * hw;
    const double ey = std::abs(s) * hl + std::abs(c) * hw;
    const int j0 = std::max(0, static_cast<int>(std::floor(spec.column_of(b.x - ex))));
    const int j1 = std::min(spec.nx() - 1, static_cast<int>(std::ceil(spec.column_of(b.x + ex))));
    const int i0 = std::max(0, static_cast<int>(std::floor(spec.row_of(b.y - ey))));
    const int i1 = std::min(spec.ny() - 1, static_cast<int>(std::ceil(spec.row_of(b.y + ey))));
    for (int i = i0; i <= i1; ++i) {
      const double dy = spec.center_y(i) - b.y;
      for (int j = j0; j <= j1; ++j) {
        const double dx = spec.center_x(j) - b.x;
        const double lx = c * dx + s * dy;
        const double ly = -s * dx + c * dy;
        if (lx >= -hl && lx < hl && ly >= -hw && ly < hw) frame.at(i, j) = b.id;
      }
    }
  }
  return frame;
}

BEVGrid labels_to_grid(const InstanceSegFrame& frame, const GridSpec& spec) {
  if (frame.nx != spec.nx() || frame.ny != spec.ny()) {
    throw ContractError("labels_to_grid: frame does not match grid spec");
  }
  BEVGrid g(spec, 1);
  auto d = g.data();
  for (std::size_t k = 0; k < frame.ids.size(); ++k) {
    if (frame.ids[k] >= (1u << 24)) throw ContractError("labels_to_grid: id too large");
    d[k] = static_cast<float>(frame.ids[k]);
  }
  return g;
}

InstanceSegFrame grid_to_labels(const BEVGrid& grid) {
  if (grid.channels() != 1) throw ContractError("grid_to_labels: expected one channel");
  InstanceSegFrame f(grid.ny(), grid.nx());
  auto d = grid.data();
  for (std::size_t k = 0; k < f.ids.size(); ++k) {
    const float v = d[k];
    if (v < 0.0f || v != std::floor(v) || v >= 16777216.0f) {
      throw FormatError("instance raster holds a non-integer or negative id");
    }
    f.ids[k] = static_cast<std::uint32_t>(v);
  }
  return f;
}

BEVGrid instance_channels(const InstanceSegFrame& frame, const GridSpec& spec,
                          std::span<const std::uint32_t> ids) {
  if (frame.nx != spec.nx() || frame.ny != spec.ny()) {
    throw ContractError("instance_channels: frame does not match grid spec");
  }
  if (ids.empty()) throw ContractError("instance_channels: need at least one id");
  std::map<std::uint32_t, int> channel;
  for (std::size_t k = 0; k < ids.size(); ++k) channel[ids[k]] = static_cast<int>(k);
  BEVGrid g(spec, static_cast<int>(ids.size()));
  for (int i = 0; i < frame.ny; ++i) {
    for (int j = 0; j < frame.nx; ++j) {
      const std::uint32_t id = frame.at(i, j);
      if (id == 0) continue;
      const auto it = channel.find(id);
      if (it == channel.end()) {
        throw ContractError("instance_channels: id " + std::to_string(id) + " not listed");
      }
      g.at(i, j, it->second) = 1.0f;
    }
  }
  return g;
}

InstanceSegFrame decode_instance_channels(const BEVGrid& state,
                                          std::span<const std::uint32_t> ids) {
  if (static_cast<std::size_t>(state.channels()) != ids.size()) {
    throw ContractError("decode_instance_channels: channel count does not match ids");
  }
  InstanceSegFrame f(state.ny(), state.nx());
  for (int i = 0; i < state.ny(); ++i) {
    for (int j = 0; j < state.nx(); ++j) {
      const auto cell = state.cell(i, j);
      int best = -1;
      float best_v = 0.5f;
      for (int c = 0; c < state.channels(); ++c) {
        if (cell[c] > best_v) {
          best_v = cell[c];
          best = c;
        }
      }
      if (best >= 0) f.at(i, j) = ids[best];
    }
  }
  return f;
}

FlowField gt_flow(const Scene& scene, int step) {
  const int T = scene.config.future_frames;
  if (step < 0 || step >= T) {
    throw ContractError("gt_flow: step " + std::to_string(step) + " outside [0, " +
                        std::to_string(T) + ")");
  }
  const GridSpec& spec = scene.config.motion_spec;
  const int from = scene.present_index() + step;
  const int to = from + 1;
  std::map<std::uint32_t, const DetectionBox*> before, after;
  for (const auto& b : scene.boxes[from]) before[b.id] = &b;
  for (const auto& b : scene.boxes[to]) after[b.id] = &b;

  FlowField flow(spec);
  const InstanceSegFrame& src = scene.instances[from];
  const InstanceSegFrame& dst = scene.instances[to];
  const double cell = spec.cell_size();
  // Carries the cell center back along the rigid motion of instance `id`.
  auto pull = [&](int i, int j, std::uint32_t id) {
    const auto a = before.find(id);
    const auto b = after.find(id);
    if (a == before.end() || b == after.end()) return;
    const DetectionBox& p = *a->second;
    const DetectionBox& q = *b->second;
    double cq = 0.0, sq = 0.0, cp = 0.0, sp = 0.0;
    cos_sin(q.yaw, cq, sq);
    cos_sin(p.yaw, cp, sp);
    const double qx = spec.center_x(j) - q.x;
    const double qy = spec.center_y(i) - q.y;
    const double lx = cq * qx + sq * qy;
    const double ly = -sq * qx + cq * qy;
    const double src_x = p.x + cp * lx - sp * ly;
    const double src_y = p.y + sp * lx + cp * ly;
    flow.set(i, j, static_cast<float>(snap_flow((spec.center_x(j) - src_x) / cell)),
             static_cast<float>(snap_flow((spec.center_y(i) - src_y) / cell)));
  };
  for (int i = 0; i < spec.ny(); ++i) {
    for (int j = 0; j < spec.nx(); ++j) {
      const std::uint32_t id = dst.at(i, j);
      if (id != 0) {
        pull(i, j, id);
      } else if (src.at(i, j) != 0) {
        // Vacated cell: following the leaving instance's motion lands outside
        // its old footprint, so the warp brings in background.
        pull(i, j, src.at(i, j));
      }
    }
  }
  return flow;
}

BEVGrid rasterize_map(const MapLayout& layout, const GridSpec& spec, std::uint64_t seed) {
  BEVGrid map(spec, kMapClasses);
  const double cell = spec.cell_size();
  const double half_road = 0.5 * layout.lane_count * layout.lane_width;

  // Polylines are painted one cell wide by dense sampling along each segment.
  auto paint_polyline = [&](const std::vector<std::pair<double, double>>& pts, int channel) {
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      const auto [x0, y0] = pts[k];
      const auto [x1, y1] = pts[k + 1];
      const double len = std::hypot(x1 - x0, y1 - y0);
      const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.25 * cell))));
      for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        int row = 0, col = 0;
        if (spec.locate(x0 + t * (x1 - x0), y0 + t * (y1 - y0), row, col)) {
          map.at(row, col, channel) = 1.0f;
        }
      }
    }
  };

  const double x_lo = spec.x_min();
  const double x_hi = spec.x_max() - 1e-9;
  for (int lane = 1; lane < layout.lane_count; ++lane) {
    const double y = -half_road + lane * layout.lane_width;
    paint_polyline({{x_lo, y}, {x_hi, y}}, 0);
  }
  paint_polyline({{x_lo, -half_road}, {x_hi, -half_road}}, 2);
  paint_polyline({{x_lo, half_road}, {x_hi, half_road}}, 2);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> where(spec.x_min(), spec.x_max() - layout.crossing_depth);
  for (int k = 0; k < layout.crossing_count; ++k) {
    const double x0 = where(rng);
    for (int i = 0; i < spec.ny(); ++i) {
      const double y = spec.center_y(i);
      if (y < -half_road || y >= half_road) continue;
      for (int j = 0; j < spec.nx(); ++j) {
        const double x = spec.center_x(j);
        if (x >= x0 && x < x0 + layout.crossing_depth) map.at(i, j, 1) = 1.0f;
      }
    }
  }
  return map;
}

Scene build_scene(const SceneConfig& config, std::span<const AgentState> agents,
                  const EgoMotion& ego) {
  config.validate();
  const int n_frames = config.past_frames + config.future_frames;
  Scene scene{config, {}, {}, {}, {},
              rasterize_map(config.map, config.map_spec, config.seed)};
  for (int k = 0; k < n_frames; ++k) {
    const double t = (k - (config.past_frames - 1)) * config.frame_period;
    scene.timestamps.push_back(t);
    std::vector<DetectionBox> boxes;
    boxes.reserve(agents.size());
    for (const AgentState& a : agents) boxes.push_back(a.box_at(t));
    scene.instances.push_back(rasterize_boxes(boxes, config.motion_spec));
    scene.boxes.push_back(std::move(boxes));
    scene.ego_poses.push_back(ego.pose_at(t));
  }
  return scene;
}

Scene generate(const SceneConfig& config) {
  config.validate();
  const GridSpec& spec = config.motion_spec;
  const double cell = spec.cell_size();
  const double period = config.frame_period;
  const int n_frames = config.past_frames + config.future_frames;
  const double t_first = -(config.past_frames - 1) * period;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  {
    // Quick infeasibility check against the smallest possible footprints.
    const double min_area = 4.0 * cell * cell;
    const double extent = (spec.x_max() - spec.x_min()) * (spec.y_max() - spec.y_min());
    if (config.agent_count * min_area > 0.5 * extent) {
      throw GenerationError("scene: " + std::to_string(config.agent_count) +
                            " agents cannot fit the motion grid extent");
    }
  }

  std::vector<AgentState> agents;
  const int max_attempts = 2000;
  for (int a = 0; a < config.agent_count; ++a) {
    bool placed = false;
    for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      double pick = unit(rng);
      const ClassShape* shape = &kClasses[0];
      for (const ClassShape& c : kClasses) {
        shape = &c;
        if (pick < c.weight) break;
        pick -= c.weight;
      }
      AgentState s;
      s.id = static_cast<std::uint32_t>(a + 1);
      s.label = shape->label;
      s.width = uniform(shape->min_width, shape->max_width);
      s.length = uniform(shape->min_length, shape->max_length);
      s.height = shape->height;
      const double vmax = shape->pedestrian ? config.max_pedestrian_speed : config.max_speed;
      s.speed = uniform(0.0, vmax);
      if (config.integer_motion) {
        s.width = even_cells(s.width, cell);
        s.length = even_cells(s.length, cell);
        s.yaw = kHalfPi * static_cast<double>(static_cast<int>(unit(rng) * 4.0) - 1);
        s.speed = std::round(s.speed * period / cell) * cell / period;
        const int gx = static_cast<int>(uniform(0.0, spec.nx()));
        const int gy = static_cast<int>(uniform(0.0, spec.ny()));
        s.x = spec.x_min() + gx * cell;  // cell corner
        s.y = spec.y_min() + gy * cell;
      } else {
        s.yaw = uniform(-std::numbers::pi, std::numbers::pi);
        s.yaw_rate = uniform(-config.max_yaw_rate, config.max_yaw_rate);
        s.x = uniform(spec.x_min(), spec.x_max());
        s.y = uniform(spec.y_min(), spec.y_max());
      }

      std::vector<DetectionBox> track;
      for (int k = 0; k < n_frames; ++k) track.push_back(s.box_at(t_first + k * period));
      if (!box_fully_inside(track.front(), spec)) continue;
      // Once an agent leaves the grid it must not come back.
      bool left = false, ok = true;
      for (const auto& b : track) {
        const bool visible = painted_cells(b, spec) > 0;
        if (visible && left) ok = false;
        if (!visible) left = true;
      }
      if (!ok) continue;
      for (const AgentState& other : agents) {
        for (int k = 0; k < n_frames && ok; ++k) {
          const DetectionBox ob = other.box_at(t_first + k * period);
          const double gap = std::hypot(ob.x - track[k].x, ob.y - track[k].y);
          // The extra per-frame travel keeps vacated-cell flows off other agents.
          const double travel = (other.speed + s.speed) * period;
          if (gap <= footprint_radius(ob) + footprint_radius(track[k]) + cell + travel) ok = false;
        }
        if (!ok) break;
      }
      if (!ok) continue;
      agents.push_back(s);
      placed = true;
    }
    if (!placed) {
      throw GenerationError("scene: could not place agent " + std::to_string(a + 1) +
                            " without overlap after " + std::to_string(max_attempts) +
                            " attempts");
    }
  }

  EgoMotion ego;
  ego.speed = uniform(0.0, config.ego_max_speed);
  if (config.integer_motion) {
    const double det_cell = config.det_spec.cell_size();
    ego.speed = std::round(ego.speed * period / det_cell) * det_cell / period;
  } else {
    ego.yaw_rate = uniform(-config.ego_max_turn_rate, config.ego_max_turn_rate);
  }
  return build_scene(config, agents, ego);
}

std::vector<std::uint32_t> scene_instance_ids(const Scene& scene) {
  std::set<std::uint32_t> ids;
  for (const auto& f : scene.instances) {
    for (std::uint32_t id : f.ids) {
      if (id != 0) ids.insert(id);
    }
  }
  return {ids.begin(), ids.end()};
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::string frame_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%02d.bvg", k);
  return buf;
}

}  // namespace

void write_scene(const Scene& scene, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create scene directory " + dir.string() + ": " + ec.message());

  const std::string canonical = scene.config.canonical();
  std::ostringstream os;
  os << "# bevkit scene\n"
     << "# pose <frame> <theta> <tx> <ty>\n"
     << "# box <frame> <id> <label> <x> <y> <z> <width> <length> <height> <yaw> <vx> <vy> <score>\n"
     << "grid_format BVG1\n"
     << "config_hash " << fnv1a_hex(canonical) << '\n'
     << "frames " << scene.frame_count() << '\n';
  std::istringstream cfg(canonical);
  for (std::string line; std::getline(cfg, line);) os << "config " << line << '\n';
  for (int k = 0; k < scene.frame_count(); ++k) {
    const EgoPose& p = scene.ego_poses[k];
    os << "time " << k << ' ' << fmt_double(scene.timestamps[k]) << '\n';
    os << "pose " << k << ' ' << fmt_double(p.theta) << ' ' << fmt_double(p.tx) << ' '
       << fmt_double(p.ty) << '\n';
  }
  for (int k = 0; k < scene.frame_count(); ++k) {
    for (const DetectionBox& b : scene.boxes[k]) {
      os << "box " << k << ' ' << b.id << ' ' << b.label << ' ' << fmt_double(b.x) << ' '
         << fmt_double(b.y) << ' ' << fmt_double(b.z) << ' ' << fmt_double(b.width) << ' '
         << fmt_double(b.length) << ' ' << fmt_double(b.height) << ' ' << fmt_double(b.yaw)
         << ' ' << fmt_double(b.vx) << ' ' << fmt_double(b.vy) << ' ' << fmt_double(b.score)
         << '\n';
    }
  }
  for (int k = 0; k < scene.frame_count(); ++k) {
    write_grid(labels_to_grid(scene.instances[k], scene.config.motion_spec),
               dir / frame_name(k));
  }
  write_grid(scene.map, dir / "map.bvg");
  write_file_atomic(dir / "scene.txt", os.str());
}

namespace {

double to_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("scene.txt line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

long long to_int(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("scene.txt line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
}

void apply_config_field(SceneConfig& c, const std::string& key, const std::string& value,
                        int line) {
  if (key == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "past_frames") c.past_frames = static_cast<int>(to_int(value, line));
  else if (key == "future_frames") c.future_frames = static_cast<int>(to_int(value, line));
  else if (key == "frame_period") c.frame_period = to_double(value, line);
  else if (key == "agent_count") c.agent_count = static_cast<int>(to_int(value, line));
  else if (key == "max_speed") c.max_speed = to_double(value, line);
  else if (key == "max_pedestrian_speed") c.max_pedestrian_speed = to_double(value, line);
  else if (key == "max_yaw_rate") c.max_yaw_rate = to_double(value, line);
  else if (key == "ego_max_speed") c.ego_max_speed = to_double(value, line);
  else if (key == "ego_max_turn_rate") c.ego_max_turn_rate = to_double(value, line);
  else if (key == "integer_motion") c.integer_motion = to_int(value, line) != 0;
  else if (key == "lane_count") c.map.lane_count = static_cast<int>(to_int(value, line));
  else if (key == "lane_width") c.map.lane_width = to_double(value, line);
  else if (key == "crossing_count") c.map.crossing_count = static_cast<int>(to_int(value, line));
  else if (key == "crossing_depth") c.map.crossing_depth = to_double(value, line);
  else if (key == "det_spec") c.det_spec = GridSpec::parse(value);
  else if (key == "map_spec") c.map_spec = GridSpec::parse(value);
  else if (key == "motion_spec") c.motion_spec = GridSpec::parse(value);
  else throw FormatError("scene.txt line " + std::to_string(line) + ": unknown config key '" + key + "'");
}

}  // namespace

Scene read_scene(const std::filesystem::path& dir) {
  const std::string text = read_file(dir / "scene.txt");
  SceneConfig config;
  int frames = -1;
  std::map<int, double> times;
  std::map<int, EgoPose> poses;
  std::map<int, std::vector<DetectionBox>> boxes;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    const std::string& kind = f[0];
    auto need = [&](std::size_t n) {
      if (f.size() != n) {
        throw FormatError("scene.txt line " + std::to_string(line_no) + ": '" + kind +
                          "' record needs " + std::to_string(n - 1) + " fields");
      }
    };
    auto frame_index = [&](const std::string& s) {
      const long long k = to_int(s, line_no);
      if (frames < 0 || k < 0 || k >= frames) {
        throw FormatError("scene.txt line " + std::to_string(line_no) + ": frame index out of range");
      }
      return static_cast<int>(k);
    };
    if (kind == "grid_format") {
      need(2);
      if (f[1] != "BVG1") throw FormatError("scene.txt: unsupported grid format " + f[1]);
    } else if (kind == "config_hash") {
      need(2);
    } else if (kind == "frames") {
      need(2);
      frames = static_cast<int>(to_int(f[1], line_no));
      if (frames < 2) throw FormatError("scene.txt: need at least two frames");
    } else if (kind == "config") {
      need(3);
      try {
        apply_config_field(config, f[1], f[2], line_no);
      } catch (const ConfigError& e) {
        throw FormatError(std::string("scene.txt config: ") + e.what());
      }
    } else if (kind == "time") {
      need(3);
      times[frame_index(f[1])] = to_double(f[2], line_no);
    } else if (kind == "pose") {
      need(5);
      poses[frame_index(f[1])] = {to_double(f[2], line_no), to_double(f[3], line_no),
                                  to_double(f[4], line_no)};
    } else if (kind == "box") {
      need(14);
      DetectionBox b;
      const int k = frame_index(f[1]);
      b.id = static_cast<std::uint32_t>(to_int(f[2], line_no));
      b.label = f[3];
      b.x = to_double(f[4], line_no);
      b.y = to_double(f[5], line_no);
      b.z = to_double(f[6], line_no);
      b.width = to_double(f[7], line_no);
      b.length = to_double(f[8], line_no);
      b.height = to_double(f[9], line_no);
      b.yaw = to_double(f[10], line_no);
      b.vx = to_double(f[11], line_no);
      b.vy = to_double(f[12], line_no);
      b.score = to_double(f[13], line_no);
      boxes[k].push_back(b);
    } else {
      throw FormatError("scene.txt line " + std::to_string(line_no) + ": unknown record '" +
                        kind + "'");
    }
  }
  if (frames < 0) throw FormatError("scene.txt: missing frames record");
  if (frames != config.past_frames + config.future_frames) {
    throw FormatError("scene.txt: frame count does not match past + future frames");
  }
  if (static_cast<int>(poses.size()) != frames || static_cast<int>(times.size()) != frames) {
    throw FormatError("scene.txt: every frame needs one time and one pose record");
  }

  Scene scene{config, {}, {}, {}, {},
              read_grid(dir / "map.bvg", config.map_spec)};
  if (scene.map.channels() != kMapClasses) {
    throw FormatError("map.bvg must have " + std::to_string(kMapClasses) + " channels");
  }
  for (int k = 0; k < frames; ++k) {
    scene.timestamps.push_back(times[k]);
    scene.ego_poses.push_back(poses[k]);
    scene.boxes.push_back(boxes[k]);
    scene.instances.push_back(
        grid_to_labels(read_grid(dir / frame_name(k), config.motion_spec)));
  }
  return scene;
}

}  // namespace bevkit
