// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bevkit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <sstream>

#include "bevkit/errors.hpp"
#include "bevkit/parallel.hpp"
#include "bevkit/sampling.hpp"

namespace bevkit {
namespace {

constexpr double kSnapTolerance = 1e-6;
constexpr int kMaxCells = 1 << 20;  // per axis

int cells_along(double lo, double hi, double cell, const char* axis) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError(std::string("grid ") + axis + " extent is not finite");
  }
  if (!(hi > lo)) {
    throw ConfigError(std::string("grid ") + axis + "_max must exceed " + axis +
                      "_min");
  }
  const double ratio = (hi - lo) / cell;
  const double n = std::round(ratio);
  if (n < 1 || n > kMaxCells || std::abs(ratio - n) > 1e-6 * std::max(1.0, n)) {
    std::ostringstream os;
    os << "grid " << axis << " extent " << (hi - lo)
       << " m is not an integer multiple of cell size " << cell;
    throw ConfigError(os.str());
  }
  return static_cast<int>(n);
}

}  // namespace

GridSpec GridSpec::make(double x_min, double x_max, double y_min, double y_max,
                        double cell_size) {
  if (!std::isfinite(cell_size) || !(cell_size > 0.0)) {
    throw ConfigError("grid cell_size must be positive");
  }
  const int nx = cells_along(x_min, x_max, cell_size, "x");
  const int ny = cells_along(y_min, y_max, cell_size, "y");
  return GridSpec(x_min, x_max, y_min, y_max, cell_size, nx, ny);
}

GridSpec GridSpec::unit(int nx, int ny) {
  return make(0.0, nx, 0.0, ny, 1.0);
}

bool GridSpec::locate(double x, double y, int& row, int& col) const {
  if (!contains(x, y)) return false;
  // x < x_max can still round up to nx in the division.
  col = std::min(static_cast<int>(std::floor((x - x_min_) / cell_)), nx_ - 1);
  row = std::min(static_cast<int>(std::floor((y - y_min_) / cell_)), ny_ - 1);
  return true;
}

std::string GridSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << x_min_ << ',' << x_max_ << ',' << y_min_ << ',' << y_max_ << ','
     << cell_;
  return os.str();
}

GridSpec GridSpec::parse(const std::string& text) {
  std::istringstream is(text);
  double v[5];
  for (int k = 0; k < 5; ++k) {
    std::string field;
    if (!std::getline(is, field, ',')) {
      throw ConfigError("grid spec '" + text +
                        "' needs five comma-separated numbers");
    }
    try {
      std::size_t used = 0;
      v[k] = std::stod(field, &used);
      if (field.find_first_not_of(" \t", used) != std::string::npos) {
        throw std::invalid_argument(field);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("grid spec '" + text + "': bad number '" + field + "'");
    }
  }
  std::string rest;
  if (std::getline(is, rest)) {
    throw ConfigError("grid spec '" + text + "' has trailing fields");
  }
  return make(v[0], v[1], v[2], v[3], v[4]);
}

GridSpec detection_grid_spec() { return GridSpec::make(-51.2, 51.2, -51.2, 51.2, 0.8); }
GridSpec map_grid_spec() { return GridSpec::make(-30.0, 30.0, -15.0, 15.0, 0.15); }
GridSpec motion_grid_spec() { return GridSpec::make(-50.0, 50.0, -50.0, 50.0, 0.5); }

BEVGrid::BEVGrid(GridSpec spec, int channels)
    : spec_(spec), channels_(channels) {
  if (channels < 1) throw ContractError("grid needs at least one channel");
  data_.assign(spec_.cell_count() * static_cast<std::size_t>(channels), 0.0f);
}

BEVGrid::BEVGrid(GridSpec spec, int channels, std::vector<float> data)
    : spec_(spec), channels_(channels), data_(std::move(data)) {
  if (channels < 1) throw ContractError("grid needs at least one channel");
  if (data_.size() != spec_.cell_count() * static_cast<std::size_t>(channels)) {
    throw ContractError("grid data length does not match ny*nx*channels");
  }
  if (!all_finite()) throw ContractError("grid data contains non-finite values");
}

bool BEVGrid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

double BEVGrid::total() const {
  double s = 0.0;
  for (float v : data_) s += v;
  return s;
}

bool identical(const BEVGrid& a, const BEVGrid& b) {
  if (a.nx() != b.nx() || a.ny() != b.ny() || a.channels() != b.channels()) {
    return false;
  }
  return std::memcmp(a.data().data(), b.data().data(),
                     a.data().size() * sizeof(float)) == 0;
}

double snap_index(double v) {
  const double r = std::round(v);
  return std::abs(v - r) <= kSnapTolerance ? r : v;
}

void sample_bilinear(const BEVGrid& src, double col, double row,
                     std::span<float> out) {
  const int nx = src.nx();
  const int ny = src.ny();
  const int channels = src.channels();
  col = snap_index(col);
  row = snap_index(row);
  if (!(col >= -0.5 && col <= nx - 0.5 && row >= -0.5 && row <= ny - 0.5)) {
    std::fill(out.begin(), out.end(), 0.0f);
    return;
  }
  const double c0 = std::floor(col);
  const double r0 = std::floor(row);
  const double fx = col - c0;
  const double fy = row - r0;
  const int j0 = static_cast<int>(c0);
  const int i0 = static_cast<int>(r0);

  if (fx == 0.0 && fy == 0.0) {
    if (j0 >= 0 && j0 < nx && i0 >= 0 && i0 < ny) {
      auto cell = src.cell(i0, j0);
      std::copy(cell.begin(), cell.end(), out.begin());
    } else {
      std::fill(out.begin(), out.end(), 0.0f);
    }
    return;
  }

  const double w[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy),
                       (1.0 - fx) * fy, fx * fy};
  const int js[4] = {j0, j0 + 1, j0, j0 + 1};
  const int is[4] = {i0, i0, i0 + 1, i0 + 1};
  for (int c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (w[k] == 0.0) continue;
      if (js[k] < 0 || js[k] >= nx || is[k] < 0 || is[k] >= ny) continue;
      acc += w[k] * static_cast<double>(src.at(is[k], js[k], c));
    }
    out[static_cast<std::size_t>(c)] = static_cast<float>(acc);
  }
}

BEVGrid grid_sample(const BEVGrid& src, const GridSpec& dst_spec) {
  if (!src.all_finite()) throw ContractError("grid_sample: source not finite");
  if (dst_spec == src.spec()) return src;
  BEVGrid out(dst_spec, src.channels());
  const GridSpec& s = src.spec();
  parallel_for(static_cast<std::size_t>(dst_spec.ny()),
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t i = begin; i < end; ++i) {
                   const int row = static_cast<int>(i);
                   const double v = s.row_of(dst_spec.center_y(row));
                   for (int j = 0; j < dst_spec.nx(); ++j) {
                     const double u = s.column_of(dst_spec.center_x(j));
                     sample_bilinear(src, u, v, out.cell(row, j));
                   }
                 }
               });
  return out;
}

namespace {

// Forward map p -> c + s * R * F * (p - c).
struct Affine2 {
  double a, b, c, d;  // 2x2 linear part, row-major
  double mx, my;      // center

  void apply(double x, double y, double& ox, double& oy) const {
    const double dx = x - mx;
    const double dy = y - my;
    ox = mx + a * dx + b * dy;
    oy = my + c * dx + d * dy;
  }
};

Affine2 forward_map(const BEVTransform& t, double mx, double my) {
  const double fx = t.flip_x ? -1.0 : 1.0;
  const double fy = t.flip_y ? -1.0 : 1.0;
  const double cs = std::cos(t.rotation);
  const double sn = std::sin(t.rotation);
  return {t.scale * cs * fx, -t.scale * sn * fy, t.scale * sn * fx,
          t.scale * cs * fy, mx, my};
}

Affine2 backward_map(const BEVTransform& t, double mx, double my) {
  // F * R(-theta) / s
  const double fx = t.flip_x ? -1.0 : 1.0;
  const double fy = t.flip_y ? -1.0 : 1.0;
  const double cs = std::cos(t.rotation);
  const double sn = std::sin(t.rotation);
  const double inv = 1.0 / t.scale;
  return {fx * cs * inv, fx * sn * inv, -fy * sn * inv, fy * cs * inv, mx, my};
}

void validate(const BEVTransform& t) {
  if (!std::isfinite(t.scale) || !(t.scale > 0.0)) {
    throw ConfigError("BEV transform scale must be positive");
  }
  if (!std::isfinite(t.rotation)) {
    throw ConfigError("BEV transform rotation must be finite");
  }
}

}  // namespace

BEVTransform inverse(const BEVTransform& t) {
  validate(t);
  BEVTransform inv;
  inv.flip_x = t.flip_x;
  inv.flip_y = t.flip_y;
  // F R(-a) = R(a) F for a single mirror; two mirrors commute with rotation.
  const bool single_mirror = t.flip_x != t.flip_y;
  inv.rotation = single_mirror ? t.rotation : -t.rotation;
  inv.scale = 1.0 / t.scale;
  return inv;
}

BEVGrid apply_bev_transform(const BEVGrid& grid, const BEVTransform& t) {
  validate(t);
  if (!grid.all_finite()) {
    throw ContractError("apply_bev_transform: grid not finite");
  }
  if (t.is_identity()) return grid;
  const GridSpec& s = grid.spec();
  const Affine2 back = backward_map(t, s.mid_x(), s.mid_y());
  BEVGrid out(s, grid.channels());
  parallel_for(static_cast<std::size_t>(s.ny()),
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t i = begin; i < end; ++i) {
                   const int row = static_cast<int>(i);
                   for (int j = 0; j < s.nx(); ++j) {
                     double px = 0.0, py = 0.0;
                     back.apply(s.center_x(j), s.center_y(row), px, py);
                     sample_bilinear(grid, s.column_of(px), s.row_of(py),
                                     out.cell(row, j));
                   }
                 }
               });
  return out;
}

std::vector<DetectionBox> apply_bev_transform(std::span<const DetectionBox> boxes,
                                              const GridSpec& spec,
                                              const BEVTransform& t) {
  validate(t);
  const Affine2 fwd = forward_map(t, spec.mid_x(), spec.mid_y());
  const double cs = std::cos(t.rotation);
  const double sn = std::sin(t.rotation);
  std::vector<DetectionBox> out(boxes.begin(), boxes.end());
  for (DetectionBox& b : out) {
    fwd.apply(b.x, b.y, b.x, b.y);
    b.width *= t.scale;
    b.length *= t.scale;
    b.height *= t.scale;
    double yaw = b.yaw;
    double vx = b.vx;
    double vy = b.vy;
    if (t.flip_x) {
      yaw = std::numbers::pi - yaw;
      vx = -vx;
    }
    if (t.flip_y) {
      yaw = -yaw;
      vy = -vy;
    }
    b.yaw = wrap_angle(yaw + t.rotation);
    b.vx = cs * vx - sn * vy;
    b.vy = sn * vx + cs * vy;
  }
  return out;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

}  // namespace bevkit
