// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bevkit/box.hpp"

namespace bevkit {

/// Metric extent and cell size of a BEV raster.
///
/// Cell (i, j) covers x in [x_min + j*cell, x_min + (j+1)*cell) and the
/// analogous y interval; its sample position is the cell center. Rows index
/// y, columns index x.
class GridSpec {
 public:
  /// Throws ConfigError unless both extents are positive integer multiples of
  /// cell_size (to 1e-6 relative).
  static GridSpec make(double x_min, double x_max, double y_min, double y_max,
                       double cell_size);

  /// Index-space spec: x in [0, nx), y in [0, ny), unit cells.
  static GridSpec unit(int nx, int ny);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double cell_size() const { return cell_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  }

  double center_x(int j) const { return x_min_ + (j + 0.5) * cell_; }
  double center_y(int i) const { return y_min_ + (i + 0.5) * cell_; }
  double mid_x() const { return 0.5 * (x_min_ + x_max_); }
  double mid_y() const { return 0.5 * (y_min_ + y_max_); }

  /// Continuous column/row coordinate of a metric point; integer values are
  /// cell centers.
  double column_of(double x) const { return (x - x_min_) / cell_ - 0.5; }
  double row_of(double y) const { return (y - y_min_) / cell_ - 0.5; }

  /// Half-open containment used by pooling and rasterization.
  bool contains(double x, double y) const {
    return x >= x_min_ && x < x_max_ && y >= y_min_ && y < y_max_;
  }

  /// Cell holding (x, y) under the half-open rule; false when outside.
  bool locate(double x, double y, int& row, int& col) const;

  bool operator==(const GridSpec&) const = default;

  /// "x_min,x_max,y_min,y_max,cell_size"
  std::string to_string() const;
  static GridSpec parse(const std::string& text);

 private:
  GridSpec(double x_min, double x_max, double y_min, double y_max,
           double cell, int nx, int ny)
      : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max),
        cell_(cell), nx_(nx), ny_(ny) {}

  double x_min_;
  double x_max_;
  double y_min_;
  double y_max_;
  double cell_;
  int nx_;
  int ny_;
};

/// Detection grid: [-51.2, 51.2] m on both axes at 0.8 m (128 x 128).
GridSpec detection_grid_spec();
/// Map grid: x in [-30, 30] m, y in [-15, 15] m at 0.15 m (400 x 200).
GridSpec map_grid_spec();
/// Motion grid: [-50, 50] m on both axes at 0.5 m (200 x 200).
GridSpec motion_grid_spec();

/// Dense ny x nx x C float raster, row-major with channels innermost.
class BEVGrid {
 public:
  BEVGrid(GridSpec spec, int channels);
  /// Throws ContractError on a length mismatch or non-finite value.
  BEVGrid(GridSpec spec, int channels, std::vector<float> data);

  const GridSpec& spec() const { return spec_; }
  int channels() const { return channels_; }
  int nx() const { return spec_.nx(); }
  int ny() const { return spec_.ny(); }

  std::size_t index(int i, int j, int c = 0) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(nx()) +
            static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }
  float at(int i, int j, int c = 0) const { return data_[index(i, j, c)]; }
  float& at(int i, int j, int c = 0) { return data_[index(i, j, c)]; }

  std::span<const float> cell(int i, int j) const {
    return {data_.data() + index(i, j), static_cast<std::size_t>(channels_)};
  }
  std::span<float> cell(int i, int j) {
    return {data_.data() + index(i, j), static_cast<std::size_t>(channels_)};
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  const std::vector<float>& values() const { return data_; }

  bool all_finite() const;
  double total() const;

 private:
  GridSpec spec_;
  int channels_;
  std::vector<float> data_;
};

/// Same dims and bit-identical payload (distinguishes -0.0f and NaN payloads).
bool identical(const BEVGrid& a, const BEVGrid& b);

/// Crop-and-resample of src onto dst_spec by bilinear interpolation at each
/// destination cell center. Source neighbours outside the raster count as 0
/// and queries outside the source extent yield 0.
BEVGrid grid_sample(const BEVGrid& src, const GridSpec& dst_spec);

/// BEV-side augmentation: flip, then rotate, then scale, about the grid
/// center. Positive rotation is counter-clockwise in the x/y plane.
struct BEVTransform {
  double rotation = 0.0;
  bool flip_x = false;  // mirror x about the grid center (columns)
  bool flip_y = false;  // mirror y about the grid center (rows)
  double scale = 1.0;

  bool is_identity() const {
    return rotation == 0.0 && !flip_x && !flip_y && scale == 1.0;
  }
};

BEVTransform inverse(const BEVTransform& t);

/// Backward bilinear warp of the grid content; vacated cells are 0.
BEVGrid apply_bev_transform(const BEVGrid& grid, const BEVTransform& t);

/// Moves boxes the same way apply_bev_transform moves raster content.
/// Centers are transformed about the grid center of `spec`; sizes scale;
/// yaw and velocity follow the flips and rotation.
std::vector<DetectionBox> apply_bev_transform(std::span<const DetectionBox> boxes,
                                              const GridSpec& spec,
                                              const BEVTransform& t);

}  // namespace bevkit
