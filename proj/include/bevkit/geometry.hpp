// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "bevkit/grid.hpp"

namespace bevkit {

// Camera frame: x right, y down, z along the optical axis (right-handed).
// Extrinsics map camera coordinates into the ego frame:
//   p_ego = rotation * p_cam + translation.

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct Camera {
  CameraIntrinsics intrinsics;
  Mat3 rotation = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 translation = {0, 0, 0};
};

Mat3 rotation_z(double angle);
Mat3 multiply(const Mat3& a, const Mat3& b);

class CameraRig {
 public:
  /// Throws ConfigError when a camera has fx/fy <= 0 or a rotation that is
  /// not orthonormal to 1e-6.
  explicit CameraRig(std::vector<Camera> cameras);

  std::size_t size() const { return cameras_.size(); }
  const Camera& operator[](std::size_t m) const { return cameras_[m]; }
  const std::vector<Camera>& cameras() const { return cameras_; }

 private:
  std::vector<Camera> cameras_;
};

/// Uniformly spaced depth candidates: depth(k) = d_min + k * (d_max - d_min) / count.
class DepthBins {
 public:
  DepthBins(double d_min, double d_max, int count);

  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }
  int count() const { return count_; }
  double spacing() const { return (d_max_ - d_min_) / count_; }
  double depth(int k) const { return d_min_ + k * spacing(); }
  /// Bin whose depth value is nearest to d (clamped to the valid range).
  int nearest(double d) const;

 private:
  double d_min_;
  double d_max_;
  int count_;
};

/// Feature-map size of one camera and the image-to-feature stride.
/// Feature pixel (row r, col c) samples the image point
/// ((c + 0.5) * stride, (r + 0.5) * stride) in pixel units.
struct FeatureDims {
  int height = 1;
  int width = 1;
  int stride = 16;
};

/// Per-camera H' x W' x C features and H' x W' x D depth distributions,
/// camera-major. Depth distributions are renormalized to sum to 1 per pixel
/// on construction.
class FeatureMap {
 public:
  /// Throws ContractError on length mismatch, non-finite input, a negative
  /// probability or an all-zero pixel distribution.
  FeatureMap(int cameras, FeatureDims dims, int channels, int depth_bins,
             std::vector<float> features, std::vector<float> depth);

  int cameras() const { return cameras_; }
  const FeatureDims& dims() const { return dims_; }
  int channels() const { return channels_; }
  int depth_bins() const { return depth_bins_; }

  std::size_t pixel_index(int m, int r, int c) const {
    return (static_cast<std::size_t>(m) * dims_.height + r) * dims_.width + c;
  }
  std::span<const float> feature(int m, int r, int c) const {
    return {features_.data() + pixel_index(m, r, c) * channels_,
            static_cast<std::size_t>(channels_)};
  }
  std::span<const float> depth(int m, int r, int c) const {
    return {depth_.data() + pixel_index(m, r, c) * depth_bins_,
            static_cast<std::size_t>(depth_bins_)};
  }

 private:
  int cameras_;
  FeatureDims dims_;
  int channels_;
  int depth_bins_;
  std::vector<float> features_;
  std::vector<float> depth_;
};

/// Ego-frame points with per-point depth probability and feature vector,
/// ordered camera, row, column, depth bin.
struct LiftedCloud {
  int channels = 0;
  std::vector<Vec3> positions;
  std::vector<float> weights;
  std::vector<float> features;  // size() * channels

  std::size_t size() const { return positions.size(); }
  std::span<const float> feature(std::size_t k) const {
    return {features.data() + k * channels, static_cast<std::size_t>(channels)};
  }
};

/// Unprojects every feature-pixel center at every bin depth (depth measured
/// along the optical axis) into the ego frame, in LiftedCloud order.
std::vector<Vec3> build_frustum(const FeatureDims& dims, const DepthBins& bins,
                                const CameraRig& rig);

/// Outer product of pixel features and depth probabilities placed on the
/// frustum. Throws ContractError when the map disagrees with rig or bins.
LiftedCloud lift(const FeatureMap& features, const DepthBins& bins,
                 const CameraRig& rig);

struct ZBounds {
  double min = -5.0;
  double max = 3.0;
};

/// Sum-pools point features into the BEV cells containing them.
///
/// Points outside the half-open x/y extent or outside [z.min, z.max) are
/// dropped. Each cell is the correctly rounded exact sum of its points, so
/// the result is independent of point order and worker count.
BEVGrid pillar_pool(const LiftedCloud& cloud, const GridSpec& spec,
                    ZBounds z = {});

}  // namespace bevkit
