// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bevkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bevkit/errors.hpp"
#include "bevkit/exact_sum.hpp"
#include "bevkit/parallel.hpp"

namespace bevkit {

Mat3 rotation_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c, -s, 0, s, c, 0, 0, 0, 1};
}

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      r[i * 3 + j] = s;
    }
  }
  return r;
}

CameraRig::CameraRig(std::vector<Camera> cameras) : cameras_(std::move(cameras)) {
  if (cameras_.empty()) throw ConfigError("camera rig has no cameras");
  for (std::size_t m = 0; m < cameras_.size(); ++m) {
    const Camera& cam = cameras_[m];
    const auto& k = cam.intrinsics;
    if (!(k.fx > 0.0) || !(k.fy > 0.0) || !std::isfinite(k.fx) ||
        !std::isfinite(k.fy) || !std::isfinite(k.cx) || !std::isfinite(k.cy)) {
      throw ConfigError("camera " + std::to_string(m) +
                        ": focal lengths must be positive and finite");
    }
    const Mat3& r = cam.rotation;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k2 = 0; k2 < 3; ++k2) dot += r[k2 * 3 + i] * r[k2 * 3 + j];
        if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-6) {
          throw ConfigError("camera " + std::to_string(m) +
                            ": rotation is not orthonormal");
        }
      }
    }
    for (double t : cam.translation) {
      if (!std::isfinite(t)) {
        throw ConfigError("camera " + std::to_string(m) + ": translation not finite");
      }
    }
  }
}

DepthBins::DepthBins(double d_min, double d_max, int count)
    : d_min_(d_min), d_max_(d_max), count_(count) {
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max)) {
    throw ConfigError("depth bins need 0 < d_min < d_max");
  }
  if (count < 1) throw ConfigError("depth bins need at least one bin");
}

int DepthBins::nearest(double d) const {
  const double k = std::round((d - d_min_) / spacing());
  return static_cast<int>(std::clamp(k, 0.0, static_cast<double>(count_ - 1)));
}

FeatureMap::FeatureMap(int cameras, FeatureDims dims, int channels, int depth_bins,
                       std::vector<float> features, std::vector<float> depth)
    : cameras_(cameras),
      dims_(dims),
      channels_(channels),
      depth_bins_(depth_bins),
      features_(std::move(features)),
      depth_(std::move(depth)) {
  if (cameras < 1 || dims.height < 1 || dims.width < 1 || channels < 1 ||
      depth_bins < 1 || dims.stride < 1) {
    throw ContractError("feature map dimensions must be positive");
  }
  const std::size_t pixels =
      static_cast<std::size_t>(cameras) * dims.height * dims.width;
  if (features_.size() != pixels * channels) {
    throw ContractError("feature map: feature length does not match M*H*W*C");
  }
  if (depth_.size() != pixels * depth_bins) {
    throw ContractError("feature map: depth length does not match M*H*W*D");
  }
  for (float v : features_) {
    if (!std::isfinite(v)) throw ContractError("feature map: non-finite feature");
  }
  for (std::size_t p = 0; p < pixels; ++p) {
    float* dist = depth_.data() + p * depth_bins;
    double sum = 0.0;
    for (int k = 0; k < depth_bins; ++k) {
      if (!std::isfinite(dist[k]) || dist[k] < 0.0f) {
        throw ContractError("feature map: depth probabilities must be finite and >= 0");
      }
      sum += dist[k];
    }
    if (!(sum > 0.0)) {
      throw ContractError("feature map: pixel depth distribution sums to zero");
    }
    if (sum != 1.0) {
      for (int k = 0; k < depth_bins; ++k) {
        dist[k] = static_cast<float>(dist[k] / sum);
      }
    }
  }
}

std::vector<Vec3> build_frustum(const FeatureDims& dims, const DepthBins& bins,
                                const CameraRig& rig) {
  const int D = bins.count();
  std::vector<Vec3> points;
  points.reserve(rig.size() * dims.height * dims.width * D);
  for (const Camera& cam : rig.cameras()) {
    const auto& k = cam.intrinsics;
    const Mat3& r = cam.rotation;
    const Vec3& t = cam.translation;
    for (int row = 0; row < dims.height; ++row) {
      const double v = (row + 0.5) * dims.stride;
      const double ry = (v - k.cy) / k.fy;
      for (int col = 0; col < dims.width; ++col) {
        const double u = (col + 0.5) * dims.stride;
        const double rx = (u - k.cx) / k.fx;
        for (int b = 0; b < D; ++b) {
          const double d = bins.depth(b);
          const double pc[3] = {rx * d, ry * d, d};
          Vec3 pe;
          for (int i = 0; i < 3; ++i) {
            pe[i] = r[i * 3 + 0] * pc[0] + r[i * 3 + 1] * pc[1] +
                    r[i * 3 + 2] * pc[2] + t[i];
          }
          points.push_back(pe);
        }
      }
    }
  }
  return points;
}

LiftedCloud lift(const FeatureMap& features, const DepthBins& bins,
                 const CameraRig& rig) {
  if (static_cast<std::size_t>(features.cameras()) != rig.size()) {
    throw ContractError("lift: feature map has " + std::to_string(features.cameras()) +
                        " cameras but rig has " + std::to_string(rig.size()));
  }
  if (features.depth_bins() != bins.count()) {
    throw ContractError("lift: depth distribution has " +
                        std::to_string(features.depth_bins()) + " bins, expected " +
                        std::to_string(bins.count()));
  }
  const auto& dims = features.dims();
  const int C = features.channels();
  const int D = bins.count();

  LiftedCloud cloud;
  cloud.channels = C;
  cloud.positions = build_frustum(dims, bins, rig);
  cloud.weights.resize(cloud.positions.size());
  cloud.features.resize(cloud.positions.size() * C);

  std::size_t point = 0;
  for (int m = 0; m < features.cameras(); ++m) {
    for (int r = 0; r < dims.height; ++r) {
      for (int c = 0; c < dims.width; ++c) {
        const auto f = features.feature(m, r, c);
        const auto p = features.depth(m, r, c);
        for (int b = 0; b < D; ++b, ++point) {
          cloud.weights[point] = p[b];
          float* out = cloud.features.data() + point * C;
          for (int ch = 0; ch < C; ++ch) out[ch] = f[ch] * p[b];
        }
      }
    }
  }
  return cloud;
}

BEVGrid pillar_pool(const LiftedCloud& cloud, const GridSpec& spec, ZBounds z) {
  if (cloud.channels < 1) throw ContractError("pillar_pool: cloud has no feature channels");
  if (cloud.features.size() != cloud.size() * cloud.channels) {
    throw ContractError("pillar_pool: feature length does not match point count");
  }
  const std::size_t n = cloud.size();
  const std::size_t cells = spec.cell_count();
  constexpr std::size_t kDropped = static_cast<std::size_t>(-1);

  std::vector<std::size_t> cell_of(n, kDropped);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Vec3& p = cloud.positions[k];
      if (!(p[2] >= z.min && p[2] < z.max)) continue;
      int row = 0, col = 0;
      if (spec.locate(p[0], p[1], row, col)) {
        cell_of[k] = static_cast<std::size_t>(row) * spec.nx() + col;
      }
    }
  });

  // Stable counting sort of point indices by cell.
  std::vector<std::size_t> start(cells + 1, 0);
  for (std::size_t c : cell_of) {
    if (c != kDropped) ++start[c + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) start[c + 1] += start[c];
  std::vector<std::size_t> order(start[cells]);
  {
    std::vector<std::size_t> cursor(start.begin(), start.end() - 1);
    for (std::size_t k = 0; k < n; ++k) {
      if (cell_of[k] != kDropped) order[cursor[cell_of[k]]++] = k;
    }
  }

  const int C = cloud.channels;
  BEVGrid out(spec, C);
  auto data = out.data();
  parallel_for(cells, [&](std::size_t begin, std::size_t end) {
    ExactSum acc;
    for (std::size_t cell = begin; cell < end; ++cell) {
      const std::size_t lo = start[cell];
      const std::size_t hi = start[cell + 1];
      if (lo == hi) continue;
      for (int ch = 0; ch < C; ++ch) {
        acc.clear();
        for (std::size_t s = lo; s < hi; ++s) {
          acc.add(cloud.features[order[s] * C + ch]);
        }
        data[cell * C + ch] = static_cast<float>(acc.value());
      }
    }
  });
  return out;
}

}  // namespace bevkit
