// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace bevkit {

/// A BEV box with motion state.
///
/// `length` runs along the heading given by `yaw` (counter-clockwise from +x),
/// `width` across it. `id` links boxes of one agent across timestamps and is
/// the value painted into instance rasters (0 is never a valid agent id).
struct DetectionBox {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double width = 1.0;
  double length = 1.0;
  double height = 1.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  std::string label;
  double score = 1.0;
  std::uint32_t id = 0;

  bool operator==(const DetectionBox&) const = default;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace bevkit
