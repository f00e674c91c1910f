// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "bevkit/grid.hpp"

namespace bevkit {

/// Planar rigid motion taking coordinates in a past ego frame to the present
/// ego frame: p_present = R(theta) * p_past + (tx, ty).
struct EgoPose {
  double theta = 0.0;  // radians, (-pi, pi]
  double tx = 0.0;     // meters
  double ty = 0.0;

  static EgoPose identity() { return {}; }
  /// Wraps theta; throws ConfigError on non-finite input.
  static EgoPose make(double theta, double tx, double ty);

  void apply(double x, double y, double& ox, double& oy) const;
  bool operator==(const EgoPose&) const = default;
};

/// outer after inner: p -> outer(inner(p)).
EgoPose compose(const EgoPose& outer, const EgoPose& inner);
EgoPose inverse(const EgoPose& pose);

/// Resamples a past grid into the present frame: each output cell center is
/// mapped back through the inverse motion and read bilinearly (0 outside).
BEVGrid align(const BEVGrid& past, const EgoPose& motion);

/// Aligns frames ordered oldest to present. `motions[k]` maps frame k
/// directly to the present frame; the present frame (last) takes no motion,
/// so motions.size() == grids.size() - 1. Throws ContractError on length or
/// spec mismatch.
std::vector<BEVGrid> align_sequence(std::span<const BEVGrid> grids,
                                    std::span<const EgoPose> motions);

/// Turns per-step motions (steps[k]: frame k -> frame k+1, oldest first)
/// into direct frame-k -> present motions for align_sequence.
std::vector<EgoPose> compose_to_present(std::span<const EgoPose> steps);

}  // namespace bevkit
