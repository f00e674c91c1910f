// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "bevkit/grid.hpp"

namespace bevkit {

/// Rounds a continuous index to the nearest integer when it lies within
/// 1e-6 of it, so coincident cell centers read back exactly.
double snap_index(double v);

/// Bilinear read of all channels at continuous (column, row) coordinates.
///
/// Integer coordinates are cell centers. Neighbours outside the raster
/// contribute 0; a query outside [-0.5, n - 0.5] on either axis yields 0.
/// When both coordinates snap to integers the stored value is copied
/// unchanged.
void sample_bilinear(const BEVGrid& src, double col, double row,
                     std::span<float> out);

}  // namespace bevkit
