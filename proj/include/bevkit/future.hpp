// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "bevkit/grid.hpp"

namespace bevkit {

/// Per-cell diagonal Gaussian over an L-dimensional latent (L = channels).
class LatentMap {
 public:
  /// Throws ContractError unless both grids share spec and channel count.
  LatentMap(BEVGrid mean, BEVGrid log_variance);

  const BEVGrid& mean() const { return mean_; }
  const BEVGrid& log_variance() const { return log_variance_; }
  int dim() const { return mean_.channels(); }

 private:
  BEVGrid mean_;
  BEVGrid log_variance_;
};

/// mean + exp(0.5 * log_variance) * eps, eps ~ N(0, 1) drawn element by
/// element in storage order from `rng`.
BEVGrid sample_latent(const LatentMap& map, std::mt19937_64& rng);
/// Seeded draw, or the mean itself when no seed is given (deterministic mode).
BEVGrid sample_latent(const LatentMap& map, std::optional<std::uint64_t> seed);

/// Backward flow in cells: target cell (i, j) reads the source at
/// column j - dx, row i - dy.
class FlowField {
 public:
  explicit FlowField(const GridSpec& spec);
  /// Channel 0 is dx, channel 1 is dy. Throws ContractError otherwise.
  explicit FlowField(BEVGrid grid);

  static FlowField constant(const GridSpec& spec, float dx, float dy);

  int nx() const { return grid_.nx(); }
  int ny() const { return grid_.ny(); }
  float dx(int i, int j) const { return grid_.at(i, j, 0); }
  float dy(int i, int j) const { return grid_.at(i, j, 1); }
  void set(int i, int j, float dx, float dy) {
    grid_.at(i, j, 0) = dx;
    grid_.at(i, j, 1) = dy;
  }
  const BEVGrid& grid() const { return grid_; }

 private:
  BEVGrid grid_;
};

/// out(i, j) = bilinear(state, j - dx(i, j), i - dy(i, j)); reads outside
/// the raster are 0. Throws ContractError when dims differ.
BEVGrid flow_warp(const BEVGrid& state, const FlowField& flow);

struct StepOutput {
  FlowField flow;
  std::optional<BEVGrid> update;  // additive, zero when absent
};

/// (current state, latent sample, step index) -> flow and state update.
using StepFunction =
    std::function<StepOutput(const BEVGrid& state, const BEVGrid& latent, int step)>;

/// States s_t .. s_{t+T}; all share the initial state's spec.
struct StateSequence {
  std::vector<BEVGrid> states;

  int horizon() const { return static_cast<int>(states.size()) - 1; }
};

/// s_{k+1} = flow_warp(s_k, flow_k) + update_k for k = 0 .. horizon-1.
/// Throws ContractError for horizon < 1 or mismatched step output dims.
StateSequence rollout(const BEVGrid& initial, const BEVGrid& latent,
                      const StepFunction& step_fn, int horizon);

StepFunction zero_flow_step();
StepFunction constant_flow_step(float dx, float dy);

/// Seconds covered by `horizon` future frames.
inline double horizon_seconds(int horizon, double frame_period) {
  return horizon * frame_period;
}

}  // namespace bevkit
