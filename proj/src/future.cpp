// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bevkit/future.hpp"

#include <cmath>
#include <string>

#include "bevkit/errors.hpp"
#include "bevkit/parallel.hpp"
#include "bevkit/sampling.hpp"

namespace bevkit {

LatentMap::LatentMap(BEVGrid mean, BEVGrid log_variance)
    : mean_(std::move(mean)), log_variance_(std::move(log_variance)) {
  if (!(mean_.spec() == log_variance_.spec()) ||
      mean_.channels() != log_variance_.channels()) {
    throw ContractError("latent map: mean and log-variance shapes differ");
  }
  if (!mean_.all_finite() || !log_variance_.all_finite()) {
    throw ContractError("latent map: parameters must be finite");
  }
}

BEVGrid sample_latent(const LatentMap& map, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto mean = map.mean().data();
  const auto log_var = map.log_variance().data();
  std::vector<float> out(mean.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double eps = normal(rng);
    const double v = mean[k] + std::exp(0.5 * static_cast<double>(log_var[k])) * eps;
    if (!std::isfinite(static_cast<float>(v))) {
      throw ContractError("sample_latent: sample overflowed (log-variance too large)");
    }
    out[k] = static_cast<float>(v);
  }
  return BEVGrid(map.mean().spec(), map.dim(), std::move(out));
}

BEVGrid sample_latent(const LatentMap& map, std::optional<std::uint64_t> seed) {
  if (!seed) return map.mean();
  std::mt19937_64 rng(*seed);
  return sample_latent(map, rng);
}

FlowField::FlowField(const GridSpec& spec) : grid_(spec, 2) {}

FlowField::FlowField(BEVGrid grid) : grid_(std::move(grid)) {
  if (grid_.channels() != 2) {
    throw ContractError("flow field needs exactly 2 channels (dx, dy), got " +
                        std::to_string(grid_.channels()));
  }
}

FlowField FlowField::constant(const GridSpec& spec, float dx, float dy) {
  FlowField f(spec);
  for (int i = 0; i < f.ny(); ++i) {
    for (int j = 0; j < f.nx(); ++j) f.set(i, j, dx, dy);
  }
  return f;
}

BEVGrid flow_warp(const BEVGrid& state, const FlowField& flow) {
  if (flow.nx() != state.nx() || flow.ny() != state.ny()) {
    throw ContractError("flow_warp: flow is " + std::to_string(flow.ny()) + "x" +
                        std::to_string(flow.nx()) + " but state is " +
                        std::to_string(state.ny()) + "x" + std::to_string(state.nx()));
  }
  if (!state.all_finite() || !flow.grid().all_finite()) {
    throw ContractError("flow_warp: non-finite input");
  }
  BEVGrid out(state.spec(), state.channels());
  parallel_for(static_cast<std::size_t>(state.ny()), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const int row = static_cast<int>(i);
      for (int j = 0; j < state.nx(); ++j) {
        const double dx = flow.dx(row, j);
        const double dy = flow.dy(row, j);
        if (dx == 0.0 && dy == 0.0) {
          auto src = state.cell(row, j);
          std::copy(src.begin(), src.end(), out.cell(row, j).begin());
          continue;
        }
        sample_bilinear(state, j - dx, row - dy, out.cell(row, j));
      }
    }
  });
  return out;
}

StateSequence rollout(const BEVGrid& initial, const BEVGrid& latent,
                      const StepFunction& step_fn, int horizon) {
  if (horizon < 1) throw ContractError("rollout: horizon must be >= 1");
  if (latent.nx() != initial.nx() || latent.ny() != initial.ny()) {
    throw ContractError("rollout: latent sample does not match the state grid");
  }
  StateSequence seq;
  seq.states.reserve(static_cast<std::size_t>(horizon) + 1);
  seq.states.push_back(initial);
  for (int k = 0; k < horizon; ++k) {
    const BEVGrid& current = seq.states.back();
    StepOutput step = step_fn(current, latent, k);
    if (step.flow.nx() != current.nx() || step.flow.ny() != current.ny()) {
      throw ContractError("rollout step " + std::to_string(k) +
                          ": flow dims do not match the state");
    }
    BEVGrid next = flow_warp(current, step.flow);
    if (step.update) {
      const BEVGrid& upd = *step.update;
      if (upd.nx() != next.nx() || upd.ny() != next.ny() ||
          upd.channels() != next.channels()) {
        throw ContractError("rollout step " + std::to_string(k) +
                            ": update dims do not match the state");
      }
      auto dst = next.data();
      auto add = upd.data();
      for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += add[e];
    }
    seq.states.push_back(std::move(next));
  }
  return seq;
}

StepFunction zero_flow_step() {
  return [](const BEVGrid& state, const BEVGrid&, int) {
    return StepOutput{FlowField(state.spec()), std::nullopt};
  };
}

StepFunction constant_flow_step(float dx, float dy) {
  return [dx, dy](const BEVGrid& state, const BEVGrid&, int) {
    return StepOutput{FlowField::constant(state.spec(), dx, dy), std::nullopt};
  };
}

}  // namespace bevkit
