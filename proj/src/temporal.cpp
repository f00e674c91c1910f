// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bevkit/temporal.hpp"

#include <cmath>
#include <string>

#include "bevkit/errors.hpp"
#include "bevkit/parallel.hpp"
#include "bevkit/sampling.hpp"

namespace bevkit {

EgoPose EgoPose::make(double theta, double tx, double ty) {
  if (!std::isfinite(theta) || !std::isfinite(tx) || !std::isfinite(ty)) {
    throw ConfigError("ego pose must be finite");
  }
  return {wrap_angle(theta), tx, ty};
}

void EgoPose::apply(double x, double y, double& ox, double& oy) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double nx = c * x - s * y + tx;
  const double ny = s * x + c * y + ty;
  ox = nx;
  oy = ny;
}

EgoPose compose(const EgoPose& outer, const EgoPose& inner) {
  double tx = 0.0, ty = 0.0;
  outer.apply(inner.tx, inner.ty, tx, ty);
  return {wrap_angle(outer.theta + inner.theta), tx, ty};
}

EgoPose inverse(const EgoPose& pose) {
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  return {wrap_angle(-pose.theta), -(c * pose.tx + s * pose.ty),
          -(-s * pose.tx + c * pose.ty)};
}

BEVGrid align(const BEVGrid& past, const EgoPose& motion) {
  if (!past.all_finite()) throw ContractError("align: grid not finite");
  if (motion == EgoPose::identity()) return past;
  const GridSpec& s = past.spec();
  const EgoPose back = inverse(motion);
  BEVGrid out(s, past.channels());
  parallel_for(static_cast<std::size_t>(s.ny()), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const int row = static_cast<int>(i);
      for (int j = 0; j < s.nx(); ++j) {
        double px = 0.0, py = 0.0;
        back.apply(s.center_x(j), s.center_y(row), px, py);
        sample_bilinear(past, s.column_of(px), s.row_of(py), out.cell(row, j));
      }
    }
  });
  return out;
}

std::vector<BEVGrid> align_sequence(std::span<const BEVGrid> grids,
                                    std::span<const EgoPose> motions) {
  if (grids.empty()) throw ContractError("align_sequence: no frames");
  if (motions.size() + 1 != grids.size()) {
    throw ContractError("align_sequence: " + std::to_string(grids.size()) +
                        " frames need " + std::to_string(grids.size() - 1) +
                        " motions, got " + std::to_string(motions.size()));
  }
  for (const BEVGrid& g : grids) {
    if (!(g.spec() == grids.back().spec()) || g.channels() != grids.back().channels()) {
      throw ContractError("align_sequence: frames do not share one grid spec");
    }
  }
  std::vector<BEVGrid> out;
  out.reserve(grids.size());
  for (std::size_t k = 0; k + 1 < grids.size(); ++k) {
    out.push_back(align(grids[k], motions[k]));
  }
  out.push_back(grids.back());
  return out;
}

std::vector<EgoPose> compose_to_present(std::span<const EgoPose> steps) {
  std::vector<EgoPose> direct(steps.size());
  EgoPose acc = EgoPose::identity();
  for (std::size_t k = steps.size(); k-- > 0;) {
    acc = compose(acc, steps[k]);
    direct[k] = acc;
  }
  return direct;
}

}  // namespace bevkit
