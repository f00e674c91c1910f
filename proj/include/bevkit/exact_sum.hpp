// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace bevkit {

/// Shewchuk-style error-free accumulator. value() is the correctly rounded
/// double of the exact sum, so it does not depend on the order of add()
/// calls. Inputs must be finite and the running sum must not overflow.
class ExactSum {
 public:
  void add(double x);
  double value() const;
  void clear() { partials_.clear(); }

 private:
  std::vector<double> partials_;  // non-overlapping, increasing magnitude
};

}  // namespace bevkit
