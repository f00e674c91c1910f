// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace bevkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid GridSpec, DepthBins, rig or config-file content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition (dimension mismatch, length mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed grid file or scene record.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Scene generator could not satisfy the requested configuration.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bevkit
