// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bevkit/grid.hpp"

namespace bevkit {

// BVG1 layout: 4-byte magic "BVG1", then ny, nx, C as little-endian uint32,
// then ny*nx*C little-endian IEEE-754 float32 values, row-major, channels
// innermost. No trailing bytes.
inline constexpr char kGridMagic[4] = {'B', 'V', 'G', '1'};
inline constexpr std::size_t kGridHeaderBytes = 16;

std::vector<std::uint8_t> encode_grid(const BEVGrid& grid);

/// Decoded grids carry `spec` when given (dims must match), otherwise a unit
/// index-space spec. Throws FormatError on bad magic, truncation, trailing
/// bytes, zero or overflowing dimensions.
BEVGrid decode_grid(const std::vector<std::uint8_t>& bytes,
                    const std::optional<GridSpec>& spec = std::nullopt);

/// Writes via a temporary file and rename.
void write_grid(const BEVGrid& grid, const std::filesystem::path& path);
BEVGrid read_grid(const std::filesystem::path& path,
                  const std::optional<GridSpec>& spec = std::nullopt);

/// Atomic whole-file helpers shared by the scene and CLI writers.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace bevkit
