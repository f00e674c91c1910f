// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "bevkit/grid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "bevkit/errors.hpp"

namespace bevkit {
namespace {

constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 31;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_grid(const BEVGrid& grid) {
  std::vector<std::uint8_t> out;
  out.reserve(kGridHeaderBytes + grid.data().size() * 4);
  out.insert(out.end(), std::begin(kGridMagic), std::end(kGridMagic));
  put_u32(out, static_cast<std::uint32_t>(grid.ny()));
  put_u32(out, static_cast<std::uint32_t>(grid.nx()));
  put_u32(out, static_cast<std::uint32_t>(grid.channels()));
  for (float v : grid.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

BEVGrid decode_grid(const std::vector<std::uint8_t>& bytes,
                    const std::optional<GridSpec>& spec) {
  if (bytes.size() < kGridHeaderBytes) {
    throw FormatError("grid file truncated: header needs 16 bytes, got " +
                      std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kGridMagic, 4) != 0) {
    throw FormatError("grid file has bad magic (expected BVG1)");
  }
  const std::uint32_t ny = get_u32(bytes.data() + 4);
  const std::uint32_t nx = get_u32(bytes.data() + 8);
  const std::uint32_t nc = get_u32(bytes.data() + 12);
  if (ny == 0 || nx == 0 || nc == 0) {
    throw FormatError("grid file has a zero dimension");
  }
  const std::uint64_t cells = std::uint64_t{ny} * nx;
  // cells <= 2^31 keeps cells * nc below 2^63.
  const std::uint64_t count = cells <= kMaxValues ? cells * nc : cells;
  if (cells > kMaxValues || count > kMaxValues ||
      ny > static_cast<std::uint32_t>(std::numeric_limits<int>::max()) ||
      nx > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw FormatError("grid file dimensions overflow the supported size");
  }
  const std::uint64_t expected = kGridHeaderBytes + count * 4;
  if (bytes.size() < expected) {
    throw FormatError("grid file truncated: payload needs " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw FormatError("grid file has trailing bytes");
  }

  std::optional<GridSpec> resolved = spec;
  if (resolved) {
    if (resolved->nx() != static_cast<int>(nx) || resolved->ny() != static_cast<int>(ny)) {
      throw FormatError("grid file dims do not match the expected grid spec");
    }
  } else {
    try {
      resolved = GridSpec::unit(static_cast<int>(nx), static_cast<int>(ny));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("grid file dimensions unsupported: ") + e.what());
    }
  }

  std::vector<float> values(static_cast<std::size_t>(count));
  const std::uint8_t* p = bytes.data() + kGridHeaderBytes;
  for (std::size_t k = 0; k < values.size(); ++k, p += 4) {
    values[k] = std::bit_cast<float>(get_u32(p));
  }
  try {
    return BEVGrid(*resolved, static_cast<int>(nc), std::move(values));
  } catch (const ContractError& e) {
    throw FormatError(std::string("grid file payload invalid: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_grid(const BEVGrid& grid, const std::filesystem::path& path) {
  const auto bytes = encode_grid(grid);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

BEVGrid read_grid(const std::filesystem::path& path, const std::optional<GridSpec>& spec) {
  const std::string raw = read_file(path);
  return decode_grid(std::vector<std::uint8_t>(raw.begin(), raw.end()), spec);
}

}  // namespace bevkit
