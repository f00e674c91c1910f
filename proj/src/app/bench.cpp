// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "bevkit/app.hpp"
#include "bevkit/errors.hpp"
#include "bevkit/future.hpp"
#include "bevkit/grid_io.hpp"
#include "bevkit/temporal.hpp"

namespace bevkit {
namespace {

constexpr double kBenchCell = 0.8;
constexpr int kBenchChannels = 4;

GridSpec bench_spec(int size, double cell) {
  const double half = 0.5 * size * kBenchCell;
  return GridSpec::make(-half, half, -half, half, cell);
}

BEVGrid random_grid(const GridSpec& spec, int channels, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  BEVGrid g(spec, channels);
  for (float& v : g.data()) v = unit(rng);
  return g;
}

std::string checksum(const BEVGrid& g) {
  const auto bytes = encode_grid(g);
  return fnv1a_hex({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

BenchRow time_op(const std::string& op, int size, int reps,
                 const std::function<BEVGrid()>& run) {
  BenchRow row{op, size, {}, {}};
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const BEVGrid out = run();
    const auto t1 = std::chrono::steady_clock::now();
    row.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    const std::string sum = checksum(out);
    if (r == 0) {
      row.checksum = sum;
    } else if (sum != row.checksum) {
      throw Error("bench: " + op + " at size " + std::to_string(size) +
                  " is not deterministic across repetitions");
    }
  }
  return row;
}

}  // namespace

double BenchRow::median() const {
  if (seconds.empty()) return 0.0;
  std::vector<double> s = seconds;
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double BenchRow::p95() const {
  if (seconds.empty()) return 0.0;
  std::vector<double> s = seconds;
  std::sort(s.begin(), s.end());
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(s.size())));
  return s[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<BenchRow> cmd_bench(const RunConfig& config, const std::filesystem::path& out,
                                std::ostream& log) {
  config.validate();
  const int reps = config.bench.repetitions;
  std::vector<BenchRow> rows;
  for (int size : config.bench.sizes) {
    std::mt19937_64 rng(config.scene.seed + static_cast<std::uint64_t>(size));
    const GridSpec spec = bench_spec(size, kBenchCell);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    LiftedCloud cloud;
    cloud.channels = kBenchChannels;
    const std::size_t points = static_cast<std::size_t>(size) * size * 4;
    for (std::size_t p = 0; p < points; ++p) {
      cloud.positions.push_back({spec.x_min() + (spec.x_max() - spec.x_min()) * unit(rng),
                                 spec.y_min() + (spec.y_max() - spec.y_min()) * unit(rng),
                                 -4.0 + 6.0 * unit(rng)});
      cloud.weights.push_back(static_cast<float>(unit(rng)));
      for (int c = 0; c < kBenchChannels; ++c) {
        cloud.features.push_back(static_cast<float>(unit(rng)));
      }
    }
    rows.push_back(time_op("pillar_pool", size, reps, [&] { return pillar_pool(cloud, spec); }));

    const BEVGrid grid = random_grid(spec, kBenchChannels, rng);
    const EgoPose motion = EgoPose::make(0.1, 1.3, -0.7);
    rows.push_back(time_op("align", size, reps, [&] { return align(grid, motion); }));

    FlowField flow(spec);
    for (int i = 0; i < spec.ny(); ++i) {
      for (int j = 0; j < spec.nx(); ++j) {
        const double a = 2.0 * std::numbers::pi * i / spec.ny();
        const double b = 2.0 * std::numbers::pi * j / spec.nx();
        flow.set(i, j, static_cast<float>(1.5 * std::sin(a)), static_cast<float>(1.5 * std::cos(b)));
      }
    }
    rows.push_back(time_op("flow_warp", size, reps, [&] { return flow_warp(grid, flow); }));

    const GridSpec fine = bench_spec(size, 0.5 * kBenchCell);
    rows.push_back(time_op("grid_sample", size, reps, [&] { return grid_sample(grid, fine); }));
  }

  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  std::ostringstream timings, sums, manifest;
  timings << "op,size,repetitions,median_s,p95_s\n";
  sums << "op,size,checksum\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%zu,%.6e,%.6e\n", r.op.c_str(), r.size,
                  r.seconds.size(), r.median(), r.p95());
    timings << buf;
    sums << r.op << ',' << r.size << ',' << r.checksum << '\n';
    log << buf;
  }
  manifest << "# bevkit run manifest\n"
           << "command bench\n"
           << "grid_format BVG1\n"
           << "seed " << config.scene.seed << '\n'
           << "config_hash " << fnv1a_hex(config.canonical()) << '\n';
  std::istringstream cfg(config.canonical());
  for (std::string line; std::getline(cfg, line);) manifest << "config " << line << '\n';
  write_file_atomic(out / "bench.txt", timings.str());
  write_file_atomic(out / "checksums.txt", sums.str());
  write_file_atomic(out / "manifest.txt", manifest.str());
  return rows;
}

void cmd_dump(const std::filesystem::path& path, const std::filesystem::path& out,
              const std::string& format, int channel) {
  const BEVGrid g = read_grid(path);
  if (channel < 0 || channel >= g.channels()) {
    throw ConfigError("dump: channel " + std::to_string(channel) + " out of range [0, " +
                      std::to_string(g.channels()) + ")");
  }
  std::ostringstream os;
  char buf[40];
  if (format == "text") {
    os << "# " << g.ny() << " rows x " << g.nx() << " cols, channel " << channel
       << ", row 0 at y_min\n";
    for (int i = 0; i < g.ny(); ++i) {
      for (int j = 0; j < g.nx(); ++j) {
        std::snprintf(buf, sizeof buf, "%s%.9g", j == 0 ? "" : " ", g.at(i, j, channel));
        os << buf;
      }
      os << '\n';
    }
  } else if (format == "pgm") {
    float lo = std::numeric_limits<float>::infinity();
    float hi = -lo;
    for (int i = 0; i < g.ny(); ++i) {
      for (int j = 0; j < g.nx(); ++j) {
        const float v = g.at(i, j, channel);
        if (std::isfinite(v)) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    // Top image row is y_max so the picture reads like a map.
    os << "P2\n" << g.nx() << ' ' << g.ny() << "\n255\n";
    for (int i = g.ny() - 1; i >= 0; --i) {
      for (int j = 0; j < g.nx(); ++j) {
        const float v = g.at(i, j, channel);
        int level = 0;
        if (std::isfinite(v) && hi > lo) {
          level = static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo)));
        }
        os << (j == 0 ? "" : " ") << level;
      }
      os << '\n';
    }
  } else {
    throw ConfigError("dump: format must be 'text' or 'pgm', got '" + format + "'");
  }
  write_file_atomic(out, os.str());
}

}  // namespace bevkit
