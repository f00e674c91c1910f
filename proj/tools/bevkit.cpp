// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

// bevkit: synth | pipeline | eval | bench | dump

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "bevkit/app.hpp"
#include "bevkit/errors.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string det_spec, map_spec, motion_spec;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "scene / generator seed");
  cmd->add_option("--det-spec", f.det_spec, "detection grid x_min,x_max,y_min,y_max,cell");
  cmd->add_option("--map-spec", f.map_spec, "map grid x_min,x_max,y_min,y_max,cell");
  cmd->add_option("--motion-spec", f.motion_spec, "motion grid x_min,x_max,y_min,y_max,cell");
}

bevkit::RunConfig resolve(const CommonFlags& f) {
  bevkit::RunConfig c = f.config.empty() ? bevkit::RunConfig{} : bevkit::load_config(f.config);
  if (f.seed) c.scene.seed = *f.seed;
  if (!f.det_spec.empty()) c.scene.det_spec = bevkit::GridSpec::parse(f.det_spec);
  if (!f.map_spec.empty()) c.scene.map_spec = bevkit::GridSpec::parse(f.map_spec);
  if (!f.motion_spec.empty()) c.scene.motion_spec = bevkit::GridSpec::parse(f.motion_spec);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bevkit: BEV perception and prediction core"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string out, scene, pred, grid, format = "text", step;
  int channel = 0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic scene directory");
  add_common(synth, flags);
  synth->add_option("--out", out, "scene directory to write")->required();

  auto* pipeline = app.add_subcommand("pipeline", "run the full pipeline on a scene");
  add_common(pipeline, flags);
  pipeline->add_option("--scene", scene, "scene directory")->required()->check(CLI::ExistingDirectory);
  pipeline->add_option("--out", out, "output directory")->required();
  pipeline->add_option("--step", step, "future step function")->check(CLI::IsMember({"gt", "zero"}));

  auto* eval = app.add_subcommand("eval", "score a prediction directory against a scene");
  eval->add_option("--scene", scene, "scene directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--pred", pred, "prediction directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--out", out, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "time the grid kernels");
  add_common(bench, flags);
  bench->add_option("--out", out, "report directory")->required();

  auto* dump = app.add_subcommand("dump", "print one grid channel as text or PGM");
  dump->add_option("grid", grid, "BVG1 file")->required()->check(CLI::ExistingFile);
  dump->add_option("--out", out, "file to write")->required();
  dump->add_option("--format", format, "text or pgm")->check(CLI::IsMember({"text", "pgm"}));
  dump->add_option("--channel", channel, "channel index");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      bevkit::cmd_synth(resolve(flags), out, std::cerr);
    } else if (pipeline->parsed()) {
      bevkit::RunConfig c = resolve(flags);
      if (!step.empty()) c.pipeline.step = step;
      bevkit::cmd_pipeline(c, scene, out, std::cerr);
    } else if (eval->parsed()) {
      bevkit::cmd_eval(scene, pred, out, std::cerr);
    } else if (bench->parsed()) {
      bevkit::cmd_bench(resolve(flags), out, std::cerr);
    } else if (dump->parsed()) {
      bevkit::cmd_dump(grid, out, format, channel);
    }
  } catch (const bevkit::ConfigError& e) {
    std::cerr << "bevkit: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bevkit: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
