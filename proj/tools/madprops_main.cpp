#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "madprops/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"madprops: multiproposal MCMC benchmark runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  int workers = 1;
  double adapt_target = -1.0;
  std::string scale;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--workers", workers, "worker thread count");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--adapt-target", adapt_target, "acceptance-rate target");
    cmd->add_option("--scale", scale, "proposal scale: star | fixed:<sigma>");
  };

  CLI::App* run = app.add_subcommand("run", "run replicate chains");
  CLI::App* sweep = app.add_subcommand("sweep", "sweep p and/or sigma");
  CLI::App* tune = app.add_subcommand("tune", "acceptance-rate adaptation study");
  CLI::App* limitcheck =
      app.add_subcommand("limitcheck", "distance to the large-p limit law");
  for (auto* cmd : {run, sweep, tune, limitcheck}) add_common(cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    madprops::ExperimentConfig cfg = madprops::parse_config_file(config_path);
    if (seed_set) cfg.seed = seed_override;
    if (adapt_target >= 0.0) {
      madprops::AdaptPolicy p = cfg.adapt.value_or(madprops::AdaptPolicy{});
      p.target_rate = adapt_target;
      cfg.adapt = p;
    }
    if (!scale.empty()) {
      if (scale == "star")
        cfg.scale_star = true;
      else if (scale.rfind("fixed:", 0) == 0)
        cfg.scale_fixed = std::stod(scale.substr(6));
      else
        throw madprops::ConfigError("--scale must be star or fixed:<sigma>");
    }

    if (run->parsed()) madprops::cmd_run(cfg, out_dir, workers);
    if (sweep->parsed()) madprops::cmd_sweep(cfg, out_dir, workers);
    if (tune->parsed()) madprops::cmd_tune(cfg, out_dir, workers);
    if (limitcheck->parsed()) madprops::cmd_limitcheck(cfg, out_dir, workers);
    return 0;
  } catch (const madprops::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const madprops::ParameterError& e) {
    std::fprintf(stderr, "parameter error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
