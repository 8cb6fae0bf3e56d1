// Command-line driver for scene generation, labelling, training and rollouts.
#include "nbv/core/error.hpp"
#include "nbv/harness/config.hpp"
#include "nbv/harness/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
  std::string config;
  std::string profile;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t workers = 1;
  bool quiet = false;
};

nbv::harness::ExperimentConfig resolve(const Common& c) {
  using nbv::harness::ExperimentConfig;
  ExperimentConfig cfg = c.config.empty() ? nbv::harness::default_config(c.profile.empty() ? "desk" : c.profile)
                                          : ExperimentConfig::load(c.config);
  if (!c.profile.empty() && c.profile != cfg.profile) {
    const auto out = cfg.output_dir;
    cfg.profile = c.profile;
    (void)cfg.vin_profile();
    if (c.config.empty()) cfg.output_dir = out;
  }
  if (c.seed_set) cfg.seed = c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Next-best-view planning lab"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub, bool run_dir_only) {
    sub->add_option("--out", common.out, run_dir_only ? "Run directory" : "Output directory");
    sub->add_flag("--quiet", common.quiet, "Suppress progress output");
    if (run_dir_only) return;
    sub->add_option("--config", common.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--profile", common.profile, "Profile")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--seed", common.seed, "Global seed")->each([&](const std::string&) { common.seed_set = true; });
    sub->add_option("--workers", common.workers, "Scene-level worker threads")->check(CLI::PositiveNumber);
  };

  auto* gen_scenes = app.add_subcommand("gen-scenes", "Generate procedural scenes and ground truth");
  auto* gen_labels = app.add_subcommand("gen-labels", "Compute oracle RRI labels and feature bundles");
  auto* train = app.add_subcommand("train", "Train the view introspection network");
  auto* rollout = app.add_subcommand("rollout", "Run policies on held-out scenes");
  auto* report = app.add_subcommand("report", "Summarize a completed run");
  for (auto* s : {gen_scenes, gen_labels, train, rollout}) add_common(s, false);
  add_common(report, true);

  CLI11_PARSE(app, argc, argv);

  try {
    nbv::harness::RunOptions opt{common.workers, common.quiet};
    if (report->parsed()) {
      nbv::require(!common.out.empty(), nbv::ErrorKind::config, "report needs --out <run dir>");
      nbv::harness::cmd_report(common.out, opt);
      return 0;
    }
    const auto cfg = resolve(common);
    if (gen_scenes->parsed()) nbv::harness::cmd_gen_scenes(cfg, opt);
    if (gen_labels->parsed()) nbv::harness::cmd_gen_labels(cfg, opt);
    if (train->parsed()) nbv::harness::cmd_train(cfg, opt);
    if (rollout->parsed()) nbv::harness::cmd_rollout(cfg, opt);
  } catch (const nbv::Error& e) {
    std::cerr << "error[" << nbv::to_string(e.kind()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
