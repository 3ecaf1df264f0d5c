// atx: attack-transferability experiment driver.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "atx/commands.hpp"
#include "atx/error.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct RunOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  bool dry_run = false;
};

void add_run_options(CLI::App* cmd, RunOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "Run-config file");
  cmd->add_option("--set", opts.overrides, "Override a config value, e.g. --set model.epochs=5")
      ->take_all()
      ->expected(1, -1);
  cmd->add_flag("--dry-run", opts.dry_run, "Validate the config and print the job plan only");
}

atx::RunConfig build_config(const RunOptions& opts) {
  atx::RunConfig config = opts.config_path.empty() ? atx::RunConfig{} : atx::load_config(opts.config_path);
  for (const auto& o : opts.overrides) atx::apply_override(config, o);
  config.validate();
  return config;
}

int exit_code(atx::ErrorKind kind) {
  switch (kind) {
    case atx::ErrorKind::kConfig: return kExitConfig;
    case atx::ErrorKind::kData: return kExitData;
    case atx::ErrorKind::kRuntime: return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attack transferability experiments on CICIDS-2017 flow records"};
  app.require_subcommand(1);
  app.set_version_flag("--version", atx::kToolVersion);

  RunOptions opts;
  auto* ingest = app.add_subcommand("ingest", "Load, clean and cache the dataset; print the class histogram");
  auto* multiclass = app.add_subcommand("multiclass", "Train and evaluate the 15-class model");
  auto* transfer = app.add_subcommand("transfer", "Build transfer matrices for every configured regime");
  auto* rfe = app.add_subcommand("rfe", "Rank features for single attacks and attack pairs");
  auto* report = app.add_subcommand("report", "Re-render figures and tables from stored results");
  for (auto* cmd : {ingest, multiclass, transfer, rfe, report}) add_run_options(cmd, opts);

  auto* fixtures = app.add_subcommand("fixtures", "Synthetic datasets");
  fixtures->require_subcommand(1);
  auto* generate = fixtures->add_subcommand("generate", "Write a synthetic dataset with known ground truth");
  std::string kind = "cicids", out_dir = "fixture";
  atx::FixtureSpec spec;
  generate->add_option("--kind", kind, "cicids or planted")->capture_default_str();
  generate->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
  generate->add_option("--rows", spec.rows, "Approximate number of rows")->capture_default_str();
  generate->add_option("--min-per-class", spec.min_per_class, "Lower bound on rows per class")->capture_default_str();
  generate->add_option("--separation", spec.separation, "Class mean offset in standard deviations")
      ->capture_default_str();
  generate->add_option("--nonfinite-rate", spec.nonfinite_rate, "Fraction of rows given NaN/Inf rate values")
      ->capture_default_str();
  generate->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const atx::CommandIo io{std::cout, std::cerr};
  try {
    if (generate->parsed()) {
      atx::cmd_fixtures_generate(atx::parse_fixture_kind(kind), spec, out_dir, io);
      return 0;
    }
    const auto config = build_config(opts);
    if (ingest->parsed()) atx::cmd_ingest(config, io, opts.dry_run);
    else if (multiclass->parsed()) atx::cmd_multiclass(config, io, opts.dry_run);
    else if (transfer->parsed()) atx::cmd_transfer(config, io, opts.dry_run);
    else if (rfe->parsed()) atx::cmd_rfe(config, io, opts.dry_run);
    else if (report->parsed()) atx::cmd_report(config, io, opts.dry_run);
    return 0;
  } catch (const atx::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
