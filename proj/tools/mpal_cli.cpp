// Command-line driver: one subcommand per experiment kind.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure (including
// a trial failure fraction above the budget).

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "mpal/config.hpp"
#include "mpal/ensemble.hpp"
#include "mpal/kernels.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<double> estar;
  bool quiet = false;
};

void add_flags(CLI::App* sub, Flags& f, bool run_flags) {
  sub->add_option("--config", f.config, "YAML experiment config")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--trials", f.trials, "trials per parameter point");
  sub->add_option("--workers", f.workers, "worker threads");
  sub->add_option("--estar-override", f.estar, "energy threshold E* replacing the initial-scale value");
  if (run_flags) {
    sub->add_option("--out", f.out, "output directory");
    sub->add_flag("--quiet", f.quiet, "no progress output");
  }
}

int run(mpal::ExperimentKind kind, const Flags& f) {
  mpal::ConfigOverrides ov;
  ov.kind = kind;
  ov.seed = f.seed;
  ov.trials = f.trials;
  ov.workers = f.workers;
  ov.output = f.out;
  ov.estar = f.estar;
  mpal::ExperimentConfig cfg;
  try {
    cfg = mpal::validate_config(f.config, ov);
  } catch (const mpal::ConfigIoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mpal::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  int last_percent = -1;
  mpal::ProgressFn progress;
  if (!f.quiet) {
    progress = [&](std::uint64_t done, std::uint64_t total) {
      const int pct = static_cast<int>(100 * done / std::max<std::uint64_t>(total, 1));
      if (pct != last_percent) {
        last_percent = pct;
        std::fprintf(stderr, "\r%s: %3d%% (%llu/%llu)", std::string(mpal::kind_name(kind)).c_str(), pct,
                     static_cast<unsigned long long>(done), static_cast<unsigned long long>(total));
        if (done == total) std::fputc('\n', stderr);
      }
    };
  }

  try {
    const auto report = mpal::run_experiment(cfg, progress);
    const auto paths = mpal::write_report(report, cfg.output);
    std::cout << paths.csv.string() << "\n" << paths.summary.string() << "\n" << paths.json.string() << "\n";
    if (!f.quiet) {
      std::cerr << "isa=" << mpal::kernels::isa_name(mpal::kernels::active_isa()) << " failures=" << report.failures
                << "/" << report.work_items << " wall=" << report.wall_seconds << "s\n";
    }
    if (report.over_budget()) {
      std::cerr << "error: " << report.failures << " of " << report.work_items
                << " trials failed, above the failure budget\n";
      return kExitRuntime;
    }
  } catch (const mpal::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int validate(const Flags& f) {
  mpal::ConfigOverrides ov;
  ov.seed = f.seed;
  ov.trials = f.trials;
  ov.workers = f.workers;
  ov.estar = f.estar;
  try {
    const auto cfg = mpal::validate_config(f.config, ov);
    std::cout << mpal::config_to_json(cfg).dump(2) << "\n";
    return 0;
  } catch (const mpal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for multi-particle Anderson localization with correlated potentials"};
  app.require_subcommand(1);

  Flags flags;
  std::optional<mpal::ExperimentKind> chosen;
  for (auto kind : mpal::all_kinds()) {
    auto* sub = app.add_subcommand(std::string(mpal::kind_name(kind)), "run the " + std::string(mpal::kind_name(kind)) + " experiment");
    add_flags(sub, flags, true);
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  bool validate_only = false;
  auto* val = app.add_subcommand("validate", "check a config and print it with defaults filled in");
  add_flags(val, flags, false);
  val->callback([&validate_only] { validate_only = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (validate_only) return validate(flags);
  return run(*chosen, flags);
}
