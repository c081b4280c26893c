// Command-line front end: run experiments from config files, materialize
// named presets, and run the built-in invariant and gradient checks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hwqoc/checks.hpp"
#include "hwqoc/harness.hpp"

namespace {

struct CommonOpts {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "override the config seed list with one seed")
      ->each([&](const std::string&) { o.seed_set = true; });
  cmd->add_option("--out-dir", o.out_dir, "override the config output directory");
  cmd->add_option("--threads", o.threads, "max parallel seeds")
      ->check(CLI::PositiveNumber);
}

hwqoc::Config apply_overrides(hwqoc::Config cfg, const CommonOpts& o) {
  if (o.seed_set) cfg.seeds = {o.seed};
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  return cfg;
}

int print_checks(const std::vector<hwqoc::CheckResult>& results) {
  bool all_ok = true;
  for (const auto& c : results) {
    std::printf("[check] %-28s %s  (metric %.3g, threshold %.3g)\n", c.name.c_str(),
                c.pass ? "PASS" : "FAIL", c.metric, c.threshold);
    if (!c.detail.empty()) std::printf("        %s\n", c.detail.c_str());
    all_ok = all_ok && c.pass;
  }
  return all_ok ? 0 : 1;
}

int run_configs(const std::vector<hwqoc::Config>& configs, int threads) {
  namespace fs = std::filesystem;
  bool any_failed = false;
  std::vector<hwqoc::ExperimentReport> reports;
  for (const hwqoc::Config& cfg : configs) {
    const hwqoc::ExperimentReport rep = hwqoc::run_experiment(cfg, threads);
    const std::string dir = hwqoc::write_report(rep, cfg.output_dir);
    hwqoc::emit_plot_data(rep, cfg.output_dir);
    for (const auto& sr : rep.seeds) {
      if (sr.ok) {
        std::printf("[run] %s seed %llu: fidelity %.6f error %.3e evals %ld (%s)\n",
                    cfg.name.c_str(), static_cast<unsigned long long>(sr.seed),
                    sr.run.final_fidelity, sr.run.final_error, sr.run.n_evals,
                    sr.run.termination.c_str());
      } else {
        std::printf("[run] %s seed %llu: FAILED: %s\n", cfg.name.c_str(),
                    static_cast<unsigned long long>(sr.seed), sr.error.c_str());
        any_failed = true;
      }
    }
    std::printf("[run] %s aggregate: mean_error %.3e std %.3e (%d/%zu ok) -> %s\n",
                cfg.name.c_str(), rep.mean_final_error, rep.std_final_error,
                rep.n_success, rep.seeds.size(), dir.c_str());
    reports.push_back(rep);
  }
  if (reports.size() > 1) {
    // Multi-config invocations are sweeps; drop one summary row per config.
    std::vector<double> xs;
    for (const auto& r : reports) xs.push_back(r.config.hardware.pic.d0);
    const fs::path path = fs::path(reports.front().config.output_dir) / "sweep.csv";
    fs::create_directories(path.parent_path());
    hwqoc::emit_sweep_data(reports, "d0", xs, path.string());
    std::printf("[run] sweep summary -> %s\n", path.string().c_str());
  }
  return any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imperfect photonic control chains: simulator + optimizers"};
  app.require_subcommand(1);

  CommonOpts run_opts, preset_opts, check_opts, grad_opts;
  std::vector<std::string> config_paths;
  std::string preset_name;
  std::string preset_out;
  bool preset_run = false;

  CLI::App* run = app.add_subcommand("run", "run experiments from config files");
  run->add_option("configs", config_paths, "JSON config files")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(run, run_opts);

  CLI::App* preset = app.add_subcommand("preset", "materialize a named preset");
  preset->add_option("name", preset_name,
                     "one of: easy_x1, intermediate_ng2[_sade|_ppo], "
                     "hard_ng3[_sade|_ppo], pitch_sweep, dynamic_imperfections")
      ->required();
  preset->add_option("--out", preset_out, "write config file(s) here instead of stdout");
  preset->add_flag("--run", preset_run, "run the preset immediately");
  add_common(preset, preset_opts);

  CLI::App* check = app.add_subcommand("check", "run the physics invariant suite");
  add_common(check, check_opts);

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "analytic gradient vs finite differences");
  add_common(gradcheck, grad_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      std::vector<hwqoc::Config> configs;
      for (const std::string& p : config_paths)
        configs.push_back(apply_overrides(hwqoc::load_config(p), run_opts));
      return run_configs(configs, run_opts.threads);
    }
    if (*preset) {
      std::vector<hwqoc::Config> configs = hwqoc::preset(preset_name);
      for (auto& c : configs) c = apply_overrides(c, preset_opts);
      if (preset_run) return run_configs(configs, preset_opts.threads);
      if (preset_out.empty()) {
        for (const auto& c : configs) std::cout << hwqoc::dump_config(c);
      } else {
        std::filesystem::create_directories(preset_out);
        for (const auto& c : configs) {
          const auto path = std::filesystem::path(preset_out) / (c.name + ".json");
          std::ofstream f(path, std::ios::binary);
          f << hwqoc::dump_config(c);
          std::printf("[preset] wrote %s\n", path.string().c_str());
        }
      }
      return 0;
    }
    if (*check)
      return print_checks(hwqoc::run_invariant_checks(check_opts.seed_set
                                                          ? check_opts.seed
                                                          : 1));
    if (*gradcheck)
      return print_checks({hwqoc::run_gradcheck(grad_opts.seed_set ? grad_opts.seed : 1)});
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
