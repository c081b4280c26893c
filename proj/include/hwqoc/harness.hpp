#pragma once

// Experiment orchestration: seed realization, optimizer dispatch, parallel
// per-seed runs, and report emission (CSV traces, JSON summaries, aggregate,
// plot data). Every output byte except wall-clock fields is determined by
// (config, seed).

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hwqoc/config.hpp"
#include "hwqoc/e2e.hpp"
#include "hwqoc/ppo.hpp"
#include "hwqoc/report.hpp"
#include "hwqoc/sade_adam.hpp"

namespace hwqoc {

// Single-qubit target pool: Clifford+T generators and the composite forms
// used by the random-task benchmarks.
inline const std::array<const char*, 24>& gate_pool() {
  static const std::array<const char*, 24> pool = {
      "I",  "X",  "Y",  "Z",  "H",   "S",   "T",   "SH",  "HS",  "ZH",  "YH",
      "XH", "XS", "YS", "ZS", "SZ",  "HX",  "SY",  "HSX", "HSY", "HSZ", "XHS",
      "YHS", "ZHS"};
  return pool;
}

// First n_gates atoms get a uniform draw from the pool (with replacement),
// the rest are identity.
inline std::vector<std::string> random_gate_set(int n_gates, int n_atoms,
                                                std::uint64_t seed) {
  detail::require(n_atoms >= 1, "random_gate_set: n_atoms must be >= 1");
  detail::require(n_gates >= 0 && n_gates <= n_atoms,
                  "random_gate_set: n_gates must be in [0, n_atoms]");
  std::vector<std::string> out(n_atoms, "I");
  Rng rng(seed, "gate_set");
  for (int i = 0; i < n_gates; ++i)
    out[i] = gate_pool()[rng.index(gate_pool().size())];
  return out;
}

// Config seeds left null are derived from the run seed, so distinct seeds see
// distinct fabrication/noise realizations unless the config pins them.
inline HardwareModel make_hardware(const Config& cfg, std::uint64_t run_seed) {
  HardwareModel hw = cfg.hardware;
  hw.geometry_seed =
      cfg.geometry_seed ? *cfg.geometry_seed : derive_seed(run_seed, "hw_geometry");
  hw.imperfections.seed = cfg.imperfection_seed
                              ? *cfg.imperfection_seed
                              : derive_seed(run_seed, "hw_imperfections");
  return hw;
}

inline QuantumTask make_task(const Config& cfg, std::uint64_t run_seed) {
  QuantumTask task = cfg.task;
  if (cfg.random_gates) {
    const std::uint64_t gs =
        cfg.gate_seed ? *cfg.gate_seed : derive_seed(run_seed, "gate_set_seed");
    task.gate_strings = random_gate_set(cfg.random_n_gates, task.n_atoms, gs);
  }
  return task;
}

inline RunResult run_single(const Config& cfg, std::uint64_t seed) {
  const HardwareModel hw = make_hardware(cfg, seed);
  const QuantumTask task = make_task(cfg, seed);
  const std::string& m = cfg.optimizer.method;
  if (m == "e2e") return train_e2e(hw, task, cfg.constants, cfg.optimizer.e2e, seed);
  Simulator sim(hw, task, cfg.constants);
  if (m == "sade_adam")
    return hybrid_run(sim, cfg.optimizer.n_segments, cfg.optimizer.sade,
                      cfg.optimizer.adam, seed);
  if (m == "ppo") return train_ppo(sim, cfg.optimizer.n_segments, cfg.optimizer.ppo, seed);
  throw std::invalid_argument("unknown optimizer method '" + m + "'");
}

struct SeedReport {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // set when ok is false
  RunResult run;
};

struct ExperimentReport {
  Config config;
  std::uint64_t config_hash = 0;
  std::vector<SeedReport> seeds;
  int n_success = 0;
  double mean_final_error = 0.0, std_final_error = 0.0;
  double mean_episodes = 0.0, std_episodes = 0.0;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  for (double x : xs) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(xs.size()));
}

}  // namespace detail

// Runs every seed (in parallel up to `threads`) and fills the aggregate over
// the successful ones. Pure compute; writing happens in write_report.
inline ExperimentReport run_experiment(const Config& cfg, int threads = 1) {
  detail::require(!cfg.seeds.empty(), "config must list at least one seed");
  ExperimentReport rep;
  rep.config = cfg;
  rep.config_hash = config_hash(cfg);
  rep.seeds.resize(cfg.seeds.size());

  const int n = static_cast<int>(cfg.seeds.size());
  const int pool = std::max(1, std::min(threads, n));
  auto work = [&](int i) {
    SeedReport& sr = rep.seeds[i];
    sr.seed = cfg.seeds[i];
    try {
      sr.run = run_single(cfg, sr.seed);
      sr.ok = true;
    } catch (const std::exception& e) {
      sr.ok = false;
      sr.error = e.what();
    }
  };
  if (pool == 1) {
    for (int i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> ts;
    std::atomic<int> next{0};
    for (int w = 0; w < pool; ++w)
      ts.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) work(i);
      });
    for (auto& t : ts) t.join();
  }

  std::vector<double> errs, eps;
  for (const SeedReport& sr : rep.seeds) {
    if (!sr.ok) continue;
    ++rep.n_success;
    errs.push_back(sr.run.final_error);
    eps.push_back(static_cast<double>(sr.run.trace.size()));
  }
  detail::mean_std(errs, rep.mean_final_error, rep.std_final_error);
  detail::mean_std(eps, rep.mean_episodes, rep.std_episodes);
  return rep;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void write_trace_csv(const std::vector<TracePoint>& trace,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "iteration,best_cost,fidelity,wall_ms\n";
  char buf[160];
  for (const TracePoint& p : trace) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.3f\n", p.iteration,
                  p.best_cost, p.fidelity, p.wall_ms);
    out << buf;
  }
}

inline Json schedule_to_json(const MatD& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json seed_summary_json(const SeedReport& sr, const ExperimentReport& rep) {
  Json j;
  j["seed"] = sr.seed;
  j["config_hash"] = hash_hex(rep.config_hash);
  j["method"] = rep.config.optimizer.method;
  j["ok"] = sr.ok;
  if (!sr.ok) {
    j["error"] = sr.error;
    return j;
  }
  const RunResult& r = sr.run;
  j["gate_strings"] = r.gate_strings;
  j["final_fidelity"] = r.final_fidelity;
  j["final_error"] = r.final_error;
  j["termination"] = r.termination;
  j["episodes"] = r.trace.size();
  j["n_evals"] = r.n_evals;
  j["switch_iteration"] = r.switch_iteration;
  j["wall_ms"] = r.wall_ms;
  j["best_schedule"] = schedule_to_json(r.best_schedule);
  return j;
}

// Directory layout: <out_dir>/<name>/seed_<s>.csv + seed_<s>.json +
// aggregate.json. Returns the experiment directory.
inline std::string write_report(const ExperimentReport& rep,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(out_dir) / rep.config.name;
  fs::create_directories(dir);

  for (const SeedReport& sr : rep.seeds) {
    const std::string stem = "seed_" + std::to_string(sr.seed);
    if (sr.ok) write_trace_csv(sr.run.trace, (dir / (stem + ".csv")).string());
    std::ofstream js(dir / (stem + ".json"), std::ios::binary);
    js << seed_summary_json(sr, rep).dump(2) << "\n";
  }

  Json agg;
  agg["name"] = rep.config.name;
  agg["config_hash"] = hash_hex(rep.config_hash);
  agg["config"] = to_json(rep.config);
  agg["n_seeds"] = rep.seeds.size();
  agg["n_success"] = rep.n_success;
  Json per_seed = Json::array();
  for (const SeedReport& sr : rep.seeds) {
    Json e;
    e["seed"] = sr.seed;
    e["ok"] = sr.ok;
    if (sr.ok) {
      e["final_error"] = sr.run.final_error;
      e["final_fidelity"] = sr.run.final_fidelity;
      e["episodes"] = sr.run.trace.size();
      e["termination"] = sr.run.termination;
      e["gate_strings"] = sr.run.gate_strings;
    } else {
      e["error"] = sr.error;
    }
    per_seed.push_back(std::move(e));
  }
  agg["per_seed"] = per_seed;
  agg["final_error"] = {{"mean", rep.mean_final_error}, {"std", rep.std_final_error}};
  agg["episodes"] = {{"mean", rep.mean_episodes}, {"std", rep.std_episodes}};
  std::ofstream out(dir / "aggregate.json", std::ios::binary);
  out << agg.dump(2) << "\n";
  return dir.string();
}

// Error-vs-episode curve across seeds: per-iteration mean and std of the
// best-cost and current-fidelity columns. Shorter traces carry their last
// value forward (best cost is monotone, so the extension is exact for it).
inline void emit_plot_data(const ExperimentReport& rep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(out_dir) / rep.config.name;
  fs::create_directories(dir);

  std::size_t len = 0;
  std::vector<const std::vector<TracePoint>*> traces;
  for (const SeedReport& sr : rep.seeds)
    if (sr.ok && !sr.run.trace.empty()) {
      traces.push_back(&sr.run.trace);
      len = std::max(len, sr.run.trace.size());
    }

  std::ofstream out(dir / "curve.csv", std::ios::binary);
  out << "iteration,mean_best_cost,std_best_cost,mean_fidelity,std_fidelity,n_seeds\n";
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> bc, fid;
    for (const auto* t : traces) {
      const TracePoint& p = (*t)[std::min(i, t->size() - 1)];
      bc.push_back(p.best_cost);
      fid.push_back(p.fidelity);
    }
    double mb, sb, mf, sf;
    detail::mean_std(bc, mb, sb);
    detail::mean_std(fid, mf, sf);
    out << i << "," << detail::fmt_double(mb) << "," << detail::fmt_double(sb)
        << "," << detail::fmt_double(mf) << "," << detail::fmt_double(sf) << ","
        << traces.size() << "\n";
  }
}

// Sweep dots (e.g. error vs channel pitch): one row per experiment.
inline void emit_sweep_data(const std::vector<ExperimentReport>& reps,
                            const std::string& xlabel, const std::vector<double>& xs,
                            const std::string& path) {
  detail::require(reps.size() == xs.size(), "emit_sweep_data: one x per report");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << xlabel << ",mean_final_error,std_final_error,n_success\n";
  for (std::size_t i = 0; i < reps.size(); ++i)
    out << detail::fmt_double(xs[i]) << ","
        << detail::fmt_double(reps[i].mean_final_error) << ","
        << detail::fmt_double(reps[i].std_final_error) << "," << reps[i].n_success
        << "\n";
}

// Named experiment presets. Most names map to one config; pitch_sweep expands
// to five (one per channel pitch).
inline std::vector<std::string> preset_names() {
  return {"easy_x1",          "intermediate_ng2", "intermediate_ng2_sade",
          "intermediate_ng2_ppo", "hard_ng3",     "hard_ng3_sade",
          "hard_ng3_ppo",     "pitch_sweep",      "dynamic_imperfections"};
}

inline std::vector<Config> preset(const std::string& name) {
  Json base = {
      {"name", name},
      {"hardware",
       {{"pic", {{"n_channels", 3}}},
        {"lattice", {{"w0", 2.0}, {"spacing", 3.0}}}}},
      {"quantum", {{"task", {{"gate_strings", {"X", "I", "I"}}, {"T_g", 0.1}, {"t_steps", 100}}}}},
      {"optimizer", {{"method", "e2e"}, {"n_segments", 20}}},
      {"seeds", {1, 2, 3, 4, 5}},
      {"output_dir", "out"},
  };
  // Presets pin the gate seed so the drawn task is one fixed, identity-free
  // gate set; the run seeds then vary fabrication and optimizer randomness.
  auto random_task = [&](int n_gates) {
    base["quantum"]["task"].erase("gate_strings");
    base["quantum"]["task"]["random_gates"] = {{"n_gates", n_gates},
                                               {"gate_seed", 7}};
  };

  if (name == "easy_x1") {
    base["optimizer"]["method"] = "sade_adam";
    // The refinement lr ladder shrinks fast above F = 0.99; a hotter base
    // rate gets this task below 1e-3 error within a laptop-scale budget.
    base["optimizer"]["adam"] = {
        {"lr", 1e-3}, {"max_steps", 100000}, {"stop_fidelity", 0.9995}};
  } else if (name == "intermediate_ng2" || name == "intermediate_ng2_sade" ||
             name == "intermediate_ng2_ppo") {
    random_task(2);
    if (name == "intermediate_ng2_sade") base["optimizer"]["method"] = "sade_adam";
    if (name == "intermediate_ng2_ppo") base["optimizer"]["method"] = "ppo";
  } else if (name == "hard_ng3" || name == "hard_ng3_sade" || name == "hard_ng3_ppo") {
    random_task(3);
    if (name == "hard_ng3_sade") base["optimizer"]["method"] = "sade_adam";
    if (name == "hard_ng3_ppo") base["optimizer"]["method"] = "ppo";
  } else if (name == "dynamic_imperfections") {
    base["hardware"]["imperfections"] = {{"dynamic", true},
                                         {"delta_kappa", 0.5},
                                         {"delta_alpha", 0.2},
                                         {"delta_w", 0.1}};
  } else if (name == "pitch_sweep") {
    const std::vector<std::pair<const char*, double>> pitches = {
        {"pitch_d0p25", 0.25}, {"pitch_d0p5", 0.5},  {"pitch_d1", 1.0},
        {"pitch_d2", 2.0},     {"pitch_d4", 4.0}};
    std::vector<Config> out;
    for (const auto& [pname, d0] : pitches) {
      Json j = base;
      j["name"] = pname;
      j["hardware"]["pic"]["d0"] = d0;
      // Perturbation half-widths shrink with the pitch so tight-pitch chips
      // stay physical (gaps cannot go negative).
      j["hardware"]["pic"]["delta_d_range"] = std::min(0.1, 0.2 * d0);
      out.push_back(parse_config(j));
    }
    return out;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return {parse_config(base)};
}

inline std::vector<double> pitch_sweep_values() { return {0.25, 0.5, 1.0, 2.0, 4.0}; }

}  // namespace hwqoc
