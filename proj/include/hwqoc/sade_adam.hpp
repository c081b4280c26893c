#pragma once

// Hybrid global+local optimizer: self-adaptive differential evolution finds a
// coarse schedule, then Adam refines it with exact gradients. Mutation factor
// and crossover rate are resampled per candidate per generation from normal
// distributions centered on the recent-success means.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hwqoc/autodiff.hpp"
#include "hwqoc/nn.hpp"
#include "hwqoc/report.hpp"
#include "hwqoc/rng.hpp"

namespace hwqoc {

struct SadeConfig {
  int popsize = 32;
  int generations = 500;
  double f_threshold = 0.95;  // switch to refinement at this fidelity
  double mu_min = 0.1, mu_max = 0.9;
  double cr_min = 0.1, cr_max = 0.9;
  int adaptation_window = 20;  // generations of success history kept
  double adaptation_sigma = 0.1;
  double init_spread = 1.0;  // V, uniform perturbation around x0

  void validate() const {
    detail::require(popsize >= 4, "sade.popsize must be >= 4");
    detail::require(generations >= 1, "sade.generations must be >= 1");
    detail::require(mu_min > 0.0 && mu_max < 1.0 && mu_min <= mu_max,
                    "sade mutation range must lie within (0,1)");
    detail::require(cr_min > 0.0 && cr_max < 1.0 && cr_min <= cr_max,
                    "sade crossover range must lie within (0,1)");
    detail::require(adaptation_window >= 1, "sade.adaptation_window must be >= 1");
    detail::require(init_spread >= 0.0, "sade.init_spread must be >= 0");
  }
};

struct AdamRefineConfig {
  double lr = 1e-4;
  std::vector<double> decay_thresholds = {0.98, 0.99, 0.995, 0.997};
  std::vector<double> decay_factors = {0.5, 0.2, 0.5, 0.2};
  double stop_fidelity = 0.999;
  int stagnation_window = 500;
  double stagnation_eps = 1e-6;
  int max_steps = 20000;
  double grad_clip = 0.0;  // <= 0 disables clipping

  void validate() const {
    detail::require(lr > 0.0, "adam.lr must be > 0");
    detail::require(decay_thresholds.size() == decay_factors.size(),
                    "adam decay thresholds/factors must pair up");
    for (std::size_t i = 0; i + 1 < decay_thresholds.size(); ++i)
      detail::require(decay_thresholds[i] < decay_thresholds[i + 1],
                      "adam decay thresholds must be strictly increasing");
    for (double f : decay_factors)
      detail::require(f > 0.0 && f < 1.0, "adam decay factors must be in (0,1)");
    detail::require(stagnation_window >= 1, "adam.stagnation_window must be >= 1");
    detail::require(max_steps >= 0, "adam.max_steps must be >= 0");
  }
};

inline VecD clamp_voltages(VecD x) {
  return x.cwiseMax(-kVoltageLimit).cwiseMin(kVoltageLimit);
}

// x_a + mu (x_b - x_c), componentwise, clamped to the voltage box.
inline VecD mutate(const VecD& x_a, const VecD& x_b, const VecD& x_c, double mu) {
  detail::require(x_a.size() == x_b.size() && x_b.size() == x_c.size(),
                  "mutate: dimension mismatch");
  return clamp_voltages(x_a + mu * (x_b - x_c));
}

// Binomial crossover with one forced mutant component, so CR = 0 still moves.
inline VecD crossover(const VecD& parent, const VecD& mutant, double cr, Rng& rng) {
  detail::require(parent.size() == mutant.size(), "crossover: dimension mismatch");
  const int n = static_cast<int>(parent.size());
  VecD trial = parent;
  const int forced = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
  for (int j = 0; j < n; ++j)
    if (rng.uniform() < cr || j == forced) trial[j] = mutant[j];
  return trial;
}

struct SadeResult {
  VecD best;
  double best_cost = 1.0;
  std::vector<TracePoint> trace;
  long n_evals = 0;
  int generations_run = 0;
  std::string reason;
};

// Greedy-selection DE over the flattened schedule. The stop rule reads the
// cost as an infidelity: the run ends once 1 - best_cost >= f_threshold (pass
// f_threshold = 1 to disable, e.g. for plain test functions). Every draw
// comes from a per-individual substream, so evaluation order cannot change
// the result.
inline SadeResult sade_run(const std::function<double(const VecD&)>& cost,
                           const SadeConfig& cfg, const VecD& x0,
                           std::uint64_t seed, const Stopwatch* clock = nullptr) {
  cfg.validate();
  const int P = cfg.popsize;
  const int dim = static_cast<int>(x0.size());

  std::vector<Rng> streams;
  streams.reserve(P);
  for (int i = 0; i < P; ++i) streams.emplace_back(seed, "sade_individual", i);

  SadeResult out;
  std::vector<VecD> pop(P);
  std::vector<double> cost_of(P);
  pop[0] = clamp_voltages(x0);
  for (int i = 1; i < P; ++i) {
    VecD x = x0;
    for (int j = 0; j < dim; ++j)
      x[j] += streams[i].uniform(-cfg.init_spread, cfg.init_spread);
    pop[i] = clamp_voltages(x);
  }
  for (int i = 0; i < P; ++i) cost_of[i] = cost(pop[i]);
  out.n_evals += P;

  int best_i = static_cast<int>(std::min_element(cost_of.begin(), cost_of.end()) -
                                cost_of.begin());
  out.best = pop[best_i];
  out.best_cost = cost_of[best_i];

  struct Success {
    int gen;
    double mu, cr;
  };
  std::deque<Success> successes;
  double mu_mean = 0.5, cr_mean = 0.5;

  const double stop_cost = 1.0 - cfg.f_threshold;
  out.reason = "generation_budget";
  for (int g = 0; g < cfg.generations; ++g) {
    if (out.best_cost <= stop_cost) {
      out.reason = "fidelity_threshold";
      break;
    }
    for (int i = 0; i < P; ++i) {
      Rng& rng = streams[i];
      const double mu = std::clamp(rng.normal(mu_mean, cfg.adaptation_sigma),
                                   cfg.mu_min, cfg.mu_max);
      const double cr = std::clamp(rng.normal(cr_mean, cfg.adaptation_sigma),
                                   cfg.cr_min, cfg.cr_max);
      int a, b, c;
      do a = static_cast<int>(rng.index(P)); while (a == i);
      do b = static_cast<int>(rng.index(P)); while (b == i || b == a);
      do c = static_cast<int>(rng.index(P)); while (c == i || c == a || c == b);
      const VecD trial = crossover(pop[i], mutate(pop[a], pop[b], pop[c], mu), cr, rng);
      const double tc = cost(trial);
      ++out.n_evals;
      if (tc < cost_of[i]) {  // strictly-greedy selection
        pop[i] = trial;
        cost_of[i] = tc;
        successes.push_back({g, mu, cr});
        if (tc < out.best_cost) {
          out.best_cost = tc;
          out.best = pop[i];
        }
      }
    }
    while (!successes.empty() && successes.front().gen <= g - cfg.adaptation_window)
      successes.pop_front();
    if (!successes.empty()) {
      double ms = 0.0, cs = 0.0;
      for (const auto& s : successes) {
        ms += s.mu;
        cs += s.cr;
      }
      mu_mean = ms / static_cast<double>(successes.size());
      cr_mean = cs / static_cast<double>(successes.size());
    }
    out.generations_run = g + 1;
    out.trace.push_back({g, out.best_cost, 1.0 - out.best_cost,
                         clock ? clock->ms() : 0.0});
  }
  if (out.best_cost <= stop_cost && out.reason == "generation_budget")
    out.reason = "fidelity_threshold";
  return out;
}

// Learning rate after the best fidelity so far has crossed a prefix of the
// decay thresholds: base times the product of the factors of every crossed
// threshold. Pure so the schedule arithmetic is testable on its own.
inline double refine_lr(double base_lr, const std::vector<double>& thresholds,
                        const std::vector<double>& factors, double best_fidelity) {
  double lr = base_lr;
  for (std::size_t k = 0; k < thresholds.size(); ++k)
    if (best_fidelity >= thresholds[k]) lr *= factors[k];
  return lr;
}

struct AdamRefineResult {
  MatD best;
  double best_cost = 1.0;
  std::vector<TracePoint> trace;
  long n_evals = 0;
  std::string reason;
};

// Projected Adam on the schedule itself. Best-iterate reporting: the returned
// schedule is the lowest-cost point ever visited, never the last step.
inline AdamRefineResult adam_refine(const Simulator& sim, const MatD& x_start,
                                    const AdamRefineConfig& cfg,
                                    long iteration0 = 0,
                                    const Stopwatch* clock = nullptr) {
  cfg.validate();
  AdamRefineResult out;
  MatD x = clamp_schedule(x_start);
  out.best = x;
  out.best_cost = sim.cost(x);
  ++out.n_evals;
  out.reason = "max_steps";

  std::vector<double> best_history{out.best_cost};
  nn::AdamState state;
  VecD flat = Eigen::Map<const VecD>(x.data(), x.size());
  for (int step = 0; step < cfg.max_steps; ++step) {
    if (1.0 - out.best_cost >= cfg.stop_fidelity) {
      out.reason = "stop_fidelity";
      break;
    }
    const MatD g = grad_cost(sim, x);
    out.n_evals += 3;
    const VecD gflat = Eigen::Map<const VecD>(g.data(), g.size());
    const double lr = refine_lr(cfg.lr, cfg.decay_thresholds, cfg.decay_factors,
                                1.0 - out.best_cost);
    nn::adam_step(flat, gflat, state, lr, cfg.grad_clip);
    flat = clamp_voltages(flat);
    x = Eigen::Map<const MatD>(flat.data(), x.rows(), x.cols());

    const double c = sim.cost(x);
    ++out.n_evals;
    if (c < out.best_cost) {
      out.best_cost = c;
      out.best = x;
    }
    out.trace.push_back({iteration0 + step, out.best_cost, 1.0 - c,
                         clock ? clock->ms() : 0.0});

    best_history.push_back(out.best_cost);
    const int w = cfg.stagnation_window;
    if (static_cast<int>(best_history.size()) > w) {
      const double then = best_history[best_history.size() - 1 - w];
      if (then - out.best_cost <= cfg.stagnation_eps) {
        out.reason = "stagnation";
        break;
      }
    }
  }
  if (1.0 - out.best_cost >= cfg.stop_fidelity) out.reason = "stop_fidelity";
  return out;
}

// DE phase from x0 (zero schedule by default), then Adam from the DE best.
inline RunResult hybrid_run(const Simulator& sim, int n_segments,
                            const SadeConfig& sade_cfg,
                            const AdamRefineConfig& adam_cfg, std::uint64_t seed,
                            const MatD* x0 = nullptr) {
  detail::require(n_segments >= 1 && sim.task().t_steps % n_segments == 0,
                  "segment count must divide t_steps");
  const int rows = 2 * sim.hw().pic.n_channels;
  MatD start = x0 ? *x0 : MatD::Zero(rows, n_segments);

  Stopwatch clock;
  RunResult run;
  run.seed = seed;
  run.gate_strings = sim.task().gate_strings;

  const VecD flat0 = Eigen::Map<const VecD>(start.data(), start.size());
  auto cost_fn = [&](const VecD& v) {
    return sim.cost(Eigen::Map<const MatD>(v.data(), rows, n_segments));
  };
  SadeResult de = sade_run(cost_fn, sade_cfg, flat0, seed, &clock);
  run.trace = de.trace;
  run.n_evals = de.n_evals;
  run.switch_iteration = static_cast<long>(de.trace.size());

  const MatD de_best = Eigen::Map<const MatD>(de.best.data(), rows, n_segments);
  AdamRefineResult ref =
      adam_refine(sim, de_best, adam_cfg, run.switch_iteration, &clock);
  run.trace.insert(run.trace.end(), ref.trace.begin(), ref.trace.end());
  run.n_evals += ref.n_evals;

  run.best_schedule = ref.best_cost <= de.best_cost ? ref.best : de_best;
  run.final_fidelity = sim.fidelity(run.best_schedule);
  ++run.n_evals;
  run.final_error = 1.0 - run.final_fidelity;
  run.termination = "sade:" + de.reason + ",adam:" + ref.reason;
  run.wall_ms = clock.ms();
  return run;
}

}  // namespace hwqoc
