#pragma once

// End-to-end differentiable training: an MLP maps a latent vector to the full
// voltage schedule, and the infidelity gradient flows through the simulator
// into the network. Resolution rises through a curriculum of segment grids;
// each phase starts from the previous network with its output layer widened
// to hold the same piecewise-constant schedule on the finer grid.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "hwqoc/autodiff.hpp"
#include "hwqoc/nn.hpp"
#include "hwqoc/report.hpp"
#include "hwqoc/rng.hpp"

namespace hwqoc {

struct E2eConfig {
  std::vector<int> hidden = {64, 64};
  int latent_dim = 16;
  std::vector<int> phases = {20, 50, 100};          // segment grid per phase
  std::vector<int> phase_episodes = {1500, 1500, 2000};
  double lr = 3e-3;
  double grad_clip = 1.0;
  double stop_fidelity = 0.999;
  int stagnation_window = 300;   // episodes without relative improvement
  double stagnation_eps = 1e-6;  // relative best-cost improvement threshold
  bool resample_latent = false;  // keep drawing z after phase 1

  void validate() const {
    detail::require(!phases.empty() && phases.size() == phase_episodes.size(),
                    "e2e.phases and phase_episodes must pair up");
    for (std::size_t p = 0; p + 1 < phases.size(); ++p)
      detail::require(phases[p] < phases[p + 1],
                      "e2e.phases must be strictly increasing");
    for (int s : phases) detail::require(s >= 1, "e2e phase grids must be >= 1");
    detail::require(latent_dim >= 1, "e2e.latent_dim must be >= 1");
    detail::require(lr >= 0.0, "e2e.lr must be >= 0");
    detail::require(stagnation_window >= 1, "e2e.stagnation_window must be >= 1");
  }
};

inline nn::MlpSpec e2e_policy_spec(const E2eConfig& cfg, int n_channels,
                                   int n_segments) {
  nn::MlpSpec spec;
  spec.sizes.push_back(cfg.latent_dim);
  for (int h : cfg.hidden) spec.sizes.push_back(h);
  spec.sizes.push_back(2 * n_channels * n_segments);
  spec.acts.assign(spec.sizes.size() - 1, nn::Act::kTanh);
  return spec;
}

// Network output (already tanh-squashed) scaled to volts and reshaped
// column-major: output block [s*2N, (s+1)*2N) is schedule column s. Bounds
// hold structurally.
inline MatD policy_schedule(const nn::Mlp& policy, const VecD& z, int n_channels,
                            int n_segments) {
  const VecD out = policy.forward(z);
  detail::require(out.size() == 2 * n_channels * n_segments,
                  "policy output does not match schedule shape");
  return kVoltageLimit *
         Eigen::Map<const MatD>(out.data(), 2 * n_channels, n_segments);
}

// Widens the output layer from an s_prev-segment grid to s_next segments so
// the produced schedule is exactly the piecewise-constant hold of the old
// one: new segment s' copies the rows of parent segment floor(s' s_prev /
// s_next). Hidden layers transfer unchanged.
inline nn::Mlp refine_resolution(const nn::Mlp& policy, const E2eConfig& cfg,
                                 int n_channels, int s_prev, int s_next) {
  detail::require(s_prev >= 1 && s_next >= s_prev,
                  "refine_resolution: grids must be nondecreasing");
  if (s_prev == s_next) return policy;
  nn::Mlp next(e2e_policy_spec(cfg, n_channels, s_next), /*seed=*/0);
  for (int l = 0; l + 1 < policy.n_layers(); ++l) {
    next.W(l) = policy.W(l);
    next.b(l) = policy.b(l);
  }
  const int last = policy.n_layers() - 1;
  const int rows = 2 * n_channels;
  for (int s = 0; s < s_next; ++s) {
    const int parent = static_cast<int>((static_cast<long>(s) * s_prev) / s_next);
    next.W(last).middleRows(s * rows, rows) =
        policy.W(last).middleRows(parent * rows, rows);
    next.b(last).segment(s * rows, rows) = policy.b(last).segment(parent * rows, rows);
  }
  return next;
}

// Trains through the curriculum. During phase p both the schedule grid and
// the simulation grid are phases[p]; the reported result always re-evaluates
// the best schedule on the task's own (fine) grid. Latent vectors are drawn
// per episode in phase 1; afterwards the best-performing z is frozen unless
// resample_latent is set. Plateaus halve the learning rate; a second
// consecutive plateau ends the phase.
inline RunResult train_e2e(const HardwareModel& hw, const QuantumTask& task,
                           const PhysicalConstants& pc, const E2eConfig& cfg,
                           std::uint64_t seed) {
  cfg.validate();
  task.validate();
  for (int s : cfg.phases)
    detail::require(task.t_steps % s == 0,
                    "every e2e phase grid must divide task.t_steps");

  const int n_ch = hw.pic.n_channels;
  Stopwatch clock;
  Rng latent_rng(seed, "e2e_latent");

  RunResult run;
  run.seed = seed;
  run.gate_strings = task.gate_strings;
  run.termination = "phase_budget";

  nn::Mlp policy(e2e_policy_spec(cfg, n_ch, cfg.phases[0]),
                 derive_seed(seed, "e2e_init"));
  VecD z_frozen = VecD::Zero(cfg.latent_dim);
  VecD best_z = z_frozen;

  // Coarse phases score on their own grid, which under dynamic imperfections
  // sees a different noise draw than the task grid. The reported schedule is
  // therefore picked by re-scoring each phase's champion on the fine grid.
  Simulator fine(hw, task, pc);
  double running_best = 2.0;  // best episode cost seen, as training scores it
  double global_best_cost = 2.0;  // fine-grid cost of the best champion
  MatD global_best_schedule;
  long iteration = 0;
  bool stop_all = false;

  for (std::size_t p = 0; p < cfg.phases.size() && !stop_all; ++p) {
    const int S = cfg.phases[p];
    const bool last_phase = (p + 1 == cfg.phases.size());
    if (p > 0) policy = refine_resolution(policy, cfg, n_ch, cfg.phases[p - 1], S);

    QuantumTask phase_task = task;
    phase_task.t_steps = S;  // coarse grids simulate on their own step count
    Simulator sim(hw, phase_task, pc);

    nn::AdamState adam;
    double lr = cfg.lr;
    double phase_best = 2.0;
    MatD phase_best_schedule;
    double mark_best = 2.0;
    long mark_ep = 0;
    int decays = 0;
    const bool sample_z = (p == 0) || cfg.resample_latent;

    for (int ep = 0; ep < cfg.phase_episodes[p]; ++ep, ++iteration) {
      VecD z;
      if (sample_z) {
        z = VecD(cfg.latent_dim);
        for (int i = 0; i < cfg.latent_dim; ++i) z[i] = latent_rng.normal();
      } else {
        z = z_frozen;
      }

      nn::Mlp::Tape tape;
      const VecD out = policy.forward(z, &tape);
      const MatD schedule =
          kVoltageLimit * Eigen::Map<const MatD>(out.data(), 2 * n_ch, S);

      const GradientTape sim_tape = grad_cost_tape(sim, schedule);
      run.n_evals += 3;
      const double c = sim_tape.cost;

      if (c < phase_best) {
        phase_best = c;
        phase_best_schedule = schedule;
        if (p == 0) best_z = z;
      }
      running_best = std::min(running_best, c);
      run.trace.push_back({iteration, running_best, 1.0 - c, clock.ms()});

      if (1.0 - c >= cfg.stop_fidelity) {
        // On a coarse grid this only means the surrogate is solved: advance
        // the curriculum. Training ends when the final grid reaches it.
        if (last_phase) {
          run.termination = "stop_fidelity";
          stop_all = true;
        }
        ++iteration;
        break;
      }

      VecD dtheta = VecD::Zero(policy.params().size());
      const VecD dout = kVoltageLimit *
                        Eigen::Map<const VecD>(sim_tape.grad.data(), sim_tape.grad.size());
      policy.backward(tape, dout, dtheta);
      nn::adam_step(policy.params(), dtheta, adam, lr, cfg.grad_clip);

      // Plateau handling on the phase-best cost, relative improvement.
      if (mark_best - phase_best > cfg.stagnation_eps * std::max(mark_best, 1e-12)) {
        mark_best = phase_best;
        mark_ep = ep;
        decays = 0;
      } else if (ep - mark_ep >= cfg.stagnation_window) {
        lr *= 0.5;
        ++decays;
        mark_ep = ep;
        if (decays >= 2) break;  // phase has converged
      }
    }
    if (p == 0) z_frozen = best_z;

    if (phase_best_schedule.size() != 0) {
      const double fine_cost = fine.cost(phase_best_schedule);
      ++run.n_evals;
      if (fine_cost < global_best_cost) {
        global_best_cost = fine_cost;
        global_best_schedule = phase_best_schedule;
      }
    }
  }

  if (global_best_schedule.size() == 0)
    global_best_schedule = MatD::Zero(2 * n_ch, cfg.phases[0]);
  run.best_schedule = global_best_schedule;
  run.final_fidelity = fine.fidelity(run.best_schedule);
  ++run.n_evals;
  run.final_error = 1.0 - run.final_fidelity;
  run.wall_ms = clock.ms();
  return run;
}

}  // namespace hwqoc
