#pragma once

// Runnable self-checks shared by the CLI (`check`, `gradcheck`) and the
// acceptance suite: physics invariants of the simulator and the analytic
// gradient against central finite differences.

#include <cstdio>
#include <string>
#include <vector>

#include "hwqoc/autodiff.hpp"
#include "hwqoc/e2e.hpp"
#include "hwqoc/harness.hpp"
#include "hwqoc/ppo.hpp"
#include "hwqoc/sade_adam.hpp"

namespace hwqoc {

struct CheckResult {
  std::string name;
  bool pass = false;
  double metric = 0.0;      // worst observed value
  double threshold = 0.0;   // pass iff metric <= threshold
  std::string detail;
};

// Compact fully-populated model for checks and tests: triangular lattice,
// unity SLM and inputs, one beam per atom.
inline HardwareModel demo_hardware(int n_channels, std::uint64_t seed,
                                   double weak_scatter_eps = 0.0,
                                   bool dynamic = false, double d0 = 1.0) {
  HardwareModel hw;
  hw.pic.n_channels = n_channels;
  hw.pic.d0 = d0;
  hw.pic.n_eff = VecD::Constant(n_channels, 2.0255);
  hw.slm.amplitude = VecD::Constant(n_channels, 1.0);
  hw.slm.phase = VecD::Zero(n_channels);
  hw.lattice.atom_positions = make_triangular_lattice(n_channels, hw.lattice.spacing);
  hw.lattice.beam_centers = hw.lattice.atom_positions;
  hw.imperfections.weak_scatter_eps = weak_scatter_eps;
  hw.imperfections.dynamic = dynamic;
  hw.imperfections.seed = derive_seed(seed, "demo_imperfections");
  hw.a_in = VecC::Constant(n_channels, cplx(1.0, 0.0));
  hw.geometry_seed = derive_seed(seed, "demo_geometry");
  return hw;
}

inline MatD random_schedule(int n_channels, int n_segments, Rng& rng,
                            double vmax = kVoltageLimit) {
  MatD s(2 * n_channels, n_segments);
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < s.cols(); ++c) s(r, c) = rng.uniform(-vmax, vmax);
  return s;
}

namespace checkdetail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace checkdetail

// Physics invariants: propagator unitarity, fidelity global-phase invariance,
// chain linearity in the input amplitudes, and voltage-bound preservation
// across all three optimizers.
inline std::vector<CheckResult> run_invariant_checks(std::uint64_t seed = 1) {
  std::vector<CheckResult> out;
  Rng rng(seed, "invariant_checks");

  {
    CheckResult c{"propagator_unitarity", false, 0.0, 1e-10, ""};
    const HardwareModel hw = demo_hardware(3, seed, 0.01);
    QuantumTask task;
    task.t_steps = 12;
    Simulator sim(hw, task, PhysicalConstants{});
    const MatC eye = MatC::Identity(sim.dim(), sim.dim());
    for (int k = 0; k < 100; ++k) {
      const MatD s = random_schedule(3, 4, rng);
      const MatC U = sim.propagate(s).U_final;
      c.metric = std::max(c.metric, (U.adjoint() * U - eye).cwiseAbs().maxCoeff());
    }
    c.pass = c.metric <= c.threshold;
    c.detail = "max ||U^dag U - I|| over 100 random schedules = " +
               checkdetail::fmt(c.metric);
    out.push_back(c);
  }

  {
    CheckResult c{"fidelity_global_phase", false, 0.0, 1e-12, ""};
    const HardwareModel hw = demo_hardware(3, seed, 0.01);
    QuantumTask task;
    task.t_steps = 12;
    Simulator sim(hw, task, PhysicalConstants{});
    for (int k = 0; k < 100; ++k) {
      const MatC U = sim.propagate(random_schedule(3, 4, rng)).U_final;
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const MatC target_rot = std::exp(cplx(0.0, phi)) * sim.target();
      const double diff =
          std::abs(gate_fidelity(U, target_rot) - gate_fidelity(U, sim.target()));
      c.metric = std::max(c.metric, diff);
    }
    c.pass = c.metric <= c.threshold;
    c.detail = "max |F(e^{i phi} U_t) - F(U_t)| = " + checkdetail::fmt(c.metric);
    out.push_back(c);
  }

  {
    CheckResult c{"chain_linearity", false, 0.0, 1e-12, ""};
    for (int k = 0; k < 20; ++k) {
      HardwareModel hw = demo_hardware(3, seed + k, 0.01);
      const MatD s = random_schedule(3, 4, rng);
      VecC coef(3);
      for (int i = 0; i < 3; ++i)
        coef[i] = cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      hw.a_in = coef;
      const MatC whole = forward_chain(s, hw, 12);
      MatC sum = MatC::Zero(whole.rows(), whole.cols());
      for (int i = 0; i < 3; ++i) {
        HardwareModel basis = hw;
        basis.a_in = VecC::Zero(3);
        basis.a_in[i] = coef[i];
        sum += forward_chain(s, basis, 12);
      }
      c.metric = std::max(c.metric, (whole - sum).cwiseAbs().maxCoeff());
    }
    c.pass = c.metric <= c.threshold;
    c.detail = "max superposition defect over 20 chains = " + checkdetail::fmt(c.metric);
    out.push_back(c);
  }

  {
    // Short runs of every optimizer; Simulator::propagate throws on any
    // out-of-range voltage, so completing at all proves the bound held for
    // every evaluated schedule. The returned bests are checked explicitly.
    CheckResult c{"optimizer_voltage_bounds", false, 0.0, kVoltageLimit, ""};
    const HardwareModel hw = demo_hardware(2, seed);
    QuantumTask task;
    task.n_atoms = 2;
    task.gate_strings = {"X", "I"};
    task.t_steps = 8;
    Simulator sim(hw, task, PhysicalConstants{});

    SadeConfig sc;
    sc.popsize = 8;
    sc.generations = 5;
    sc.init_spread = 20.0;  // force clamping to engage
    AdamRefineConfig ac;
    ac.max_steps = 5;
    const RunResult r1 = hybrid_run(sim, 4, sc, ac, seed);

    PpoConfig ppo;
    ppo.episodes = 2;
    ppo.episode_steps = 6;
    ppo.hidden = 16;
    ppo.history = 2;
    ppo.action_scale = 40.0;  // forces the env-side clamp to engage
    const RunResult r2 = train_ppo(sim, 4, ppo, seed);

    E2eConfig ec;
    ec.hidden = {16};
    ec.phases = {4};
    ec.phase_episodes = {10};
    const RunResult r3 = train_e2e(hw, task, PhysicalConstants{}, ec, seed);

    for (const RunResult* r : {&r1, &r2, &r3})
      c.metric = std::max(c.metric, r->best_schedule.cwiseAbs().maxCoeff());
    c.pass = c.metric <= c.threshold;
    c.detail = "max |V| over optimizer bests = " + checkdetail::fmt(c.metric) +
               " (all evaluated schedules bound-checked by the simulator)";
    out.push_back(c);
  }

  return out;
}

// Analytic gradient vs central finite differences over randomized scenarios
// (crosstalk always on; weak scatter and dynamic noise toggled across
// points). Relative error is measured in the max norm.
inline CheckResult run_gradcheck(std::uint64_t seed = 1, int n_points = 20,
                                 double h = 1e-4, double tol = 1e-5) {
  CheckResult c{"gradient_vs_finite_differences", false, 0.0, tol, ""};
  int worst = -1;
  for (int i = 0; i < n_points; ++i) {
    Rng rng(seed, "gradcheck", i);
    const double eps = (i % 2 == 1) ? 0.01 : 0.0;
    const bool dynamic = (i % 5 == 0);
    const HardwareModel hw = demo_hardware(3, derive_seed(seed, "gc_hw", i), eps, dynamic);

    QuantumTask task;
    task.gate_strings = random_gate_set(3, 3, derive_seed(seed, "gc_gates", i));
    task.t_steps = 20;
    Simulator sim(hw, task, PhysicalConstants{});

    // Stay inside the box so the central stencil never clips.
    const MatD s = random_schedule(3, 4, rng, kVoltageLimit - 1.0);
    const MatD g = grad_cost(sim, s);
    const MatD fd = finite_diff_grad(sim, s, h);
    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
    const double rel = (g - fd).cwiseAbs().maxCoeff() / scale;
    if (rel > c.metric) {
      c.metric = rel;
      worst = i;
    }
  }
  c.pass = c.metric <= c.threshold;
  c.detail = "max relative error over " + std::to_string(n_points) +
             " points = " + checkdetail::fmt(c.metric) + " (worst point " +
             std::to_string(worst) + ")";
  return c;
}

}  // namespace hwqoc
