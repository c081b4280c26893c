// Release acceptance gate. Each test prints exactly one "[CRITERION k]
// PASS/FAIL" line; every threshold and wall-clock ceiling is pinned here as
// a constant next to the check it guards. The suite is intentionally
// self-contained: it exercises the public harness entry points only
// (presets, run_experiment, run_single, the invariant and gradient checks).

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hwqoc/checks.hpp"
#include "hwqoc/harness.hpp"

namespace {

using namespace hwqoc;

void report(int k, bool pass, const std::string& detail) {
  std::printf("[CRITERION %d] %s  %s\n", k, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

std::vector<double> seed_errors(const ExperimentReport& rep) {
  std::vector<double> out;
  for (const auto& s : rep.seeds)
    if (s.ok) out.push_back(s.run.final_error);
  return out;
}

bool all_seeds_ok(const ExperimentReport& rep) {
  for (const auto& s : rep.seeds)
    if (!s.ok) return false;
  return !rep.seeds.empty();
}

double median(std::vector<double> v) {
  if (v.empty()) return 1.0;
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops the trailing wall-clock column from every CSV line.
std::string strip_wall_column(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out += line.substr(0, cut);
    out += '\n';
  }
  return out;
}

bool same_matrix(const MatD& a, const MatD& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

bool runs_identical(const RunResult& a, const RunResult& b) {
  if (a.trace.size() != b.trace.size()) return false;
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    if (a.trace[i].iteration != b.trace[i].iteration) return false;
    if (a.trace[i].best_cost != b.trace[i].best_cost) return false;
    if (a.trace[i].fidelity != b.trace[i].fidelity) return false;
  }
  return a.n_evals == b.n_evals && a.termination == b.termination &&
         a.final_error == b.final_error &&
         a.final_fidelity == b.final_fidelity &&
         same_matrix(a.best_schedule, b.best_schedule);
}

// 1. Physics property suite: propagator unitarity, global-phase invariance
//    of the fidelity, linearity of the optical chain, and voltage bounds
//    across all three optimizers.
TEST(AcceptanceGate, Criterion1PhysicsInvariants) {
  constexpr double kBudgetSec = 60.0;
  Stopwatch sw;
  const std::vector<CheckResult> checks = run_invariant_checks(1);
  const double secs = sw.ms() / 1000.0;

  std::string failing;
  for (const auto& c : checks) {
    EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
    if (!c.pass) failing += " " + c.name;
  }
  const bool pass = !checks.empty() && failing.empty() && secs <= kBudgetSec;
  report(1, pass,
         fmt("%zu invariant checks in %.1f s (budget %.0f s)%s%s",
             checks.size(), secs, kBudgetSec,
             failing.empty() ? "" : ", failing:", failing.c_str()));
  EXPECT_TRUE(pass);
}

// 2. Reverse-mode gradients against central finite differences at 20 random
//    (schedule, task, hardware) points, crosstalk on.
TEST(AcceptanceGate, Criterion2GradientOracle) {
  constexpr double kBudgetSec = 120.0;
  constexpr int kPoints = 20;
  constexpr double kStep = 1e-4;
  constexpr double kTol = 1e-5;
  Stopwatch sw;
  const CheckResult c = run_gradcheck(1, kPoints, kStep, kTol);
  const double secs = sw.ms() / 1000.0;
  const bool pass = c.pass && secs <= kBudgetSec;
  report(2, pass, fmt("%s in %.1f s (budget %.0f s)", c.detail.c_str(), secs,
                      kBudgetSec));
  EXPECT_TRUE(pass) << c.detail;
}

// 3. Analytic Rabi oracle. One isolated channel at half the calibrated drive
//    sweeps the pulse area over [0, pi] as the modulator voltage scans its
//    full range, so F(X) = sin^2(theta) and F(I) = cos^2(theta) in closed
//    form with theta = (pi/2)|cos(pi v / v_pi)|.
TEST(AcceptanceGate, Criterion3RabiOracle) {
  constexpr double kBudgetSec = 10.0;
  constexpr double kTol = 1e-9;
  constexpr int kPoints = 50;
  Stopwatch sw;

  const HardwareModel hw = demo_hardware(1, 1);
  QuantumTask flip;
  flip.n_atoms = 1;
  flip.gate_strings = {"X"};
  flip.t_steps = 50;
  QuantumTask hold = flip;
  hold.gate_strings = {"I"};
  PhysicalConstants pc;
  pc.drive_scale = 0.5 * calibrated_drive_scale(pc, flip.T_g);
  Simulator sim_x(hw, flip, pc);
  Simulator sim_i(hw, hold, pc);

  double worst = 0.0;
  for (int k = 0; k < kPoints; ++k) {
    const double v = kVoltageLimit * k / (kPoints - 1.0);
    MatD sch(2, 1);
    sch << v, -v;
    const double theta =
        0.5 * M_PI * std::abs(std::cos(M_PI * v / kVoltageLimit));
    const double sx = std::sin(theta), cx = std::cos(theta);
    worst = std::max(worst, std::abs(sim_x.fidelity(sch) - sx * sx));
    worst = std::max(worst, std::abs(sim_i.fidelity(sch) - cx * cx));
  }
  const double secs = sw.ms() / 1000.0;
  const bool pass = worst <= kTol && secs <= kBudgetSec;
  report(3, pass,
         fmt("max |F - closed form| = %.3g over %d drive amplitudes "
             "(tol %.0e) in %.2f s",
             worst, kPoints, kTol, secs));
  EXPECT_TRUE(pass);
}

// 4. Degradation ladder on the 3-atom array (3 um pitch, 2 um waist): a
//    calibrated bit-flip pulse on channel 1 with the other channels idle is
//    perfect for X (x) I (x) I when the beams are narrow, drops below 0.5
//    once the 2 um beams spill onto neighbouring atoms, and drops further
//    still once waveguide crosstalk is switched on.
TEST(AcceptanceGate, Criterion4LeakageDegradation) {
  constexpr double kIdealFloor = 0.999;
  constexpr double kLeakCeiling = 0.5;
  QuantumTask task;  // X on atom 1, identity elsewhere
  PhysicalConstants pc;

  // Channel 1 at one third of v_pi halves the transmission, turning the
  // pi-per-full-transmission calibration into an exact bit flip. Channels 2
  // and 3 idle at 0 V: full transmission, a 2*pi rotation, identity up to
  // global phase.
  MatD sch = MatD::Zero(6, 1);
  sch(0, 0) = 5.0;
  sch(1, 0) = -5.0;

  HardwareModel ideal = demo_hardware(3, 1);
  ideal.coupling.kappa0 = 0.0;
  ideal.lattice.w0 = 1e-3;  // beams far narrower than the pitch: no spill
  HardwareModel leak = demo_hardware(3, 1);
  leak.coupling.kappa0 = 0.0;
  const HardwareModel cross = demo_hardware(3, 1);

  const double f_ideal = Simulator(ideal, task, pc).fidelity(sch);
  const double f_leak = Simulator(leak, task, pc).fidelity(sch);
  const double f_cross = Simulator(cross, task, pc).fidelity(sch);

  const bool pass =
      f_ideal >= kIdealFloor && f_leak < kLeakCeiling && f_cross < f_leak;
  report(4, pass,
         fmt("F ideal=%.4f, +leakage=%.4f (< %.1f), +crosstalk=%.4f "
             "(monotone drop)",
             f_ideal, f_leak, kLeakCeiling, f_cross));
  EXPECT_TRUE(pass);
}

// 5. Hybrid differential-evolution + Adam on the easy single-flip task with
//    crosstalk and leakage on: at least 4 of 5 seeds end below 1e-3 error.
TEST(AcceptanceGate, Criterion5SadeAdamEasyTask) {
  constexpr double kBudgetSec = 900.0;
  constexpr double kErr = 1e-3;
  constexpr int kNeedSeeds = 4;
  Stopwatch sw;
  const ExperimentReport rep = run_experiment(preset("easy_x1")[0]);
  const double secs = sw.ms() / 1000.0;

  const std::vector<double> errs = seed_errors(rep);
  const int good =
      static_cast<int>(std::count_if(errs.begin(), errs.end(),
                                     [&](double e) { return e < kErr; }));
  const bool pass = all_seeds_ok(rep) && good >= kNeedSeeds &&
                    secs <= kBudgetSec;
  report(5, pass,
         fmt("%d/%zu seeds below %.0e (need %d), mean error %.3g, %.0f s "
             "(budget %.0f s)",
             good, errs.size(), kErr, kNeedSeeds, rep.mean_final_error, secs,
             kBudgetSec));
  EXPECT_TRUE(pass);
}

// 6. End-to-end learner on the hard three-gate task within its curriculum
//    budget: mean error <= 5e-3 with at least 3 of 5 seeds at 2e-3 or below.
TEST(AcceptanceGate, Criterion6EndToEndHardTask) {
  constexpr double kBudgetSec = 3600.0;
  constexpr double kMeanErr = 5e-3;
  constexpr double kSeedErr = 2e-3;
  constexpr int kNeedSeeds = 3;
  Stopwatch sw;
  const ExperimentReport rep = run_experiment(preset("hard_ng3")[0]);
  const double secs = sw.ms() / 1000.0;

  const std::vector<double> errs = seed_errors(rep);
  const int good =
      static_cast<int>(std::count_if(errs.begin(), errs.end(),
                                     [&](double e) { return e <= kSeedErr; }));
  const bool pass = all_seeds_ok(rep) && rep.mean_final_error <= kMeanErr &&
                    good >= kNeedSeeds && secs <= kBudgetSec;
  report(6, pass,
         fmt("mean error %.3g (<= %.0e), %d/%zu seeds <= %.0e (need %d), "
             "%.0f s (budget %.0f s)",
             rep.mean_final_error, kMeanErr, good, errs.size(), kSeedErr,
             kNeedSeeds, secs, kBudgetSec));
  EXPECT_TRUE(pass);
}

// 7. Method ordering on the hard task under equal simulator-evaluation
//    budgets (about 15000 cost-equivalents each; every early stop disabled):
//    median error must obey e2e <= sade_adam < ppo, and ppo must be at
//    least 10x worse than e2e.
TEST(AcceptanceGate, Criterion7EqualBudgetMethodOrdering) {
  constexpr double kRatio = 10.0;
  constexpr long kNever = 1000000000;

  Config ce = preset("hard_ng3")[0];
  ce.optimizer.e2e.phase_episodes = {1500, 1500, 2000};
  ce.optimizer.e2e.stop_fidelity = 2.0;
  ce.optimizer.e2e.stagnation_window = kNever;  // 3*5000 + 3 + 1 = 15004

  Config cs = preset("hard_ng3_sade")[0];
  cs.optimizer.sade.generations = 190;  // 32 + 32*190 = 6112
  cs.optimizer.sade.f_threshold = 1.0;
  cs.optimizer.adam.max_steps = 2222;  // + 2 + 4*2222 = 15002
  cs.optimizer.adam.stop_fidelity = 2.0;
  cs.optimizer.adam.stagnation_window = kNever;

  Config cp = preset("hard_ng3_ppo")[0];
  cp.optimizer.ppo.episodes = 454;  // 454*33 + 1 = 14983
  cp.optimizer.ppo.stop_fidelity = 2.0;
  cp.optimizer.ppo.stagnation_episodes = kNever;

  const ExperimentReport re = run_experiment(ce);
  const ExperimentReport rs = run_experiment(cs);
  const ExperimentReport rp = run_experiment(cp);

  long lo = LONG_MAX, hi = 0;
  for (const ExperimentReport* r : {&re, &rs, &rp})
    for (const auto& s : r->seeds) {
      lo = std::min(lo, s.run.n_evals);
      hi = std::max(hi, s.run.n_evals);
    }
  const bool budgets_equal = hi > 0 && (hi - lo) * 200 <= hi;  // within 0.5%

  const double me = median(seed_errors(re));
  const double ms = median(seed_errors(rs));
  const double mp = median(seed_errors(rp));
  const bool ordered = me <= ms && ms < mp;
  const bool ratio = mp >= kRatio * std::max(me, 0.0);

  const bool pass = all_seeds_ok(re) && all_seeds_ok(rs) &&
                    all_seeds_ok(rp) && budgets_equal && ordered && ratio;
  report(7, pass,
         fmt("median error e2e=%.3g sade_adam=%.3g ppo=%.3g, budgets "
             "%ld..%ld evals%s%s",
             me, ms, mp, lo, hi, ordered ? "" : ", ORDER VIOLATED",
             ratio ? "" : ", RATIO < 10x"));
  EXPECT_TRUE(pass);
}

// 8. Pitch robustness: the end-to-end learner reaches mean error <= 1e-2
//    at every waveguide pitch in {0.25, 0.5, 1, 2, 4} um.
TEST(AcceptanceGate, Criterion8PitchSweep) {
  constexpr double kBudgetSec = 5400.0;
  constexpr double kErr = 1e-2;
  Stopwatch sw;

  bool pass = true;
  std::string detail;
  for (const Config& cfg : preset("pitch_sweep")) {
    const ExperimentReport rep = run_experiment(cfg);
    const bool ok = all_seeds_ok(rep) && rep.mean_final_error <= kErr;
    pass = pass && ok;
    detail += fmt("%s%s=%.2g%s", detail.empty() ? "" : " ",
                  cfg.name.c_str(), rep.mean_final_error, ok ? "" : "(FAIL)");
  }
  const double secs = sw.ms() / 1000.0;
  pass = pass && secs <= kBudgetSec;
  report(8, pass, fmt("mean error per pitch: %s (<= %.0e), %.0f s (budget "
                      "%.0f s)",
                      detail.c_str(), kErr, secs, kBudgetSec));
  EXPECT_TRUE(pass);
}

// 9. Dynamic imperfections (kappa, alpha and waist drifting over the gate
//    window): end-to-end mean error <= 1e-2 over 5 seeds.
TEST(AcceptanceGate, Criterion9DynamicImperfections) {
  constexpr double kErr = 1e-2;
  Stopwatch sw;
  const ExperimentReport rep =
      run_experiment(preset("dynamic_imperfections")[0]);
  const double secs = sw.ms() / 1000.0;
  const bool pass = all_seeds_ok(rep) && rep.mean_final_error <= kErr;
  report(9, pass, fmt("mean error %.3g (<= %.0e) over %zu seeds, %.0f s",
                      rep.mean_final_error, kErr, rep.seeds.size(), secs));
  EXPECT_TRUE(pass);
}

// 10. Determinism: repeating a run with an identical config and seed
//     reproduces the trace byte-for-byte once the wall-clock column is
//     excluded, both in memory and through the CSV writer.
TEST(AcceptanceGate, Criterion10Determinism) {
  const std::string dir = ::testing::TempDir();
  bool pass = true;
  std::string detail;
  int idx = 0;
  for (const char* name : {"hard_ng3", "dynamic_imperfections"}) {
    const Config cfg = preset(name)[0];
    const RunResult a = run_single(cfg, 1);
    const RunResult b = run_single(cfg, 1);

    const std::string pa = dir + "accept_det_" + std::to_string(idx) + "a.csv";
    const std::string pb = dir + "accept_det_" + std::to_string(idx) + "b.csv";
    write_trace_csv(a.trace, pa);
    write_trace_csv(b.trace, pb);

    const bool mem = runs_identical(a, b);
    const bool file = !a.trace.empty() &&
                      strip_wall_column(read_file(pa)) ==
                          strip_wall_column(read_file(pb));
    pass = pass && mem && file;
    detail += fmt("%s%s: run %s, csv %s", idx ? "; " : "", name,
                  mem ? "bitwise-equal" : "DIFFERS",
                  file ? "byte-equal" : "DIFFERS");
    ++idx;
  }
  report(10, pass, detail);
  EXPECT_TRUE(pass);
}

}  // namespace
