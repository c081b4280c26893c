#pragma once

// Qubit-register simulation: atom-site fields -> Raman coupling strengths ->
// control Hamiltonian -> piecewise-exact propagator -> gate fidelity against
// Clifford+T targets. Works in the rotating frame, so the drift Hamiltonian
// contributes nothing and H(t) is the control term alone.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "hwqoc/hardware.hpp"

namespace hwqoc {

inline constexpr double kSpeedOfLight = 299792458.0;        // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kHbar = 1.054571817e-34;            // J s

struct PhysicalConstants {
  double mu1e = 2.54e-29;             // dipole moment, C m
  double mu2e = 2.54e-29;             // C m
  double Delta = 2.0 * std::numbers::pi * 1e9;  // Raman detuning, rad/s
  double intensity = 20.0;            // laser intensity, mW/cm^2
  double hyperfine = 6.835;           // GHz, documentation only
  double omega0 = 0.0;                // rad/s, unused in the rotating frame
  double omega_r = 0.0;               // rad/s, unused in the rotating frame
  double drive_scale = 0.0;           // <= 0 means "calibrate at startup"

  void validate() const {
    detail::require(Delta != 0.0, "constants.Delta must be nonzero");
    detail::require(intensity >= 0.0, "constants.intensity must be >= 0");
    detail::require(drive_scale > 0.0, "constants.drive_scale must be > 0");
  }
};

// Physical field amplitude of the global Raman leg, E = sqrt(2 I / (c eps0)).
// intensity is configured in mW/cm^2; x10 converts to W/m^2.
inline double global_field_amplitude(const PhysicalConstants& pc) {
  const double I_si = pc.intensity * 10.0;
  return std::sqrt(2.0 * I_si / (kSpeedOfLight * kVacuumPermittivity));
}

// Two-photon coupling rate at full transmission (channel response 1):
// g0 = mu1 mu2 E^2 / (2 hbar^2 Delta), rad/s.
inline double base_coupling_rate(const PhysicalConstants& pc) {
  const double E = global_field_amplitude(pc);
  return pc.mu1e * pc.mu2e * E * E / (2.0 * kHbar * kHbar * pc.Delta);
}

// With the listed constants, |g| T_g at full transmission is far below pi.
// The default calibration scales the drive so a fully transmitting channel
// accumulates exactly pi of rotation-generator phase over one gate time.
inline double calibrated_drive_scale(const PhysicalConstants& pc, double T_g_us) {
  return std::numbers::pi / (base_coupling_rate(pc) * T_g_us * 1e-6);
}

inline PhysicalConstants resolve_drive_scale(PhysicalConstants pc, double T_g_us) {
  if (pc.drive_scale <= 0.0) pc.drive_scale = calibrated_drive_scale(pc, T_g_us);
  return pc;
}

struct QuantumTask {
  int n_atoms = 3;
  std::vector<std::string> gate_strings = {"X", "I", "I"};
  double T_g = 0.1;   // gate time, us
  int t_steps = 100;  // fine simulation grid

  void validate() const {
    detail::require(n_atoms >= 1, "task.n_atoms must be >= 1");
    detail::require(static_cast<int>(gate_strings.size()) == n_atoms,
                    "task.gate_strings must have one entry per atom");
    for (const auto& s : gate_strings)
      detail::require(!s.empty(), "task.gate_strings entries must be nonempty");
    detail::require(T_g > 0.0, "task.T_g must be > 0");
    detail::require(t_steps >= 1, "task.t_steps must be >= 1");
  }
};

// A schedule is a (2 N_ch x N_seg) matrix: rows (2c, 2c+1) are the two
// modulator voltages of channel c, one column per piecewise-constant segment.
inline void validate_schedule(const MatD& schedule, int n_channels, int t_steps) {
  detail::require(schedule.rows() == 2 * n_channels,
                  "schedule must have two voltage rows per channel");
  detail::require(schedule.cols() >= 1 &&
                      t_steps % static_cast<int>(schedule.cols()) == 0,
                  "segment count must divide t_steps");
  for (int r = 0; r < schedule.rows(); ++r)
    for (int c = 0; c < schedule.cols(); ++c)
      detail::require(std::abs(schedule(r, c)) <= kVoltageLimit,
                      "schedule voltage outside [-15, 15] V");
}

inline MatD clamp_schedule(MatD schedule) {
  return schedule.cwiseMax(-kVoltageLimit).cwiseMin(kVoltageLimit);
}

inline Eigen::Matrix2cd gate_matrix(char c) {
  using M2 = Eigen::Matrix2cd;
  const cplx i(0.0, 1.0);
  M2 m;
  switch (c) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    case 'H': m << 1, 1, 1, -1; m /= std::numbers::sqrt2; break;
    case 'S': m << 1, 0, 0, i; break;
    case 'T': m << 1, 0, 0, std::exp(i * (std::numbers::pi / 4.0)); break;
    default:
      throw std::invalid_argument(std::string("unknown gate character '") + c + "'");
  }
  return m;
}

// Characters compose left-to-right with the leftmost applied last:
// "HS" is the operator H * S.
inline Eigen::Matrix2cd parse_gate_string(const std::string& s) {
  detail::require(!s.empty(), "gate string must be nonempty");
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  for (char c : s) u = u * gate_matrix(c);
  return u;
}

inline MatC kron(const MatC& a, const MatC& b) {
  MatC out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Atom 1 is the leftmost Kronecker factor (most significant qubit).
inline MatC build_target(const QuantumTask& task) {
  task.validate();
  MatC u = parse_gate_string(task.gate_strings[0]);
  for (int j = 1; j < task.n_atoms; ++j)
    u = kron(u, parse_gate_string(task.gate_strings[j]));
  return u;
}

// Single-qubit operator embedded at atom j (0-based, leftmost-significant).
inline MatC kron_embed(const Eigen::Matrix2cd& op, int j, int n_atoms) {
  const auto eye = [](int n) { return MatC::Identity(n, n); };
  const int left = 1 << j;
  const int right = 1 << (n_atoms - j - 1);
  return kron(kron(eye(left), MatC(op)), eye(right));
}

// g_j = drive_scale * mu1 mu2 E_glob^2 E_j / (2 hbar^2 Delta). One Raman leg
// is the fixed global field; the other is the global field scaled by the
// complex channel response E_j, so arg g_j = arg E_j.
inline VecC coupling_strengths(const VecC& E, const PhysicalConstants& pc) {
  pc.validate();
  return pc.drive_scale * base_coupling_rate(pc) * E;
}

// H = sum_j (g_j sigma+_j + conj(g_j) sigma-_j) with sigma+ = |1><0|.
// Equivalently Re(g_j) sigma_x + Im(g_j) sigma_y on atom j; exactly Hermitian.
inline MatC control_hamiltonian(const VecC& g) {
  const int na = static_cast<int>(g.size());
  const int dim = 1 << na;
  Eigen::Matrix2cd sx, sy;
  sx << 0, 1, 1, 0;
  sy << 0, cplx(0, -1), cplx(0, 1), 0;
  MatC H = MatC::Zero(dim, dim);
  for (int j = 0; j < na; ++j) {
    H += g[j].real() * kron_embed(sx, j, na);
    H += g[j].imag() * kron_embed(sy, j, na);
  }
  return H;
}

inline double gate_fidelity(const MatC& U, const MatC& U_target) {
  detail::require(U.rows() == U_target.rows() && U.cols() == U_target.cols(),
                  "gate_fidelity: dimension mismatch");
  const cplx tr = (U_target.adjoint() * U).trace();
  const double d = static_cast<double>(U.rows());
  return std::norm(tr) / (d * d);
}

// One exactly-exponentiated block of the time grid. With static hardware the
// Hamiltonian is constant across a schedule segment, so the whole segment is
// one block; dynamic imperfections force one block per fine step.
struct Interval {
  double dt = 0.0;  // seconds
  int segment = 0;  // schedule column
  int step0 = 0;    // first fine step covered
  int n_steps = 1;  // fine steps covered
  MatC Q;           // eigenvectors of H
  VecD lam;         // eigenvalues, rad/s
  VecC g;           // per-atom drive for this block
};

struct SimResult {
  MatC U_final;
  double fidelity = 0.0;
  cplx trace_overlap;        // Tr(U_target^dag U_final)
  MatC E;                    // atom fields, one column per interval
  std::vector<Interval> intervals;
};

// Precomputes everything that does not depend on the schedule, so that cost
// evaluations are RNG-free and cheap. Pure w.r.t. the schedule; safe to share
// across threads for concurrent cost() calls.
class Simulator {
 public:
  Simulator(HardwareModel hw, QuantumTask task, PhysicalConstants pc)
      : hw_(std::move(hw)),
        task_(std::move(task)),
        pc_(resolve_drive_scale(pc, task_.T_g)) {
    task_.validate();
    hw_.validate();
    pc_.validate();
    detail::require(hw_.pic.n_channels == task_.n_atoms,
                    "channel count must equal atom count");
    detail::require(hw_.lattice.n_atoms() == task_.n_atoms,
                    "lattice size must equal atom count");
    cache_ = build_chain_cache(hw_, task_.t_steps);
    target_ = build_target(task_);
    g_scale_ = pc_.drive_scale * base_coupling_rate(pc_);
    Eigen::Matrix2cd sx, sy;
    sx << 0, 1, 1, 0;
    sy << 0, cplx(0, -1), cplx(0, 1), 0;
    for (int j = 0; j < task_.n_atoms; ++j) {
      sigma_x_.push_back(kron_embed(sx, j, task_.n_atoms));
      sigma_y_.push_back(kron_embed(sy, j, task_.n_atoms));
    }
  }

  const HardwareModel& hw() const { return hw_; }
  const QuantumTask& task() const { return task_; }
  const PhysicalConstants& pc() const { return pc_; }
  const ChainCache& chain() const { return cache_; }
  const MatC& target() const { return target_; }
  double g_scale() const { return g_scale_; }
  const MatC& sigma_x(int j) const { return sigma_x_[j]; }
  const MatC& sigma_y(int j) const { return sigma_y_[j]; }
  int dim() const { return 1 << task_.n_atoms; }

  SimResult propagate(const MatD& schedule) const {
    validate_schedule(schedule, hw_.pic.n_channels, task_.t_steps);
    const int n_seg = static_cast<int>(schedule.cols());
    const int steps_per_seg = task_.t_steps / n_seg;
    const double dt_fine = task_.T_g * 1e-6 / task_.t_steps;

    // Interval layout: per fine step when the chain varies step-to-step,
    // else one interval per schedule segment (exact for constant H).
    const int n_int = cache_.per_step ? task_.t_steps : n_seg;
    const int steps_per_int = cache_.per_step ? 1 : steps_per_seg;

    SimResult res;
    res.intervals.reserve(n_int);
    res.E.resize(task_.n_atoms, n_int);

    const int dim_ = dim();
    MatC U = MatC::Identity(dim_, dim_);
    Eigen::SelfAdjointEigenSolver<MatC> es;
    VecC T(hw_.pic.n_channels);
    int last_seg = -1;
    for (int i = 0; i < n_int; ++i) {
      Interval iv;
      iv.n_steps = steps_per_int;
      iv.step0 = i * steps_per_int;
      iv.segment = iv.step0 / steps_per_seg;
      iv.dt = dt_fine * steps_per_int;
      if (iv.segment != last_seg) {
        for (int c = 0; c < hw_.pic.n_channels; ++c)
          T[c] = drmzm_transfer(schedule(2 * c, iv.segment),
                                schedule(2 * c + 1, iv.segment), hw_.drmzm);
        last_seg = iv.segment;
      }
      const VecC E = cache_.J_at(iv.step0) * T + cache_.e0_at(iv.step0);
      iv.g = g_scale_ * E;
      res.E.col(i) = E;

      MatC H = MatC::Zero(dim_, dim_);
      for (int j = 0; j < task_.n_atoms; ++j) {
        H += iv.g[j].real() * sigma_x_[j];
        H += iv.g[j].imag() * sigma_y_[j];
      }
      es.compute(H);
      iv.Q = es.eigenvectors();
      iv.lam = es.eigenvalues();

      VecC phase(dim_);
      for (int a = 0; a < dim_; ++a)
        phase[a] = std::exp(cplx(0.0, -iv.lam[a] * iv.dt));
      U = (iv.Q * phase.asDiagonal() * iv.Q.adjoint() * U).eval();
      res.intervals.push_back(std::move(iv));
    }

    res.U_final = std::move(U);
    res.trace_overlap = (target_.adjoint() * res.U_final).trace();
    res.fidelity = std::norm(res.trace_overlap) / (static_cast<double>(dim_) * dim_);
    return res;
  }

  double fidelity(const MatD& schedule) const { return propagate(schedule).fidelity; }
  double cost(const MatD& schedule) const { return 1.0 - fidelity(schedule); }

 private:
  HardwareModel hw_;
  QuantumTask task_;
  PhysicalConstants pc_;
  ChainCache cache_;
  MatC target_;
  double g_scale_ = 0.0;
  std::vector<MatC> sigma_x_, sigma_y_;
};

inline SimResult propagate(const MatD& schedule, const HardwareModel& hw,
                           const QuantumTask& task, const PhysicalConstants& pc) {
  return Simulator(hw, task, pc).propagate(schedule);
}

inline double cost(const MatD& schedule, const HardwareModel& hw,
                   const QuantumTask& task, const PhysicalConstants& pc) {
  return Simulator(hw, task, pc).cost(schedule);
}

}  // namespace hwqoc
