#pragma once

// Exact reverse-mode gradient of the gate infidelity with respect to every
// schedule voltage. The propagator derivative uses the eigenbasis divided-
// difference (Daleckii-Krein) formula per interval, so there is no truncation
// tolerance anywhere; the hardware chain is differentiated analytically
// through the modulator transfer (crosstalk and geometry are constants in V).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hwqoc/qsim.hpp"

namespace hwqoc {

struct GradientTape {
  SimResult sim;    // cached per-interval eigendecompositions and fields
  MatC target;
  MatD grad;        // dC/dV, same layout as the schedule
  double cost = 0.0;

  // Rebuilds the propagator from the cached decompositions alone and returns
  // the fidelity; must reproduce the forward value to 1e-14.
  double replay_fidelity() const {
    const int dim = static_cast<int>(target.rows());
    MatC U = MatC::Identity(dim, dim);
    for (const Interval& iv : sim.intervals) {
      VecC phase(dim);
      for (int a = 0; a < dim; ++a)
        phase[a] = std::exp(cplx(0.0, -iv.lam[a] * iv.dt));
      U = (iv.Q * phase.asDiagonal() * iv.Q.adjoint() * U).eval();
    }
    return gate_fidelity(U, target);
  }
};

namespace detail {

// Divided differences of f(x) = exp(-i x dt). Degenerate pairs take the
// analytic limit -i dt f(x); the threshold is relative to the spectral scale
// and compares with <= so the all-zero Hamiltonian is handled too.
inline MatC phi_matrix(const VecD& lam, double dt) {
  const int n = static_cast<int>(lam.size());
  const double scale = lam.cwiseAbs().maxCoeff();
  const double thr = 1e-12 * scale;
  MatC phi(n, n);
  for (int a = 0; a < n; ++a) {
    const cplx fa = std::exp(cplx(0.0, -lam[a] * dt));
    for (int b = 0; b < n; ++b) {
      if (std::abs(lam[a] - lam[b]) <= thr) {
        phi(a, b) = cplx(0.0, -dt) * fa;
      } else {
        const cplx fb = std::exp(cplx(0.0, -lam[b] * dt));
        phi(a, b) = (fa - fb) / cplx(lam[a] - lam[b], 0.0);
      }
    }
  }
  return phi;
}

inline cplx trace_product(const MatC& A, const MatC& B) {
  return (A.cwiseProduct(B.transpose())).sum();
}

}  // namespace detail

// Reverse-mode gradient with the full tape. Cost of one call is a small
// constant multiple of a forward evaluation.
inline GradientTape grad_cost_tape(const Simulator& sim, const MatD& schedule) {
  GradientTape tape;
  tape.sim = sim.propagate(schedule);
  tape.target = sim.target();
  tape.cost = 1.0 - tape.sim.fidelity;

  const auto& ivs = tape.sim.intervals;
  const int K = static_cast<int>(ivs.size());
  const int dim = sim.dim();
  const int n_ch = sim.hw().pic.n_channels;
  const int n_seg = static_cast<int>(schedule.cols());
  const double d2 = static_cast<double>(dim) * dim;

  // Interval propagators, then prefix products R_i = U_{i-1}...U_0 and
  // suffix products L_i = U_{K-1}...U_{i+1}.
  std::vector<MatC> U(K), R(K), L(K);
  for (int i = 0; i < K; ++i) {
    VecC phase(dim);
    for (int a = 0; a < dim; ++a)
      phase[a] = std::exp(cplx(0.0, -ivs[i].lam[a] * ivs[i].dt));
    U[i] = ivs[i].Q * phase.asDiagonal() * ivs[i].Q.adjoint();
  }
  R[0] = MatC::Identity(dim, dim);
  for (int i = 1; i < K; ++i) R[i] = U[i - 1] * R[i - 1];
  L[K - 1] = MatC::Identity(dim, dim);
  for (int i = K - 2; i >= 0; --i) L[i] = L[i + 1] * U[i + 1];

  const MatC Ut_adj = sim.target().adjoint();
  const cplx tau = tape.sim.trace_overlap;
  const double gs = sim.g_scale();
  const DrmzmConfig& dz = sim.hw().drmzm;
  const cplx dfac(0.0, std::numbers::pi / (2.0 * dz.v_pi));

  MatD grad = MatD::Zero(2 * n_ch, n_seg);
  for (int i = 0; i < K; ++i) {
    const Interval& iv = ivs[i];
    // dtau = Tr(D dH) with D = Q ((Q^dag A Q) o Phi) Q^dag, A = R Ut^dag L.
    const MatC A = R[i] * Ut_adj * L[i];
    const MatC B = ivs[i].Q.adjoint() * A * ivs[i].Q;
    const MatC D =
        ivs[i].Q * B.cwiseProduct(detail::phi_matrix(iv.lam, iv.dt)) * ivs[i].Q.adjoint();

    // Per-atom sensitivities of tau to the drive quadratures.
    VecC p(sim.task().n_atoms), q(sim.task().n_atoms);
    for (int j = 0; j < sim.task().n_atoms; ++j) {
      p[j] = detail::trace_product(D, sim.sigma_x(j));
      q[j] = detail::trace_product(D, sim.sigma_y(j));
    }

    // Through the chain: E = J T + e0, g = gs E, T_c smooth in its voltages.
    const MatC& J = sim.chain().J_at(iv.step0);
    const int seg = iv.segment;
    for (int c = 0; c < n_ch; ++c) {
      const cplx w0 = dz.insertion * dfac *
                      std::exp(cplx(0.0, std::numbers::pi * schedule(2 * c, seg) / dz.v_pi));
      const cplx w1 = dz.insertion * dfac *
                      std::exp(cplx(0.0, std::numbers::pi * schedule(2 * c + 1, seg) / dz.v_pi));
      cplx dtau_v0 = 0.0, dtau_v1 = 0.0;
      for (int j = 0; j < sim.task().n_atoms; ++j) {
        const cplx jw0 = J(j, c) * w0;
        const cplx jw1 = J(j, c) * w1;
        dtau_v0 += gs * (p[j] * jw0.real() + q[j] * jw0.imag());
        dtau_v1 += gs * (p[j] * jw1.real() + q[j] * jw1.imag());
      }
      // F = |tau|^2 / d^2, C = 1 - F.
      grad(2 * c, seg) -= 2.0 * (std::conj(tau) * dtau_v0).real() / d2;
      grad(2 * c + 1, seg) -= 2.0 * (std::conj(tau) * dtau_v1).real() / d2;
    }
  }

  tape.grad = std::move(grad);
  return tape;
}

inline MatD grad_cost(const Simulator& sim, const MatD& schedule) {
  return grad_cost_tape(sim, schedule).grad;
}

inline MatD grad_cost(const MatD& schedule, const HardwareModel& hw,
                      const QuantumTask& task, const PhysicalConstants& pc) {
  return grad_cost(Simulator(hw, task, pc), schedule);
}

// Central differences of the cost. O(N_params) evaluations; the stencil must
// stay inside the voltage bounds.
inline MatD finite_diff_grad(const Simulator& sim, const MatD& schedule, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  MatD grad(schedule.rows(), schedule.cols());
  MatD probe = schedule;
  for (int r = 0; r < schedule.rows(); ++r) {
    for (int c = 0; c < schedule.cols(); ++c) {
      probe(r, c) = schedule(r, c) + h;
      const double up = sim.cost(probe);
      probe(r, c) = schedule(r, c) - h;
      const double dn = sim.cost(probe);
      probe(r, c) = schedule(r, c);
      grad(r, c) = (up - dn) / (2.0 * h);
    }
  }
  return grad;
}

inline MatD finite_diff_grad(const MatD& schedule, const HardwareModel& hw,
                             const QuantumTask& task, const PhysicalConstants& pc,
                             double h) {
  return finite_diff_grad(Simulator(hw, task, pc), schedule, h);
}

}  // namespace hwqoc
