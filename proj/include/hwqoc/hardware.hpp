#pragma once

// Photonic control chain: programmable PIC (per-channel two-arm modulators +
// evanescent inter-channel crosstalk), weak scattering interfaces, a static
// SLM, and Gaussian-beam projection onto the atom lattice. Everything here is
// a pure function of (config, seed); all randomness is realized up front.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "hwqoc/rng.hpp"

namespace hwqoc {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatD = Eigen::MatrixXd;
using VecD = Eigen::VectorXd;

// Hard constraint on every control voltage, shared by all optimizers.
inline constexpr double kVoltageLimit = 15.0;

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace detail

struct PicGeometry {
  int n_channels = 3;
  double d0 = 1.0;              // nominal channel pitch, um
  double L0 = 600.0;            // nominal coupling length, um
  double s = 1.1;               // coupling-length scaling per unit separation
  double delta_d_range = 0.1;   // half-width of uniform pitch perturbation, um
  double delta_L_range = 60.0;  // half-width of uniform length perturbation, um
  VecD n_eff;                   // per-channel effective index
  double lambda0 = 0.78;        // um

  void validate() const {
    detail::require(n_channels >= 1, "pic.n_channels must be >= 1");
    detail::require(d0 > 0.0, "pic.d0 must be > 0");
    detail::require(L0 >= 0.0, "pic.L0 must be >= 0");
    detail::require(lambda0 > 0.0, "pic.lambda0 must be > 0");
    detail::require(delta_d_range >= 0.0 && delta_L_range >= 0.0,
                    "pic perturbation half-widths must be >= 0");
    detail::require(n_eff.size() == n_channels,
                    "pic.n_eff must have one entry per channel");
  }
};

struct CouplingFit {
  double kappa0 = 10.145;  // rad/um
  double alpha = 6.934;    // 1/um

  void validate() const {
    detail::require(kappa0 >= 0.0, "coupling.kappa0 must be >= 0");
    detail::require(alpha >= 0.0, "coupling.alpha must be >= 0");
  }
};

struct DrmzmConfig {
  double v_pi = 15.0;      // half-wave voltage, V
  double insertion = 1.0;  // amplitude scale in [0,1]

  void validate() const {
    detail::require(v_pi > 0.0, "drmzm.v_pi must be > 0");
    detail::require(insertion >= 0.0 && insertion <= 1.0,
                    "drmzm.insertion must be in [0,1]");
  }
};

struct SlmConfig {
  VecD amplitude;  // per channel, [0,1]
  VecD phase;      // rad

  void validate(int n_channels) const {
    detail::require(amplitude.size() == n_channels && phase.size() == n_channels,
                    "slm.amplitude/phase must have one entry per channel");
    for (int i = 0; i < amplitude.size(); ++i)
      detail::require(amplitude[i] >= 0.0 && amplitude[i] <= 1.0,
                      "slm.amplitude entries must be in [0,1]");
  }
};

struct BeamLattice {
  MatD atom_positions;  // N_a x 2, um
  MatD beam_centers;    // one per channel, um
  double w0 = 2.0;      // nominal beam waist, um
  double spacing = 3.0; // inter-atomic distance, um

  int n_atoms() const { return static_cast<int>(atom_positions.rows()); }

  void validate() const {
    detail::require(atom_positions.rows() >= 1 && atom_positions.cols() == 2,
                    "lattice.atom_positions must be Nx2");
    detail::require(beam_centers.cols() == 2, "lattice.beam_centers must be Nx2");
    detail::require(w0 > 0.0, "lattice.w0 must be > 0");
    detail::require(spacing > 0.0, "lattice.spacing must be > 0");
  }
};

// Equilateral triangular arrangement: rows offset by half a pitch. For n=3
// this is the usual triangle with all pairwise distances equal to `spacing`.
inline MatD make_triangular_lattice(int n, double spacing) {
  detail::require(n >= 1, "lattice size must be >= 1");
  const int width = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  MatD pos(n, 2);
  const double row_h = spacing * std::numbers::sqrt3 / 2.0;
  int idx = 0;
  for (int r = 0; idx < n; ++r) {
    for (int c = 0; c < width && idx < n; ++c, ++idx) {
      pos(idx, 0) = c * spacing + (r % 2 ? 0.5 * spacing : 0.0);
      pos(idx, 1) = r * row_h;
    }
  }
  return pos;
}

struct ImperfectionConfig {
  double weak_scatter_eps = 0.0;
  bool dynamic = false;
  double delta_kappa = 0.5;  // rad/um, half-width on kappa0
  double delta_alpha = 0.2;  // 1/um, half-width on alpha
  double delta_w = 0.1;      // um, half-width on beam waist
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(weak_scatter_eps >= 0.0 && delta_kappa >= 0.0 &&
                        delta_alpha >= 0.0 && delta_w >= 0.0,
                    "imperfection half-widths must be >= 0");
  }
};

struct HardwareModel {
  PicGeometry pic;
  CouplingFit coupling;
  DrmzmConfig drmzm;
  SlmConfig slm;
  BeamLattice lattice;
  ImperfectionConfig imperfections;
  VecC a_in;  // input field amplitude per channel
  std::uint64_t geometry_seed = 1;

  void validate() const {
    pic.validate();
    coupling.validate();
    drmzm.validate();
    slm.validate(pic.n_channels);
    lattice.validate();
    imperfections.validate();
    detail::require(a_in.size() == pic.n_channels,
                    "a_in must have one entry per channel");
    detail::require(lattice.beam_centers.rows() == pic.n_channels,
                    "one beam per channel required");
  }
};

struct GeometryRealization {
  MatD d;  // pairwise channel distance, um
  MatD L;  // pairwise coupling length, um
};

// d[m][n] = |m-n| d0 + U(+-delta_d), L[m][n] = L0 s^|m-n| + U(+-delta_L).
// One draw per unordered pair (m<n, row-major order; delta_d before delta_L),
// so the matrices are symmetric by construction. Diagonals are unused, set 0.
inline GeometryRealization realize_geometry(const PicGeometry& geom,
                                            std::uint64_t seed) {
  geom.validate();
  const int n = geom.n_channels;
  GeometryRealization out{MatD::Zero(n, n), MatD::Zero(n, n)};
  Rng rng(seed, "geometry");
  for (int m = 0; m < n; ++m) {
    for (int k = m + 1; k < n; ++k) {
      const int sep = k - m;
      double d = sep * geom.d0 + rng.uniform(-geom.delta_d_range, geom.delta_d_range);
      double L = geom.L0 * std::pow(geom.s, sep) +
                 rng.uniform(-geom.delta_L_range, geom.delta_L_range);
      out.d(m, k) = out.d(k, m) = std::max(d, 0.0);
      out.L(m, k) = out.L(k, m) = std::max(L, 0.0);
    }
  }
  return out;
}

// Coupled-mode amplitude for one pair. kappa decays exponentially with the
// gap; a propagation-constant mismatch dbeta stiffens the effective rate.
// The amplitude is |sin(kappa_eff L)| and the phase is exactly -pi/2.
inline cplx coupling_amplitude(double kappa0, double alpha, double d, double L,
                               double dbeta) {
  const double kappa = std::max(kappa0, 0.0) * std::exp(-std::max(alpha, 0.0) * d);
  const double keff = std::hypot(kappa, dbeta);
  return cplx(0.0, -std::abs(std::sin(keff * L)));
}

inline cplx coupling_coefficient(int m, int n, const MatD& d, const MatD& L,
                                 const CouplingFit& fit, const PicGeometry& geom) {
  if (m == n) throw std::invalid_argument("coupling_coefficient: m == n");
  const double two_pi = 2.0 * std::numbers::pi;
  const double beta_m = two_pi * geom.n_eff[m] / geom.lambda0;
  const double beta_n = two_pi * geom.n_eff[n] / geom.lambda0;
  const double dbeta = 0.5 * (beta_m - beta_n);
  return coupling_amplitude(fit.kappa0, fit.alpha, d(m, n), L(m, n), dbeta);
}

// Off-diagonal crosstalk matrix (zero diagonal). Optional per-pair additive
// perturbations act on the fit constants, not on the realized coupling rate.
inline MatC coupling_matrix(const GeometryRealization& geo, const CouplingFit& fit,
                            const PicGeometry& geom,
                            const MatD* dkappa0 = nullptr,
                            const MatD* dalpha = nullptr) {
  const int n = geom.n_channels;
  const double two_pi = 2.0 * std::numbers::pi;
  MatC C = MatC::Zero(n, n);
  for (int m = 0; m < n; ++m) {
    for (int k = 0; k < n; ++k) {
      if (m == k) continue;
      const double dbeta =
          0.5 * two_pi * (geom.n_eff[m] - geom.n_eff[k]) / geom.lambda0;
      const double k0 = fit.kappa0 + (dkappa0 ? (*dkappa0)(m, k) : 0.0);
      const double al = fit.alpha + (dalpha ? (*dalpha)(m, k) : 0.0);
      C(m, k) = coupling_amplitude(k0, al, geo.d(m, k), geo.L(m, k), dbeta);
    }
  }
  return C;
}

// Two-arm interferometer with linear voltage-to-phase arms.
inline cplx drmzm_transfer(double v0, double v1, const DrmzmConfig& cfg) {
  if (std::abs(v0) > kVoltageLimit || std::abs(v1) > kVoltageLimit)
    throw std::invalid_argument("drmzm_transfer: voltage outside [-15, 15] V");
  const double f = std::numbers::pi / cfg.v_pi;
  return cfg.insertion * 0.5 *
         (std::exp(cplx(0.0, f * v0)) + std::exp(cplx(0.0, f * v1)));
}

// Diagonal = per-channel modulator transfer, off-diagonal = crosstalk.
// Generally sub-unitary; the loss is physical and left unrenormalized.
inline MatC build_pic_matrix(Eigen::Ref<const VecD> v0, Eigen::Ref<const VecD> v1,
                             const MatC& C, const DrmzmConfig& cfg) {
  const int n = static_cast<int>(C.rows());
  detail::require(v0.size() == n && v1.size() == n && C.cols() == n,
                  "build_pic_matrix: dimension mismatch");
  MatC P = C;
  for (int c = 0; c < n; ++c) P(c, c) = drmzm_transfer(v0[c], v1[c], cfg);
  return P;
}

inline VecC apply_slm(const VecC& modes, const SlmConfig& slm) {
  detail::require(modes.size() == slm.amplitude.size(), "apply_slm: size mismatch");
  VecC out(modes.size());
  for (int i = 0; i < modes.size(); ++i)
    out[i] = modes[i] * slm.amplitude[i] * std::exp(cplx(0.0, slm.phase[i]));
  return out;
}

// I + eps*R with R a fixed seeded complex matrix, entries U(-1,1)+iU(-1,1)
// drawn row-major (real part first). Stage 1 and 2 use distinct substreams.
inline MatC weak_scatter_matrix(int n, double eps, std::uint64_t seed, int stage) {
  detail::require(stage == 1 || stage == 2, "weak_scatter: stage must be 1 or 2");
  MatC W = MatC::Identity(n, n);
  if (eps == 0.0) return W;
  Rng rng(seed, "weak_scatter", static_cast<std::uint64_t>(stage));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double re = rng.uniform(-1.0, 1.0);
      const double im = rng.uniform(-1.0, 1.0);
      W(r, c) += eps * cplx(re, im);
    }
  return W;
}

inline VecC weak_scatter(const VecC& modes, double eps, std::uint64_t seed,
                         int stage) {
  return weak_scatter_matrix(static_cast<int>(modes.size()), eps, seed, stage) *
         modes;
}

// LG00 amplitude envelope at the waist (flat phase): row j, column k is
// exp(-|r_j - r_k|^2 / w0^2) with r_k the center of beam k.
inline MatD gaussian_projection(const BeamLattice& lattice, double w0_t) {
  detail::require(w0_t > 0.0, "beam waist must be > 0");
  const int na = lattice.n_atoms();
  const int nb = static_cast<int>(lattice.beam_centers.rows());
  MatD G(na, nb);
  for (int j = 0; j < na; ++j)
    for (int k = 0; k < nb; ++k) {
      const double dx = lattice.atom_positions(j, 0) - lattice.beam_centers(k, 0);
      const double dy = lattice.atom_positions(j, 1) - lattice.beam_centers(k, 1);
      G(j, k) = std::exp(-(dx * dx + dy * dy) / (w0_t * w0_t));
    }
  return G;
}

inline VecC field_at_atoms(const VecC& b, const BeamLattice& lattice, double w0_t) {
  detail::require(b.size() == lattice.beam_centers.rows(),
                  "field_at_atoms: one amplitude per beam required");
  return gaussian_projection(lattice, w0_t) * b;
}

// Per-step perturbation series for the dynamic-imperfection mode. dkappa0 and
// dalpha perturb the coupling-fit constants pairwise (symmetric, drawn once
// per unordered pair per step), dw perturbs the beam waist (one draw per
// step). Draw order per step: pairs row-major, dkappa before dalpha, then dw.
struct DynamicSeries {
  std::vector<MatD> dkappa0;
  std::vector<MatD> dalpha;
  VecD dw;
};

inline DynamicSeries sample_dynamics(const ImperfectionConfig& imp, int n_channels,
                                     int t_steps) {
  imp.validate();
  detail::require(t_steps >= 1, "t_steps must be >= 1");
  DynamicSeries out;
  out.dw = VecD::Zero(t_steps);
  out.dkappa0.assign(t_steps, MatD::Zero(n_channels, n_channels));
  out.dalpha.assign(t_steps, MatD::Zero(n_channels, n_channels));
  if (!imp.dynamic) return out;
  Rng rng(imp.seed, "dynamics");
  for (int k = 0; k < t_steps; ++k) {
    for (int m = 0; m < n_channels; ++m)
      for (int q = m + 1; q < n_channels; ++q) {
        const double dk = rng.uniform(-imp.delta_kappa, imp.delta_kappa);
        const double da = rng.uniform(-imp.delta_alpha, imp.delta_alpha);
        out.dkappa0[k](m, q) = out.dkappa0[k](q, m) = dk;
        out.dalpha[k](m, q) = out.dalpha[k](q, m) = da;
      }
    out.dw[k] = rng.uniform(-imp.delta_w, imp.delta_w);
  }
  return out;
}

// Precomputed affine form of the whole chain. For fixed seeds the field at
// the atoms is linear in the per-channel modulator transfers T:
//   E(step k) = J_k * T + e0_k,   J_k = G_k W2 S W1 diag(a_in),
//   e0_k = G_k W2 S W1 C_k a_in.
// Static runs collapse to a single (J, e0) pair; dynamic runs carry one per
// time step (C and the beam waist are resampled each step).
struct ChainCache {
  int n_ch = 0;
  int t_steps = 0;
  bool per_step = false;
  std::vector<MatC> J;
  std::vector<VecC> e0;
  GeometryRealization geo;

  const MatC& J_at(int step) const { return per_step ? J[step] : J[0]; }
  const VecC& e0_at(int step) const { return per_step ? e0[step] : e0[0]; }
};

inline ChainCache build_chain_cache(const HardwareModel& hw, int t_steps) {
  hw.validate();
  detail::require(t_steps >= 1, "t_steps must be >= 1");
  const int n = hw.pic.n_channels;

  ChainCache cache;
  cache.n_ch = n;
  cache.t_steps = t_steps;
  cache.geo = realize_geometry(hw.pic, hw.geometry_seed);

  const MatC W1 =
      weak_scatter_matrix(n, hw.imperfections.weak_scatter_eps, hw.imperfections.seed, 1);
  const MatC W2 =
      weak_scatter_matrix(n, hw.imperfections.weak_scatter_eps, hw.imperfections.seed, 2);
  MatC S = MatC::Zero(n, n);
  for (int c = 0; c < n; ++c)
    S(c, c) = hw.slm.amplitude[c] * std::exp(cplx(0.0, hw.slm.phase[c]));
  const MatC B = W2 * S * W1;  // everything between the PIC and the beams

  cache.per_step = hw.imperfections.dynamic;
  const int n_real = cache.per_step ? t_steps : 1;
  cache.J.reserve(n_real);
  cache.e0.reserve(n_real);

  const DynamicSeries dyn = sample_dynamics(hw.imperfections, n, t_steps);
  for (int k = 0; k < n_real; ++k) {
    const MatD* dk = cache.per_step ? &dyn.dkappa0[k] : nullptr;
    const MatD* da = cache.per_step ? &dyn.dalpha[k] : nullptr;
    const MatC C = coupling_matrix(cache.geo, hw.coupling, hw.pic, dk, da);
    const double w0 = std::max(hw.lattice.w0 + (cache.per_step ? dyn.dw[k] : 0.0), 1e-12);
    const MatC chainM = gaussian_projection(hw.lattice, w0) * B;
    cache.J.push_back(chainM * hw.a_in.asDiagonal());
    cache.e0.push_back(chainM * (C * hw.a_in));
  }
  return cache;
}

// Per-channel modulator transfers for one column of the schedule.
inline VecC drmzm_column(Eigen::Ref<const VecD> v0, Eigen::Ref<const VecD> v1,
                         const DrmzmConfig& cfg) {
  VecC T(v0.size());
  for (int c = 0; c < v0.size(); ++c) T[c] = drmzm_transfer(v0[c], v1[c], cfg);
  return T;
}

// Full composed chain: complex field at every atom for every time step.
// Schedule layout: rows (2c, 2c+1) hold (v0, v1) of channel c, one column per
// segment; segments must tile t_steps evenly.
inline MatC forward_chain(const MatD& schedule, const HardwareModel& hw,
                          int t_steps) {
  const int n = hw.pic.n_channels;
  detail::require(hw.lattice.n_atoms() == n,
                  "forward_chain: channel count must equal atom count");
  detail::require(schedule.rows() == 2 * n, "schedule must have 2 rows per channel");
  const int n_seg = static_cast<int>(schedule.cols());
  detail::require(n_seg >= 1 && t_steps % n_seg == 0,
                  "segment count must divide t_steps");
  const int steps_per_seg = t_steps / n_seg;

  const ChainCache cache = build_chain_cache(hw, t_steps);
  MatC E(hw.lattice.n_atoms(), t_steps);
  VecC T(n);
  for (int k = 0; k < t_steps; ++k) {
    const int seg = k / steps_per_seg;
    if (k == 0 || seg != (k - 1) / steps_per_seg) {
      VecD v0(n), v1(n);
      for (int c = 0; c < n; ++c) {
        v0[c] = schedule(2 * c, seg);
        v1[c] = schedule(2 * c + 1, seg);
      }
      T = drmzm_column(v0, v1, hw.drmzm);
    }
    E.col(k) = cache.J_at(k) * T + cache.e0_at(k);
  }
  return E;
}

}  // namespace hwqoc
