#pragma once

// Minimal neural-network core shared by the RL optimizers: dense and 1-D
// convolutional layers with analytic backprop, and Adam with bias correction
// plus global-norm gradient clipping. Parameters live in one flat vector per
// module so optimizers and clipping stay trivial.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hwqoc/rng.hpp"

namespace hwqoc::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Act { kIdentity, kTanh, kRelu };

inline double activate(double z, Act a) {
  switch (a) {
    case Act::kTanh: return std::tanh(z);
    case Act::kRelu: return z > 0.0 ? z : 0.0;
    default: return z;
  }
}

// Derivative in terms of the activated output y.
inline double activate_grad(double y, Act a) {
  switch (a) {
    case Act::kTanh: return 1.0 - y * y;
    case Act::kRelu: return y > 0.0 ? 1.0 : 0.0;
    default: return 1.0;
  }
}

struct MlpSpec {
  std::vector<int> sizes;  // [in, hidden..., out]
  std::vector<Act> acts;   // one per layer, sizes.size() - 1 entries
};

class Mlp {
 public:
  Mlp() = default;

  // Xavier-uniform init, weights drawn column-major, biases zero.
  Mlp(MlpSpec spec, std::uint64_t seed, double weight_scale = 1.0)
      : spec_(std::move(spec)) {
    if (spec_.sizes.size() < 2 || spec_.acts.size() != spec_.sizes.size() - 1)
      throw std::invalid_argument("Mlp: inconsistent spec");
    int total = 0;
    for (std::size_t l = 0; l + 1 < spec_.sizes.size(); ++l) {
      w_off_.push_back(total);
      total += spec_.sizes[l + 1] * spec_.sizes[l];
      b_off_.push_back(total);
      total += spec_.sizes[l + 1];
    }
    theta_ = VectorXd::Zero(total);
    Rng rng(seed, "mlp_init");
    for (std::size_t l = 0; l + 1 < spec_.sizes.size(); ++l) {
      const int fan_in = spec_.sizes[l], fan_out = spec_.sizes[l + 1];
      const double a = weight_scale * std::sqrt(6.0 / (fan_in + fan_out));
      auto w = W(static_cast<int>(l));
      for (int j = 0; j < w.cols(); ++j)
        for (int i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-a, a);
    }
  }

  int n_layers() const { return static_cast<int>(spec_.acts.size()); }
  int in_dim() const { return spec_.sizes.front(); }
  int out_dim() const { return spec_.sizes.back(); }
  const MlpSpec& spec() const { return spec_; }

  VectorXd& params() { return theta_; }
  const VectorXd& params() const { return theta_; }

  Eigen::Map<MatrixXd> W(int l) {
    return {theta_.data() + w_off_[l], spec_.sizes[l + 1], spec_.sizes[l]};
  }
  Eigen::Map<const MatrixXd> W(int l) const {
    return {theta_.data() + w_off_[l], spec_.sizes[l + 1], spec_.sizes[l]};
  }
  Eigen::Map<VectorXd> b(int l) {
    return {theta_.data() + b_off_[l], spec_.sizes[l + 1]};
  }
  Eigen::Map<const VectorXd> b(int l) const {
    return {theta_.data() + b_off_[l], spec_.sizes[l + 1]};
  }

  // Layer inputs x[0..L]; x[L] is the network output.
  struct Tape {
    std::vector<VectorXd> x;
  };

  VectorXd forward(const VectorXd& in, Tape* tape = nullptr) const {
    if (in.size() != in_dim()) throw std::invalid_argument("Mlp: input size mismatch");
    VectorXd x = in;
    if (tape) tape->x.assign(1, x);
    for (int l = 0; l < n_layers(); ++l) {
      VectorXd z = W(l) * x + b(l);
      for (int i = 0; i < z.size(); ++i) z[i] = activate(z[i], spec_.acts[l]);
      x = std::move(z);
      if (tape) tape->x.push_back(x);
    }
    return x;
  }

  // Accumulates dL/dtheta into dtheta (must be zero-initialized by the caller
  // or hold a running sum); returns dL/dinput.
  VectorXd backward(const Tape& tape, const VectorXd& dout, VectorXd& dtheta) const {
    if (dtheta.size() != theta_.size())
      throw std::invalid_argument("Mlp: gradient buffer size mismatch");
    VectorXd g = dout;
    for (int l = n_layers() - 1; l >= 0; --l) {
      const VectorXd& y = tape.x[l + 1];
      VectorXd gz(g.size());
      for (int i = 0; i < g.size(); ++i) gz[i] = g[i] * activate_grad(y[i], spec_.acts[l]);
      Eigen::Map<MatrixXd> dW(dtheta.data() + w_off_[l], spec_.sizes[l + 1], spec_.sizes[l]);
      Eigen::Map<VectorXd> db(dtheta.data() + b_off_[l], spec_.sizes[l + 1]);
      dW.noalias() += gz * tape.x[l].transpose();
      db += gz;
      g = W(l).transpose() * gz;
    }
    return g;
  }

 private:
  MlpSpec spec_;
  VectorXd theta_;
  std::vector<int> w_off_, b_off_;
};

// 1-D convolution over a (channels x length) input, stride 1, zero-padded to
// keep the length ("same"), ReLU activation. Kernel size must be odd.
class Conv1d {
 public:
  Conv1d() = default;

  Conv1d(int in_ch, int out_ch, int ksize, std::uint64_t seed)
      : in_ch_(in_ch), out_ch_(out_ch), k_(ksize) {
    if (ksize % 2 == 0) throw std::invalid_argument("Conv1d: kernel size must be odd");
    theta_ = VectorXd::Zero(out_ch_ * in_ch_ * k_ + out_ch_);
    Rng rng(seed, "conv_init");
    const double a = std::sqrt(6.0 / (in_ch_ * k_ + out_ch_ * k_));
    for (int i = 0; i < out_ch_ * in_ch_ * k_; ++i) theta_[i] = rng.uniform(-a, a);
  }

  VectorXd& params() { return theta_; }
  const VectorXd& params() const { return theta_; }
  int out_channels() const { return out_ch_; }

  struct Tape {
    MatrixXd x;  // input
    MatrixXd y;  // activated output
  };

  MatrixXd forward(const MatrixXd& x, Tape* tape = nullptr) const {
    if (x.rows() != in_ch_) throw std::invalid_argument("Conv1d: channel mismatch");
    const int len = static_cast<int>(x.cols());
    const int pad = (k_ - 1) / 2;
    MatrixXd y(out_ch_, len);
    for (int o = 0; o < out_ch_; ++o) {
      for (int t = 0; t < len; ++t) {
        double acc = bias(o);
        for (int ic = 0; ic < in_ch_; ++ic)
          for (int dk = 0; dk < k_; ++dk) {
            const int src = t + dk - pad;
            if (src >= 0 && src < len) acc += weight(o, ic, dk) * x(ic, src);
          }
        y(o, t) = acc > 0.0 ? acc : 0.0;
      }
    }
    if (tape) {
      tape->x = x;
      tape->y = y;
    }
    return y;
  }

  MatrixXd backward(const Tape& tape, const MatrixXd& dy, VectorXd& dtheta) const {
    const int len = static_cast<int>(tape.x.cols());
    const int pad = (k_ - 1) / 2;
    MatrixXd dx = MatrixXd::Zero(in_ch_, len);
    for (int o = 0; o < out_ch_; ++o) {
      for (int t = 0; t < len; ++t) {
        if (tape.y(o, t) <= 0.0) continue;  // ReLU gate
        const double g = dy(o, t);
        dtheta[bias_off(o)] += g;
        for (int ic = 0; ic < in_ch_; ++ic)
          for (int dk = 0; dk < k_; ++dk) {
            const int src = t + dk - pad;
            if (src < 0 || src >= len) continue;
            dtheta[w_off(o, ic, dk)] += g * tape.x(ic, src);
            dx(ic, src) += g * weight(o, ic, dk);
          }
      }
    }
    return dx;
  }

 private:
  int w_off(int o, int ic, int dk) const { return (o * in_ch_ + ic) * k_ + dk; }
  int bias_off(int o) const { return out_ch_ * in_ch_ * k_ + o; }
  double weight(int o, int ic, int dk) const { return theta_[w_off(o, ic, dk)]; }
  double bias(int o) const { return theta_[bias_off(o)]; }

  int in_ch_ = 0, out_ch_ = 0, k_ = 0;
  VectorXd theta_;
};

// Adam over a set of flat parameter vectors, with one shared global-norm clip
// across all of them. clip <= 0 disables clipping. Returns the pre-clip norm.
struct AdamState {
  std::vector<VectorXd> m, v;
  long t = 0;
};

inline double adam_step(std::vector<VectorXd*> params,
                        std::vector<const VectorXd*> grads, AdamState& state,
                        double lr, double clip, double beta1 = 0.9,
                        double beta2 = 0.999, double eps = 1e-8) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: params/grads size mismatch");
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.emplace_back(VectorXd::Zero(p->size()));
      state.v.emplace_back(VectorXd::Zero(p->size()));
    }
  }
  double sq = 0.0;
  for (auto* g : grads) sq += g->squaredNorm();
  const double norm = std::sqrt(sq);
  const double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;

  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    VectorXd g = *grads[i] * scale;
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g.cwiseProduct(g);
    const VectorXd mhat = state.m[i] / bc1;
    const VectorXd vhat = state.v[i] / bc2;
    *params[i] -= lr * (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
  }
  return norm;
}

inline double adam_step(VectorXd& params, const VectorXd& grad, AdamState& state,
                        double lr, double clip = 0.0) {
  return adam_step({&params}, {&grad}, state, lr, clip);
}

}  // namespace hwqoc::nn
