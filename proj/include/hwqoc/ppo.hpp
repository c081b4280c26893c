#pragma once

// PPO baseline: a schedule-adjustment environment around the simulator plus
// clipped-surrogate PPO with GAE. The policy is Gaussian with a learnable
// state-independent log-std; actor and critic share a feature extractor
// (flatten+MLP by default, a small temporal-conv stack by config).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "hwqoc/nn.hpp"
#include "hwqoc/qsim.hpp"
#include "hwqoc/report.hpp"
#include "hwqoc/rng.hpp"

namespace hwqoc {

struct PpoConfig {
  double lr = 1e-4;
  double entropy_coef = 0.1;
  double gamma = 0.99;
  double clip_eps = 0.2;
  double gae_lambda = 0.95;
  double max_grad_norm = 0.5;
  int epochs = 4;        // passes over each rollout
  int minibatch = 32;
  int episode_steps = 32;
  int episodes = 10000;
  int history = 4;            // action vectors kept in the observation
  double action_scale = 0.5;  // volts per unit action
  double vf_coef = 0.5;
  std::string extractor = "mlp";  // "mlp" or "conv"
  int hidden = 256;
  int conv_filters1 = 32, conv_filters2 = 64, conv_kernel = 3;
  double log_std_init = -0.5;
  double stop_fidelity = 0.999;
  int stagnation_episodes = 1000;

  void validate() const {
    detail::require(gamma > 0.0 && gamma <= 1.0, "ppo.gamma must be in (0,1]");
    detail::require(gae_lambda >= 0.0 && gae_lambda <= 1.0,
                    "ppo.gae_lambda must be in [0,1]");
    detail::require(clip_eps > 0.0, "ppo.clip_eps must be > 0");
    detail::require(epochs >= 1 && minibatch >= 1, "ppo.epochs/minibatch must be >= 1");
    detail::require(episode_steps >= 1, "ppo.episode_steps must be >= 1");
    detail::require(history >= 1, "ppo.history must be >= 1");
    detail::require(extractor == "mlp" || extractor == "conv",
                    "ppo.extractor must be 'mlp' or 'conv'");
  }
};

// r = a F^p + b dF. Coefficients come in bands that sharpen the incentive as
// the fidelity climbs.
inline double reward_fn(double F, double dF, double a, double b, double p) {
  return a * std::pow(F, p) + b * dF;
}

struct RewardCoefs {
  double a, b, p;
};

inline RewardCoefs reward_band(double F) {
  if (F < 0.9) return {1.0, 10.0, 1.0};
  if (F < 0.99) return {2.0, 20.0, 2.0};
  return {4.0, 40.0, 3.0};
}

// Environment over full-schedule delta adjustments: each action nudges every
// voltage, the full-pipeline fidelity is recomputed, and the observation is
// the recent action history plus fidelity progress. The best fidelity (and
// schedule) persists across resets; it is training-level memory.
class QocEnv {
 public:
  QocEnv(const Simulator& sim, int n_segments, const PpoConfig& cfg)
      : sim_(&sim),
        n_seg_(n_segments),
        history_(cfg.history),
        action_scale_(cfg.action_scale),
        episode_steps_(cfg.episode_steps),
        stop_fidelity_(cfg.stop_fidelity) {
    detail::require(n_segments >= 1 && sim.task().t_steps % n_segments == 0,
                    "segment count must divide t_steps");
    rows_ = 2 * sim.hw().pic.n_channels;
    best_schedule_ = MatD::Zero(rows_, n_seg_);
  }

  int action_dim() const { return rows_ * n_seg_; }
  int obs_dim() const { return history_ * action_dim() + 3; }

  VecD reset() {
    schedule_ = MatD::Zero(rows_, n_seg_);
    hist_.assign(history_, VecD::Zero(action_dim()));
    step_idx_ = 0;
    F_ = sim_->fidelity(schedule_);
    ++n_evals_;
    note_best();
    return observation();
  }

  struct StepResult {
    VecD obs;
    double reward = 0.0;
    bool done = false;
    double fidelity = 0.0;
  };

  StepResult step(const VecD& action) {
    detail::require(action.size() == action_dim(), "env action size mismatch");
    VecD a = action.cwiseMax(-1.0).cwiseMin(1.0);
    schedule_ += action_scale_ * Eigen::Map<const MatD>(a.data(), rows_, n_seg_);
    schedule_ = clamp_schedule(schedule_);
    const double F_prev = F_;
    F_ = sim_->fidelity(schedule_);
    ++n_evals_;
    note_best();
    hist_.pop_front();
    hist_.push_back(a);
    ++step_idx_;

    const RewardCoefs rc = reward_band(F_);
    StepResult out;
    out.reward = reward_fn(F_, F_ - F_prev, rc.a, rc.b, rc.p);
    out.done = step_idx_ >= episode_steps_ || F_ >= stop_fidelity_;
    out.fidelity = F_;
    out.obs = observation();
    return out;
  }

  double fidelity() const { return F_; }
  double best_fidelity() const { return best_F_; }
  const MatD& best_schedule() const { return best_schedule_; }
  const MatD& schedule() const { return schedule_; }
  long n_evals() const { return n_evals_; }

 private:
  void note_best() {
    if (F_ > best_F_) {
      best_F_ = F_;
      best_schedule_ = schedule_;
    }
  }

  VecD observation() const {
    VecD obs(obs_dim());
    int off = 0;
    for (const VecD& h : hist_) {
      obs.segment(off, action_dim()) = h;
      off += action_dim();
    }
    obs[off] = F_;
    obs[off + 1] = best_F_;
    obs[off + 2] = static_cast<double>(step_idx_) / episode_steps_;
    return obs;
  }

  const Simulator* sim_;
  int n_seg_, rows_ = 0, history_, episode_steps_, step_idx_ = 0;
  double action_scale_, stop_fidelity_;
  MatD schedule_, best_schedule_;
  std::deque<VecD> hist_;
  double F_ = 0.0, best_F_ = -1.0;
  long n_evals_ = 0;
};

struct GaeResult {
  VecD advantages;  // normalized (mean 0, std 1; zeros when variance vanishes)
  VecD raw;         // un-normalized advantages
  VecD returns;     // advantage + value, the critic regression target
};

// Standard recursive GAE over one finished episode (terminal value 0).
inline GaeResult gae(const VecD& rewards, const VecD& values, double gamma,
                     double lambda) {
  detail::require(rewards.size() == values.size() && rewards.size() >= 1,
                  "gae: rewards/values must pair up");
  const int T = static_cast<int>(rewards.size());
  GaeResult out;
  out.raw = VecD(T);
  double acc = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    const double v_next = (t + 1 < T) ? values[t + 1] : 0.0;
    const double delta = rewards[t] + gamma * v_next - values[t];
    acc = delta + gamma * lambda * acc;
    out.raw[t] = acc;
  }
  out.returns = out.raw + values;
  const double mean = out.raw.mean();
  const double sd = std::sqrt((out.raw.array() - mean).square().sum() / T);
  if (sd < 1e-8)
    out.advantages = VecD::Zero(T);
  else
    out.advantages = ((out.raw.array() - mean) / sd).matrix();
  return out;
}

// min(r A, clip(r) A) and whether the clipped branch is strictly active.
inline std::pair<double, bool> clipped_objective(double ratio, double adv,
                                                 double eps) {
  const double unclipped = ratio * adv;
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
  return {std::min(unclipped, clipped), clipped < unclipped};
}

class PpoNet {
 public:
  PpoNet() = default;

  PpoNet(int obs_dim, int action_dim, int history, const PpoConfig& cfg,
         std::uint64_t seed)
      : use_conv_(cfg.extractor == "conv"),
        history_(history),
        action_dim_(action_dim),
        obs_dim_(obs_dim) {
    const int h = cfg.hidden;
    if (use_conv_) {
      conv1_ = nn::Conv1d(action_dim, cfg.conv_filters1, cfg.conv_kernel,
                          derive_seed(seed, "ppo_conv1"));
      conv2_ = nn::Conv1d(cfg.conv_filters1, cfg.conv_filters2, cfg.conv_kernel,
                          derive_seed(seed, "ppo_conv2"));
      const int flat = cfg.conv_filters2 * history + 3;
      conv_fc_ = nn::Mlp({{flat, h}, {nn::Act::kRelu}}, derive_seed(seed, "ppo_fc"));
    } else {
      extractor_ = nn::Mlp({{obs_dim, h, h}, {nn::Act::kTanh, nn::Act::kTanh}},
                           derive_seed(seed, "ppo_extractor"));
    }
    // Near-zero initial action mean keeps early exploration centered.
    actor_ = nn::Mlp({{h, action_dim}, {nn::Act::kIdentity}},
                     derive_seed(seed, "ppo_actor"), 0.01);
    critic_ = nn::Mlp({{h, 1}, {nn::Act::kIdentity}}, derive_seed(seed, "ppo_critic"));
    log_std_ = VecD::Constant(action_dim, cfg.log_std_init);
  }

  struct Tape {
    nn::Mlp::Tape ext, fc, act, crit;
    nn::Conv1d::Tape c1, c2;
  };

  VecD features(const VecD& obs, Tape* t) const {
    if (!use_conv_) return extractor_.forward(obs, t ? &t->ext : nullptr);
    // History block reshaped to (action channels x time), extras appended
    // after the conv stack.
    const Eigen::Map<const MatD> hist(obs.data(), action_dim_, history_);
    const MatD y1 = conv1_.forward(hist, t ? &t->c1 : nullptr);
    const MatD y2 = conv2_.forward(y1, t ? &t->c2 : nullptr);
    VecD flat(y2.size() + 3);
    flat.head(y2.size()) = Eigen::Map<const VecD>(y2.data(), y2.size());
    flat.tail(3) = obs.tail(3);
    return conv_fc_.forward(flat, t ? &t->fc : nullptr);
  }

  void actor_critic(const VecD& feat, Tape* t, VecD* mean, double* value) const {
    if (mean) *mean = actor_.forward(feat, t ? &t->act : nullptr);
    if (value) *value = critic_.forward(feat, t ? &t->crit : nullptr)[0];
  }

  struct Grads {
    VecD extractor, conv1, conv2, conv_fc, actor, critic, log_std;
  };

  Grads zero_grads() const {
    Grads g;
    g.actor = VecD::Zero(actor_.params().size());
    g.critic = VecD::Zero(critic_.params().size());
    g.log_std = VecD::Zero(log_std_.size());
    if (use_conv_) {
      g.conv1 = VecD::Zero(conv1_.params().size());
      g.conv2 = VecD::Zero(conv2_.params().size());
      g.conv_fc = VecD::Zero(conv_fc_.params().size());
    } else {
      g.extractor = VecD::Zero(extractor_.params().size());
    }
    return g;
  }

  // Backward for one sample given head gradients; accumulates into g.
  void backward(const Tape& t, const VecD& dmean, double dvalue, Grads& g) const {
    VecD dfeat = actor_.backward(t.act, dmean, g.actor);
    VecD one(1);
    one[0] = dvalue;
    dfeat += critic_.backward(t.crit, one, g.critic);
    if (!use_conv_) {
      extractor_.backward(t.ext, dfeat, g.extractor);
      return;
    }
    const VecD dflat = conv_fc_.backward(t.fc, dfeat, g.conv_fc);
    const int conv_out = static_cast<int>(dflat.size()) - 3;
    const Eigen::Map<const MatD> dy2(dflat.data(), conv_out / history_, history_);
    const MatD dy1 = conv2_.backward(t.c2, dy2, g.conv2);
    conv1_.backward(t.c1, dy1, g.conv1);
  }

  std::vector<VecD*> param_list() {
    if (use_conv_)
      return {&conv1_.params(), &conv2_.params(), &conv_fc_.params(),
              &actor_.params(), &critic_.params(), &log_std_};
    return {&extractor_.params(), &actor_.params(), &critic_.params(), &log_std_};
  }

  std::vector<const VecD*> grad_list(const Grads& g) const {
    if (use_conv_)
      return {&g.conv1, &g.conv2, &g.conv_fc, &g.actor, &g.critic, &g.log_std};
    return {&g.extractor, &g.actor, &g.critic, &g.log_std};
  }

  const VecD& log_std() const { return log_std_; }
  VecD& log_std() { return log_std_; }

  double log_prob(const VecD& action, const VecD& mean) const {
    constexpr double log_two_pi = 1.8378770664093454836;
    double lp = -0.5 * action.size() * log_two_pi;
    for (int i = 0; i < action.size(); ++i) {
      const double s = std::exp(log_std_[i]);
      const double zi = (action[i] - mean[i]) / s;
      lp += -0.5 * zi * zi - log_std_[i];
    }
    return lp;
  }

  double entropy() const {
    constexpr double log_two_pi = 1.8378770664093454836;
    return log_std_.sum() + 0.5 * log_std_.size() * (1.0 + log_two_pi);
  }

 private:
  bool use_conv_ = false;
  int history_ = 0, action_dim_ = 0, obs_dim_ = 0;
  nn::Mlp extractor_, conv_fc_, actor_, critic_;
  nn::Conv1d conv1_, conv2_;
  VecD log_std_;
};

struct Rollout {
  std::vector<VecD> obs, actions;
  VecD log_probs, values, rewards;
};

struct PpoUpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  double mean_ratio = 0.0;
};

// One PPO update: K epochs of minibatch SGD on the clipped surrogate with a
// value MSE term and an entropy bonus. The rollout's stored log-probs are the
// "old" policy; parameters change between minibatches as usual.
inline PpoUpdateStats ppo_update(PpoNet& net, const Rollout& roll,
                                 const GaeResult& adv, const PpoConfig& cfg,
                                 nn::AdamState& adam, Rng& shuffle_rng) {
  const int T = static_cast<int>(roll.obs.size());
  PpoUpdateStats stats;
  int stat_count = 0, clip_count = 0;

  std::vector<int> idx(T);
  for (int i = 0; i < T; ++i) idx[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = T - 1; i > 0; --i)
      std::swap(idx[i], idx[shuffle_rng.index(static_cast<std::uint64_t>(i + 1))]);
    for (int start = 0; start < T; start += cfg.minibatch) {
      const int mb = std::min(cfg.minibatch, T - start);
      PpoNet::Grads grads = net.zero_grads();
      double pl = 0.0, vl = 0.0;
      for (int k = 0; k < mb; ++k) {
        const int t = idx[start + k];
        PpoNet::Tape tape;
        const VecD feat = net.features(roll.obs[t], &tape);
        VecD mean;
        double value = 0.0;
        net.actor_critic(feat, &tape, &mean, &value);

        const double lp = net.log_prob(roll.actions[t], mean);
        const double ratio = std::exp(lp - roll.log_probs[t]);
        const double A = adv.advantages[t];
        const auto [obj, clipped] = clipped_objective(ratio, A, cfg.clip_eps);
        pl += -obj;
        if (clipped) ++clip_count;
        stats.mean_ratio += ratio;
        ++stat_count;

        // d(-obj)/d lp: flows only while the unclipped branch is active.
        const double dlp = clipped ? 0.0 : -A * ratio;
        const double verr = value - adv.returns[t];
        vl += verr * verr;

        VecD dmean = VecD::Zero(mean.size());
        for (int d = 0; d < mean.size(); ++d) {
          const double s = std::exp(net.log_std()[d]);
          const double z = (roll.actions[t][d] - mean[d]) / s;
          dmean[d] = (dlp / mb) * (z / s);  // dlp/dmean = z/s
          grads.log_std[d] += (dlp / mb) * (z * z - 1.0);
        }
        net.backward(tape, dmean, cfg.vf_coef * 2.0 * verr / mb, grads);
      }
      // Entropy bonus: state-independent, acts on log_std only.
      grads.log_std.array() -= cfg.entropy_coef;
      stats.grad_norm = nn::adam_step(net.param_list(), net.grad_list(grads), adam,
                                      cfg.lr, cfg.max_grad_norm);
      stats.policy_loss += pl / mb;
      stats.value_loss += vl / mb;
    }
  }
  stats.entropy = net.entropy();
  if (stat_count > 0) {
    stats.clip_fraction = static_cast<double>(clip_count) / stat_count;
    stats.mean_ratio /= stat_count;
  }
  return stats;
}

// Full training loop: rollout -> GAE -> update, one episode per rollout.
// Stops on the fidelity target, the episode budget, or the stagnation rule
// (best fidelity parked in [0.99, stop) without improvement too long).
inline RunResult train_ppo(const Simulator& sim, int n_segments,
                           const PpoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Stopwatch clock;
  QocEnv env(sim, n_segments, cfg);
  PpoNet net(env.obs_dim(), env.action_dim(), cfg.history, cfg, seed);
  Rng action_rng(seed, "ppo_actions");
  Rng shuffle_rng(seed, "ppo_shuffle");
  nn::AdamState adam;

  RunResult run;
  run.seed = seed;
  run.gate_strings = sim.task().gate_strings;
  run.termination = "episode_budget";

  double best_seen = -1.0;
  long best_episode = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    VecD obs = env.reset();
    Rollout roll;
    bool done = false;
    while (!done) {
      const VecD feat = net.features(obs, nullptr);
      VecD mean;
      double value = 0.0;
      net.actor_critic(feat, nullptr, &mean, &value);
      VecD action(mean.size());
      for (int d = 0; d < mean.size(); ++d)
        action[d] = mean[d] + std::exp(net.log_std()[d]) * action_rng.normal();
      const double lp = net.log_prob(action, mean);

      auto step = env.step(action);
      roll.obs.push_back(std::move(obs));
      roll.actions.push_back(action);
      const long t = static_cast<long>(roll.obs.size()) - 1;
      roll.log_probs.conservativeResize(t + 1);
      roll.values.conservativeResize(t + 1);
      roll.rewards.conservativeResize(t + 1);
      roll.log_probs[t] = lp;
      roll.values[t] = value;
      roll.rewards[t] = step.reward;
      obs = std::move(step.obs);
      done = step.done;
    }

    const GaeResult adv = gae(roll.rewards, roll.values, cfg.gamma, cfg.gae_lambda);
    ppo_update(net, roll, adv, cfg, adam, shuffle_rng);

    run.trace.push_back({ep, 1.0 - env.best_fidelity(), env.fidelity(), clock.ms()});
    if (env.best_fidelity() > best_seen) {
      best_seen = env.best_fidelity();
      best_episode = ep;
    }
    if (env.best_fidelity() >= cfg.stop_fidelity) {
      run.termination = "stop_fidelity";
      break;
    }
    if (best_seen >= 0.99 && best_seen < cfg.stop_fidelity &&
        ep - best_episode >= cfg.stagnation_episodes) {
      run.termination = "stagnation";
      break;
    }
  }

  run.best_schedule = env.best_schedule();
  run.final_fidelity = sim.fidelity(run.best_schedule);
  run.final_error = 1.0 - run.final_fidelity;
  run.n_evals = env.n_evals() + 1;
  run.wall_ms = clock.ms();
  return run;
}

}  // namespace hwqoc
