#pragma once

// JSON experiment configuration. Parsing is strict: unknown keys anywhere are
// an error (reported with their dotted path), missing keys fall back to
// defaults, and the parsed config can be dumped back to a canonical document
// that reparses to the same config (numbers round-trip exactly).

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hwqoc/e2e.hpp"
#include "hwqoc/ppo.hpp"
#include "hwqoc/sade_adam.hpp"

namespace hwqoc {

using Json = nlohmann::json;

struct OptimizerConfig {
  std::string method = "sade_adam";  // sade_adam | ppo | e2e
  int n_segments = 20;
  SadeConfig sade;
  AdamRefineConfig adam;
  PpoConfig ppo;
  E2eConfig e2e;
};

struct Config {
  std::string name = "experiment";
  HardwareModel hardware;
  // Seeds left null in the file are derived per run seed at instantiation.
  std::optional<std::uint64_t> geometry_seed;
  std::optional<std::uint64_t> imperfection_seed;
  QuantumTask task;
  bool random_gates = false;  // draw gate strings per run instead of task.gate_strings
  int random_n_gates = 1;
  std::optional<std::uint64_t> gate_seed;
  PhysicalConstants constants;  // drive_scale <= 0: calibrate from T_g
  OptimizerConfig optimizer;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output_dir = "out";
};

namespace cfgdetail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: '" + path + "' " + what);
}

inline double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "must be a number");
  return v.get<double>();
}

inline int as_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "must be an integer");
  return v.get<int>();
}

inline bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "must be a boolean");
  return v.get<bool>();
}

inline std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "must be a string");
  return v.get<std::string>();
}

inline std::uint64_t as_seed(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  fail(path, "must be a nonnegative integer");
}

inline std::optional<std::uint64_t> as_opt_seed(const Json& v,
                                                const std::string& path) {
  if (v.is_null()) return std::nullopt;
  return as_seed(v, path);
}

inline std::vector<double> as_dvec(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(as_number(e, path));
  return out;
}

inline std::vector<int> as_ivec(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "must be an array of integers");
  std::vector<int> out;
  for (const auto& e : v) out.push_back(as_int(e, path));
  return out;
}

inline std::vector<std::string> as_svec(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(as_string(e, path));
  return out;
}

// A scalar broadcasts to all n channels; an array must list all n.
inline VecD as_vecd_broadcast(const Json& v, int n, const std::string& path) {
  if (v.is_number()) return VecD::Constant(n, v.get<double>());
  const std::vector<double> e = as_dvec(v, path);
  if (static_cast<int>(e.size()) != n)
    fail(path, "must be a scalar or an array of length " + std::to_string(n));
  return Eigen::Map<const VecD>(e.data(), n);
}

// Complex vector: scalar (real, broadcast) or array whose entries are either
// real numbers or [re, im] pairs.
inline VecC as_cvec_broadcast(const Json& v, int n, const std::string& path) {
  if (v.is_number()) return VecC::Constant(n, cplx(v.get<double>(), 0.0));
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    fail(path, "must be a scalar or an array of length " + std::to_string(n));
  VecC out(n);
  for (int i = 0; i < n; ++i) {
    const Json& e = v[i];
    if (e.is_number()) {
      out[i] = cplx(e.get<double>(), 0.0);
    } else if (e.is_array() && e.size() == 2) {
      out[i] = cplx(as_number(e[0], path), as_number(e[1], path));
    } else {
      fail(path, "entries must be numbers or [re, im] pairs");
    }
  }
  return out;
}

inline MatD as_points(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "must be a nonempty array of [x, y] pairs");
  MatD out(static_cast<int>(v.size()), 2);
  for (int i = 0; i < out.rows(); ++i) {
    const Json& e = v[i];
    if (!e.is_array() || e.size() != 2) fail(path, "entries must be [x, y] pairs");
    out(i, 0) = as_number(e[0], path);
    out(i, 1) = as_number(e[1], path);
  }
  return out;
}

// Strict object view: every key must be taken exactly once, leftovers are
// reported with their full dotted path.
class ObjReader {
 public:
  ObjReader(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_.empty() ? "(root)" : path_, "must be an object");
  }

  std::string key_path(const std::string& k) const {
    return path_.empty() ? k : path_ + "." + k;
  }

  const Json* take(const char* k) {
    auto it = j_->find(k);
    if (it == j_->end()) return nullptr;
    used_.insert(k);
    return &*it;
  }

  void num(const char* k, double& out) {
    if (const Json* v = take(k)) out = as_number(*v, key_path(k));
  }
  void integer(const char* k, int& out) {
    if (const Json* v = take(k)) out = as_int(*v, key_path(k));
  }
  void boolean(const char* k, bool& out) {
    if (const Json* v = take(k)) out = as_bool(*v, key_path(k));
  }
  void str(const char* k, std::string& out) {
    if (const Json* v = take(k)) out = as_string(*v, key_path(k));
  }
  void seed(const char* k, std::uint64_t& out) {
    if (const Json* v = take(k)) out = as_seed(*v, key_path(k));
  }
  void opt_seed(const char* k, std::optional<std::uint64_t>& out) {
    if (const Json* v = take(k)) out = as_opt_seed(*v, key_path(k));
  }
  void dvec(const char* k, std::vector<double>& out) {
    if (const Json* v = take(k)) out = as_dvec(*v, key_path(k));
  }
  void ivec(const char* k, std::vector<int>& out) {
    if (const Json* v = take(k)) out = as_ivec(*v, key_path(k));
  }

  void done() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!used_.count(it.key()))
        throw std::invalid_argument("config: unknown key '" + key_path(it.key()) + "'");
  }

 private:
  const Json* j_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace cfgdetail

inline Config parse_config(const Json& root) {
  using namespace cfgdetail;
  Config cfg;
  ObjReader r(root, "");

  r.str("name", cfg.name);

  if (const Json* jh = r.take("hardware")) {
    ObjReader h(*jh, "hardware");
    PicGeometry& pic = cfg.hardware.pic;
    const Json* j_neff = nullptr;
    if (const Json* jp = h.take("pic")) {
      ObjReader p(*jp, "hardware.pic");
      p.integer("n_channels", pic.n_channels);
      p.num("d0", pic.d0);
      p.num("L0", pic.L0);
      p.num("s", pic.s);
      p.num("delta_d_range", pic.delta_d_range);
      p.num("delta_L_range", pic.delta_L_range);
      p.num("lambda0", pic.lambda0);
      j_neff = p.take("n_eff");
      if (j_neff)
        pic.n_eff = as_vecd_broadcast(*j_neff, pic.n_channels, "hardware.pic.n_eff");
      p.done();
    }
    if (!j_neff) pic.n_eff = VecD::Constant(pic.n_channels, 2.0255);

    if (const Json* jc = h.take("coupling")) {
      ObjReader c(*jc, "hardware.coupling");
      c.num("kappa0", cfg.hardware.coupling.kappa0);
      c.num("alpha", cfg.hardware.coupling.alpha);
      c.done();
    }
    if (const Json* jd = h.take("drmzm")) {
      ObjReader d(*jd, "hardware.drmzm");
      d.num("v_pi", cfg.hardware.drmzm.v_pi);
      d.num("insertion", cfg.hardware.drmzm.insertion);
      d.done();
    }

    cfg.hardware.slm.amplitude = VecD::Constant(pic.n_channels, 1.0);
    cfg.hardware.slm.phase = VecD::Zero(pic.n_channels);
    if (const Json* js = h.take("slm")) {
      ObjReader s(*js, "hardware.slm");
      if (const Json* v = s.take("amplitude"))
        cfg.hardware.slm.amplitude =
            as_vecd_broadcast(*v, pic.n_channels, "hardware.slm.amplitude");
      if (const Json* v = s.take("phase"))
        cfg.hardware.slm.phase =
            as_vecd_broadcast(*v, pic.n_channels, "hardware.slm.phase");
      s.done();
    }

    BeamLattice& lat = cfg.hardware.lattice;
    const Json* j_atoms = nullptr;
    const Json* j_beams = nullptr;
    if (const Json* jl = h.take("lattice")) {
      ObjReader l(*jl, "hardware.lattice");
      l.num("w0", lat.w0);
      l.num("spacing", lat.spacing);
      j_atoms = l.take("atom_positions");
      j_beams = l.take("beam_centers");
      if (j_atoms) lat.atom_positions = as_points(*j_atoms, "hardware.lattice.atom_positions");
      if (j_beams) lat.beam_centers = as_points(*j_beams, "hardware.lattice.beam_centers");
      l.done();
    }
    if (!j_atoms) lat.atom_positions = make_triangular_lattice(pic.n_channels, lat.spacing);
    if (!j_beams) lat.beam_centers = lat.atom_positions;  // one beam per atom site

    if (const Json* ji = h.take("imperfections")) {
      ObjReader im(*ji, "hardware.imperfections");
      ImperfectionConfig& imp = cfg.hardware.imperfections;
      im.num("weak_scatter_eps", imp.weak_scatter_eps);
      im.boolean("dynamic", imp.dynamic);
      im.num("delta_kappa", imp.delta_kappa);
      im.num("delta_alpha", imp.delta_alpha);
      im.num("delta_w", imp.delta_w);
      im.opt_seed("seed", cfg.imperfection_seed);
      im.done();
    }

    if (const Json* v = h.take("a_in"))
      cfg.hardware.a_in = as_cvec_broadcast(*v, pic.n_channels, "hardware.a_in");
    else
      cfg.hardware.a_in = VecC::Constant(pic.n_channels, cplx(1.0, 0.0));
    h.opt_seed("geometry_seed", cfg.geometry_seed);
    h.done();
  } else {
    // All-default hardware still needs the channel-count-dependent vectors.
    PicGeometry& pic = cfg.hardware.pic;
    pic.n_eff = VecD::Constant(pic.n_channels, 2.0255);
    cfg.hardware.slm.amplitude = VecD::Constant(pic.n_channels, 1.0);
    cfg.hardware.slm.phase = VecD::Zero(pic.n_channels);
    cfg.hardware.lattice.atom_positions =
        make_triangular_lattice(pic.n_channels, cfg.hardware.lattice.spacing);
    cfg.hardware.lattice.beam_centers = cfg.hardware.lattice.atom_positions;
    cfg.hardware.a_in = VecC::Constant(pic.n_channels, cplx(1.0, 0.0));
  }

  cfg.task.n_atoms = cfg.hardware.pic.n_channels;
  bool gates_given = false;
  if (const Json* jq = r.take("quantum")) {
    ObjReader q(*jq, "quantum");
    if (const Json* jt = q.take("task")) {
      ObjReader t(*jt, "quantum.task");
      t.integer("n_atoms", cfg.task.n_atoms);
      const Json* j_gs = t.take("gate_strings");
      const Json* j_rg = t.take("random_gates");
      if (j_gs && j_rg)
        fail("quantum.task", "cannot give both gate_strings and random_gates");
      if (j_gs) {
        gates_given = true;
        cfg.task.gate_strings = as_svec(*j_gs, "quantum.task.gate_strings");
        for (const auto& s : cfg.task.gate_strings)
          parse_gate_string(s);  // fail early on bad gate characters
      } else if (j_rg) {
        cfg.random_gates = true;
        ObjReader g(*j_rg, "quantum.task.random_gates");
        g.integer("n_gates", cfg.random_n_gates);
        g.opt_seed("gate_seed", cfg.gate_seed);
        g.done();
        if (cfg.random_n_gates < 0 || cfg.random_n_gates > cfg.task.n_atoms)
          fail("quantum.task.random_gates.n_gates",
               "must be in [0, n_atoms]");
      }
      t.num("T_g", cfg.task.T_g);
      t.integer("t_steps", cfg.task.t_steps);
      t.done();
    }
    if (const Json* jc = q.take("constants")) {
      ObjReader c(*jc, "quantum.constants");
      PhysicalConstants& pc = cfg.constants;
      c.num("mu1e", pc.mu1e);
      c.num("mu2e", pc.mu2e);
      c.num("Delta", pc.Delta);
      c.num("intensity", pc.intensity);
      c.num("hyperfine", pc.hyperfine);
      c.num("omega0", pc.omega0);
      c.num("omega_r", pc.omega_r);
      if (const Json* v = c.take("drive_scale")) {
        // null means "calibrate from the gate time at startup"
        pc.drive_scale = v->is_null() ? 0.0 : as_number(*v, "quantum.constants.drive_scale");
      }
      c.done();
    }
    q.done();
  }
  if (gates_given) {
    detail::require(static_cast<int>(cfg.task.gate_strings.size()) == cfg.task.n_atoms,
                    "quantum.task.gate_strings must have one entry per atom");
  } else if (static_cast<int>(cfg.task.gate_strings.size()) != cfg.task.n_atoms) {
    // Default task gates must match whatever atom count the config chose.
    // Random-gate tasks hold an all-identity placeholder until realization.
    cfg.task.gate_strings.assign(cfg.task.n_atoms, "I");
    if (!cfg.random_gates) cfg.task.gate_strings[0] = "X";
  }

  if (const Json* jo = r.take("optimizer")) {
    ObjReader o(*jo, "optimizer");
    OptimizerConfig& opt = cfg.optimizer;
    o.str("method", opt.method);
    o.integer("n_segments", opt.n_segments);
    if (const Json* js = o.take("sade")) {
      ObjReader s(*js, "optimizer.sade");
      s.integer("popsize", opt.sade.popsize);
      s.integer("generations", opt.sade.generations);
      s.num("f_threshold", opt.sade.f_threshold);
      s.num("mu_min", opt.sade.mu_min);
      s.num("mu_max", opt.sade.mu_max);
      s.num("cr_min", opt.sade.cr_min);
      s.num("cr_max", opt.sade.cr_max);
      s.integer("adaptation_window", opt.sade.adaptation_window);
      s.num("adaptation_sigma", opt.sade.adaptation_sigma);
      s.num("init_spread", opt.sade.init_spread);
      s.done();
    }
    if (const Json* ja = o.take("adam")) {
      ObjReader a(*ja, "optimizer.adam");
      a.num("lr", opt.adam.lr);
      a.dvec("decay_thresholds", opt.adam.decay_thresholds);
      a.dvec("decay_factors", opt.adam.decay_factors);
      a.num("stop_fidelity", opt.adam.stop_fidelity);
      a.integer("stagnation_window", opt.adam.stagnation_window);
      a.num("stagnation_eps", opt.adam.stagnation_eps);
      a.integer("max_steps", opt.adam.max_steps);
      a.num("grad_clip", opt.adam.grad_clip);
      a.done();
    }
    if (const Json* jp = o.take("ppo")) {
      ObjReader p(*jp, "optimizer.ppo");
      PpoConfig& ppo = opt.ppo;
      p.num("lr", ppo.lr);
      p.num("entropy_coef", ppo.entropy_coef);
      p.num("gamma", ppo.gamma);
      p.num("clip_eps", ppo.clip_eps);
      p.num("gae_lambda", ppo.gae_lambda);
      p.num("max_grad_norm", ppo.max_grad_norm);
      p.integer("epochs", ppo.epochs);
      p.integer("minibatch", ppo.minibatch);
      p.integer("episode_steps", ppo.episode_steps);
      p.integer("episodes", ppo.episodes);
      p.integer("history", ppo.history);
      p.num("action_scale", ppo.action_scale);
      p.num("vf_coef", ppo.vf_coef);
      p.str("extractor", ppo.extractor);
      p.integer("hidden", ppo.hidden);
      p.integer("conv_filters1", ppo.conv_filters1);
      p.integer("conv_filters2", ppo.conv_filters2);
      p.integer("conv_kernel", ppo.conv_kernel);
      p.num("log_std_init", ppo.log_std_init);
      p.num("stop_fidelity", ppo.stop_fidelity);
      p.integer("stagnation_episodes", ppo.stagnation_episodes);
      p.done();
    }
    if (const Json* je = o.take("e2e")) {
      ObjReader e(*je, "optimizer.e2e");
      E2eConfig& e2e = opt.e2e;
      e.ivec("hidden", e2e.hidden);
      e.integer("latent_dim", e2e.latent_dim);
      e.ivec("phases", e2e.phases);
      e.ivec("phase_episodes", e2e.phase_episodes);
      e.num("lr", e2e.lr);
      e.num("grad_clip", e2e.grad_clip);
      e.num("stop_fidelity", e2e.stop_fidelity);
      e.integer("stagnation_window", e2e.stagnation_window);
      e.num("stagnation_eps", e2e.stagnation_eps);
      e.boolean("resample_latent", e2e.resample_latent);
      e.done();
    }
    o.done();
    if (opt.method != "sade_adam" && opt.method != "ppo" && opt.method != "e2e")
      fail("optimizer.method", "must be one of sade_adam | ppo | e2e");
  }

  if (const Json* js = r.take("seeds")) {
    cfg.seeds.clear();
    if (js->is_number()) {
      cfg.seeds.push_back(cfgdetail::as_seed(*js, "seeds"));
    } else if (js->is_array()) {
      for (const auto& e : *js) cfg.seeds.push_back(cfgdetail::as_seed(e, "seeds"));
    } else {
      fail("seeds", "must be a seed or an array of seeds");
    }
    if (cfg.seeds.empty()) fail("seeds", "must not be empty");
  }
  r.str("output_dir", cfg.output_dir);
  r.done();

  // Structural validation that does not depend on the run seed.
  cfg.hardware.pic.validate();
  cfg.hardware.coupling.validate();
  cfg.hardware.drmzm.validate();
  cfg.hardware.slm.validate(cfg.hardware.pic.n_channels);
  cfg.hardware.lattice.validate();
  cfg.hardware.imperfections.validate();
  detail::require(cfg.task.n_atoms == cfg.hardware.pic.n_channels,
                  "task.n_atoms must equal hardware.pic.n_channels");
  detail::require(cfg.optimizer.n_segments >= 1 &&
                      cfg.task.t_steps % cfg.optimizer.n_segments == 0,
                  "optimizer.n_segments must divide task.t_steps");
  cfg.optimizer.sade.validate();
  cfg.optimizer.adam.validate();
  cfg.optimizer.ppo.validate();
  cfg.optimizer.e2e.validate();
  return cfg;
}

// Canonical echo: every key present, defaults filled in, keys sorted by the
// serializer. parse_config(to_json(c)) reproduces c exactly.
inline Json to_json(const Config& cfg) {
  Json j;
  j["name"] = cfg.name;

  Json pic;
  pic["n_channels"] = cfg.hardware.pic.n_channels;
  pic["d0"] = cfg.hardware.pic.d0;
  pic["L0"] = cfg.hardware.pic.L0;
  pic["s"] = cfg.hardware.pic.s;
  pic["delta_d_range"] = cfg.hardware.pic.delta_d_range;
  pic["delta_L_range"] = cfg.hardware.pic.delta_L_range;
  pic["lambda0"] = cfg.hardware.pic.lambda0;
  pic["n_eff"] = std::vector<double>(cfg.hardware.pic.n_eff.begin(),
                                     cfg.hardware.pic.n_eff.end());

  Json lat;
  lat["w0"] = cfg.hardware.lattice.w0;
  lat["spacing"] = cfg.hardware.lattice.spacing;
  auto points = [](const MatD& m) {
    Json arr = Json::array();
    for (int i = 0; i < m.rows(); ++i) arr.push_back({m(i, 0), m(i, 1)});
    return arr;
  };
  lat["atom_positions"] = points(cfg.hardware.lattice.atom_positions);
  lat["beam_centers"] = points(cfg.hardware.lattice.beam_centers);

  Json imp;
  imp["weak_scatter_eps"] = cfg.hardware.imperfections.weak_scatter_eps;
  imp["dynamic"] = cfg.hardware.imperfections.dynamic;
  imp["delta_kappa"] = cfg.hardware.imperfections.delta_kappa;
  imp["delta_alpha"] = cfg.hardware.imperfections.delta_alpha;
  imp["delta_w"] = cfg.hardware.imperfections.delta_w;
  imp["seed"] = cfg.imperfection_seed ? Json(*cfg.imperfection_seed) : Json();

  Json a_in = Json::array();
  for (int i = 0; i < cfg.hardware.a_in.size(); ++i)
    a_in.push_back({cfg.hardware.a_in[i].real(), cfg.hardware.a_in[i].imag()});

  j["hardware"] = {
      {"pic", pic},
      {"coupling",
       {{"kappa0", cfg.hardware.coupling.kappa0},
        {"alpha", cfg.hardware.coupling.alpha}}},
      {"drmzm",
       {{"v_pi", cfg.hardware.drmzm.v_pi},
        {"insertion", cfg.hardware.drmzm.insertion}}},
      {"slm",
       {{"amplitude", std::vector<double>(cfg.hardware.slm.amplitude.begin(),
                                          cfg.hardware.slm.amplitude.end())},
        {"phase", std::vector<double>(cfg.hardware.slm.phase.begin(),
                                      cfg.hardware.slm.phase.end())}}},
      {"lattice", lat},
      {"imperfections", imp},
      {"a_in", a_in},
      {"geometry_seed", cfg.geometry_seed ? Json(*cfg.geometry_seed) : Json()},
  };

  Json task;
  task["n_atoms"] = cfg.task.n_atoms;
  if (cfg.random_gates) {
    task["random_gates"] = {
        {"n_gates", cfg.random_n_gates},
        {"gate_seed", cfg.gate_seed ? Json(*cfg.gate_seed) : Json()}};
  } else {
    task["gate_strings"] = cfg.task.gate_strings;
  }
  task["T_g"] = cfg.task.T_g;
  task["t_steps"] = cfg.task.t_steps;

  j["quantum"] = {
      {"task", task},
      {"constants",
       {{"mu1e", cfg.constants.mu1e},
        {"mu2e", cfg.constants.mu2e},
        {"Delta", cfg.constants.Delta},
        {"intensity", cfg.constants.intensity},
        {"hyperfine", cfg.constants.hyperfine},
        {"omega0", cfg.constants.omega0},
        {"omega_r", cfg.constants.omega_r},
        {"drive_scale", cfg.constants.drive_scale > 0.0
                            ? Json(cfg.constants.drive_scale)
                            : Json()}}},
  };

  const SadeConfig& s = cfg.optimizer.sade;
  const AdamRefineConfig& a = cfg.optimizer.adam;
  const PpoConfig& p = cfg.optimizer.ppo;
  const E2eConfig& e = cfg.optimizer.e2e;
  j["optimizer"] = {
      {"method", cfg.optimizer.method},
      {"n_segments", cfg.optimizer.n_segments},
      {"sade",
       {{"popsize", s.popsize},
        {"generations", s.generations},
        {"f_threshold", s.f_threshold},
        {"mu_min", s.mu_min},
        {"mu_max", s.mu_max},
        {"cr_min", s.cr_min},
        {"cr_max", s.cr_max},
        {"adaptation_window", s.adaptation_window},
        {"adaptation_sigma", s.adaptation_sigma},
        {"init_spread", s.init_spread}}},
      {"adam",
       {{"lr", a.lr},
        {"decay_thresholds", a.decay_thresholds},
        {"decay_factors", a.decay_factors},
        {"stop_fidelity", a.stop_fidelity},
        {"stagnation_window", a.stagnation_window},
        {"stagnation_eps", a.stagnation_eps},
        {"max_steps", a.max_steps},
        {"grad_clip", a.grad_clip}}},
      {"ppo",
       {{"lr", p.lr},
        {"entropy_coef", p.entropy_coef},
        {"gamma", p.gamma},
        {"clip_eps", p.clip_eps},
        {"gae_lambda", p.gae_lambda},
        {"max_grad_norm", p.max_grad_norm},
        {"epochs", p.epochs},
        {"minibatch", p.minibatch},
        {"episode_steps", p.episode_steps},
        {"episodes", p.episodes},
        {"history", p.history},
        {"action_scale", p.action_scale},
        {"vf_coef", p.vf_coef},
        {"extractor", p.extractor},
        {"hidden", p.hidden},
        {"conv_filters1", p.conv_filters1},
        {"conv_filters2", p.conv_filters2},
        {"conv_kernel", p.conv_kernel},
        {"log_std_init", p.log_std_init},
        {"stop_fidelity", p.stop_fidelity},
        {"stagnation_episodes", p.stagnation_episodes}}},
      {"e2e",
       {{"hidden", e.hidden},
        {"latent_dim", e.latent_dim},
        {"phases", e.phases},
        {"phase_episodes", e.phase_episodes},
        {"lr", e.lr},
        {"grad_clip", e.grad_clip},
        {"stop_fidelity", e.stop_fidelity},
        {"stagnation_window", e.stagnation_window},
        {"stagnation_eps", e.stagnation_eps},
        {"resample_latent", e.resample_latent}}},
  };

  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  return j;
}

inline std::string dump_config(const Config& cfg) { return to_json(cfg).dump(2) + "\n"; }

// Parse with a filename and line/column in the error message. nlohmann
// reports a byte offset; the offset is mapped back onto the text.
inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& err) {
    std::size_t byte = err.byte > 0 ? err.byte - 1 : 0;
    byte = std::min(byte, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << col << ": " << err.what();
    throw std::runtime_error(msg.str());
  }
}

inline Config load_config_text(const std::string& text, const std::string& origin) {
  return parse_config(parse_json_text(text, origin));
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str(), path);
}

// FNV-1a over the canonical dump; stable across runs and platforms.
inline std::uint64_t config_hash(const Config& cfg) {
  const std::string s = dump_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace hwqoc
