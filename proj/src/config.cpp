#include "qdc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace qdc {

namespace {

std::string where(const std::string& source, const YAML::Mark& m) {
  std::ostringstream os;
  os << source << ":" << (m.line + 1) << ":" << (m.column + 1) << ": ";
  return os.str();
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    throw ConfigError(where(source_, n.Mark()) + msg);
  }

  void require_map(const YAML::Node& n, const std::string& section) const {
    if (!n.IsMap()) fail(n, "section '" + section + "' must be a mapping");
  }

  void check_keys(const YAML::Node& n, const std::string& section, const std::set<std::string>& allowed) const {
    require_map(n, section);
    for (const auto& kv : n) {
      std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in section '" + section + "'");
    }
  }

  double real(const YAML::Node& n, const std::string& what) const {
    try {
      double v = n.as<double>();
      if (!std::isfinite(v)) fail(n, what + " must be finite");
      return v;
    } catch (const YAML::Exception&) {
      fail(n, what + " must be a number");
    }
  }

  int integer(const YAML::Node& n, const std::string& what) const {
    try {
      return n.as<int>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be an integer");
    }
  }

  std::string str(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a string");
    return n.as<std::string>();
  }

  // A number or a [re, im] pair.
  Complex complex(const YAML::Node& n, const std::string& what) const {
    if (n.IsSequence()) {
      if (n.size() != 2) fail(n, what + " must be a number or [re, im]");
      return {real(n[0], what), real(n[1], what)};
    }
    return {real(n, what), 0.0};
  }

  std::vector<double> reals(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list of numbers");
    std::vector<double> out;
    for (const auto& x : n) out.push_back(real(x, what));
    return out;
  }

  std::vector<int> ints(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list of integers");
    std::vector<int> out;
    for (const auto& x : n) out.push_back(integer(x, what));
    return out;
  }

  std::vector<Complex> complexes(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list");
    std::vector<Complex> out;
    for (const auto& x : n) out.push_back(complex(x, what));
    return out;
  }

 private:
  std::string source_;
};

Matrix ket(int dim, int i) {
  Matrix v = Matrix::Zero(dim, 1);
  v(i, 0) = 1.0;
  return v;
}

}  // namespace

void RunConfig::validate() const {
  params.validate();
  if (!(integrator.dt > 0.0) || !(integrator.t_end > 0.0)) throw ConfigError("integrator: dt and t_end must be > 0");
  if (!(integrator.norm_guard > 0.0)) throw ConfigError("integrator: norm_guard must be > 0");
  if (!(tolerances.rank > 0.0) || !(tolerances.invariance > 0.0) || !(tolerances.decoupling > 0.0))
    throw ConfigError("tolerances must be > 0");
  if (dfs_qubits < 1 || dfs_qubits > 4) throw ConfigError("dfs: qubits must be in [1, 4]");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(source, e.mark) + e.msg);
  }
  RunConfig cfg;
  if (root.IsNull()) return cfg;
  Reader rd(source);
  rd.check_keys(root, "<root>",
                {"model", "params", "initial_state", "schedule", "integrator", "tolerances", "synthesis", "compare",
                 "dfs", "output"});
  if (auto n = root["model"]) {
    try {
      cfg.model = model_kind_from_string(rd.str(n, "model"));
    } catch (const std::invalid_argument& e) {
      rd.fail(n, e.what());
    }
  }
  if (auto p = root["params"]) {
    rd.check_keys(p, "params", {"omega0", "omega_env", "g", "w", "j1", "j2", "env_levels", "n_sys"});
    if (p["omega0"]) cfg.params.omega0 = rd.real(p["omega0"], "params.omega0");
    if (p["omega_env"]) cfg.params.omega_env = rd.real(p["omega_env"], "params.omega_env");
    if (p["g"]) cfg.params.g = rd.complex(p["g"], "params.g");
    if (p["w"]) cfg.params.w = rd.complex(p["w"], "params.w");
    if (p["j1"]) cfg.params.j1 = rd.real(p["j1"], "params.j1");
    if (p["j2"]) cfg.params.j2 = rd.real(p["j2"], "params.j2");
    if (p["env_levels"]) {
      cfg.params.env_levels = rd.integer(p["env_levels"], "params.env_levels");
      if (cfg.params.env_levels < 2) rd.fail(p["env_levels"], "params.env_levels must be >= 2");
    }
    if (p["n_sys"]) {
      cfg.params.n_sys = rd.integer(p["n_sys"], "params.n_sys");
      if (cfg.params.n_sys < 3) rd.fail(p["n_sys"], "params.n_sys must be >= 3");
    }
  }
  if (auto s = root["initial_state"]) {
    rd.check_keys(s, "initial_state", {"preset", "amplitudes", "seed"});
    if (s["preset"]) {
      cfg.initial_state.preset = rd.str(s["preset"], "initial_state.preset");
      static const std::set<std::string> presets{"dfs_pair", "ground", "plus", "generic"};
      if (!presets.count(cfg.initial_state.preset)) rd.fail(s["preset"], "unknown initial_state.preset");
    }
    if (s["amplitudes"]) cfg.initial_state.amplitudes = rd.complexes(s["amplitudes"], "initial_state.amplitudes");
    if (s["seed"]) cfg.initial_state.seed = static_cast<unsigned>(rd.integer(s["seed"], "initial_state.seed"));
  }
  if (auto s = root["schedule"]) {
    rd.check_keys(s, "schedule",
                  {"kind", "channels", "values", "amplitude", "omega", "phase", "offset", "breakpoints", "segments"});
    auto& sc = cfg.schedule;
    if (s["kind"]) {
      sc.kind = rd.str(s["kind"], "schedule.kind");
      static const std::set<std::string> kinds{"zero", "constant", "sinusoidal", "piecewise_constant"};
      if (!kinds.count(sc.kind)) rd.fail(s["kind"], "unknown schedule.kind '" + sc.kind + "'");
    }
    if (s["channels"]) sc.channels = rd.ints(s["channels"], "schedule.channels");
    if (s["values"]) sc.values = rd.reals(s["values"], "schedule.values");
    if (s["amplitude"]) sc.amplitude = rd.reals(s["amplitude"], "schedule.amplitude");
    if (s["omega"]) sc.omega = rd.reals(s["omega"], "schedule.omega");
    if (s["phase"]) sc.phase = rd.reals(s["phase"], "schedule.phase");
    if (s["offset"]) sc.offset = rd.reals(s["offset"], "schedule.offset");
    if (s["breakpoints"]) sc.breakpoints = rd.reals(s["breakpoints"], "schedule.breakpoints");
    if (auto seg = s["segments"]) {
      if (!seg.IsSequence()) rd.fail(seg, "schedule.segments must be a list of lists");
      for (const auto& row : seg) sc.segments.push_back(rd.reals(row, "schedule.segments"));
    }
  }
  if (auto s = root["integrator"]) {
    rd.check_keys(s, "integrator", {"dt", "t_end", "norm_guard"});
    if (s["dt"]) cfg.integrator.dt = rd.real(s["dt"], "integrator.dt");
    if (s["t_end"]) cfg.integrator.t_end = rd.real(s["t_end"], "integrator.t_end");
    if (s["norm_guard"]) cfg.integrator.norm_guard = rd.real(s["norm_guard"], "integrator.norm_guard");
    if (!(cfg.integrator.dt > 0.0)) rd.fail(s, "integrator.dt must be > 0");
    if (!(cfg.integrator.t_end > 0.0)) rd.fail(s, "integrator.t_end must be > 0");
  }
  if (auto s = root["tolerances"]) {
    rd.check_keys(s, "tolerances", {"rank", "invariance", "decoupling"});
    if (s["rank"]) cfg.tolerances.rank = rd.real(s["rank"], "tolerances.rank");
    if (s["invariance"]) cfg.tolerances.invariance = rd.real(s["invariance"], "tolerances.invariance");
    if (s["decoupling"]) cfg.tolerances.decoupling = rd.real(s["decoupling"], "tolerances.decoupling");
  }
  if (auto s = root["synthesis"]) {
    rd.check_keys(s, "synthesis", {"mode"});
    if (s["mode"]) {
      try {
        cfg.synthesis_mode = synthesis_mode_from_string(rd.str(s["mode"], "synthesis.mode"));
      } catch (const std::invalid_argument& e) {
        rd.fail(s["mode"], e.what());
      }
    }
  }
  if (auto s = root["compare"]) {
    rd.check_keys(s, "compare", {"g_values", "mode"});
    if (s["g_values"]) cfg.g_values = rd.complexes(s["g_values"], "compare.g_values");
    if (s["mode"]) {
      std::string m = rd.str(s["mode"], "compare.mode");
      if (m == "open")
        cfg.loop_mode = LoopMode::open;
      else if (m == "closed")
        cfg.loop_mode = LoopMode::closed;
      else
        rd.fail(s["mode"], "compare.mode must be open or closed");
    }
  }
  if (auto s = root["dfs"]) {
    rd.check_keys(s, "dfs", {"qubits"});
    if (s["qubits"]) cfg.dfs_qubits = rd.integer(s["qubits"], "dfs.qubits");
  }
  if (auto s = root["output"]) {
    rd.check_keys(s, "output", {"dir"});
    if (s["dir"]) cfg.output_dir = rd.str(s["dir"], "output.dir");
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

Vector make_initial_state(const StateSpec& spec, const SystemModel& model) {
  const int dim = model.dim();
  const auto& dims = model.layout.dims();
  const int env = dims.back();
  const int sys = dim / env;
  Vector xi = Vector::Zero(dim);
  if (!spec.amplitudes.empty()) {
    if (static_cast<int>(spec.amplitudes.size()) != dim)
      throw ConfigError("initial_state.amplitudes: expected " + std::to_string(dim) + " entries");
    for (int i = 0; i < dim; ++i) xi(i) = spec.amplitudes[i];
    if (xi.norm() == 0.0) throw ConfigError("initial_state.amplitudes: zero vector");
    return xi / xi.norm();
  }
  Matrix env0 = ket(env, 0);
  if (spec.preset == "ground") {
    xi(0) = 1.0;
  } else if (spec.preset == "generic") {
    std::mt19937_64 rng(spec.seed);
    xi = random_state(dim, rng);
  } else if (spec.preset == "plus") {
    Matrix s = Matrix::Constant(sys, 1, 1.0 / std::sqrt(static_cast<double>(sys)));
    xi = kron(s, env0).col(0);
  } else {  // dfs_pair
    Matrix s = Matrix::Zero(sys, 1);
    if (model.kind == ModelKind::two_qubit || model.kind == ModelKind::restructured) {
      s(1, 0) = s(2, 0) = 1.0 / std::sqrt(2.0);
    } else if (model.kind == ModelKind::ancilla) {
      // |01>|0>_anc + |10>|0>_anc
      s(2, 0) = s(4, 0) = 1.0 / std::sqrt(2.0);
    } else {
      s(0, 0) = s(1, 0) = 1.0 / std::sqrt(2.0);
    }
    xi = kron(s, env0).col(0);
  }
  return xi;
}

std::vector<int> default_channels(const SystemModel& model) {
  if (model.kind == ModelKind::restructured) {
    const int L = model.params.env_levels;
    return {1, 1 + L, 1 + 2 * L, 1 + 3 * L};
  }
  std::vector<int> out;
  for (int k = 1; k <= std::min(4, model.n_controls()); ++k) out.push_back(k);
  return out;
}

ControlSchedule make_schedule(const ScheduleSpec& spec, const SystemModel& model) {
  const int m = model.n_controls();
  std::vector<int> ch = spec.channels.empty() ? default_channels(model) : spec.channels;
  auto take = [&](const std::vector<double>& v, const char* what) {
    if (v.size() < ch.size())
      throw ConfigError(std::string("schedule.") + what + ": need one value per channel (" +
                        std::to_string(ch.size()) + ")");
    RealVector out(static_cast<Eigen::Index>(ch.size()));
    for (size_t k = 0; k < ch.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k];
    return spread_channels(m, ch, out);
  };
  try {
    if (spec.kind == "zero") return ControlSchedule::zero(m);
    if (spec.kind == "constant") return ControlSchedule::constant(take(spec.values, "values"));
    if (spec.kind == "sinusoidal")
      return ControlSchedule::sinusoidal(take(spec.amplitude, "amplitude"), take(spec.omega, "omega"),
                                         take(spec.phase, "phase"), take(spec.offset, "offset"));
    std::vector<RealVector> segs;
    for (const auto& s : spec.segments) segs.push_back(take(s, "segments"));
    return ControlSchedule::piecewise_constant(spec.breakpoints, segs);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
}

}  // namespace qdc
