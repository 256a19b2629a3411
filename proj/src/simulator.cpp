#include "qdc/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace qdc {

ControlSchedule ControlSchedule::zero(int channels) { return constant(RealVector::Zero(channels)); }

ControlSchedule ControlSchedule::constant(RealVector values) {
  ControlSchedule s;
  s.kind_ = ScheduleKind::constant;
  s.channels_ = static_cast<int>(values.size());
  s.values_ = {std::move(values)};
  return s;
}

ControlSchedule ControlSchedule::piecewise_constant(std::vector<double> breakpoints, std::vector<RealVector> values) {
  if (values.size() != breakpoints.size() + 1)
    throw std::invalid_argument("piecewise schedule: need one more value vector than breakpoints");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end()))
    throw std::invalid_argument("piecewise schedule: breakpoints must be sorted");
  for (const auto& v : values)
    if (v.size() != values[0].size()) throw std::invalid_argument("piecewise schedule: channel count mismatch");
  ControlSchedule s;
  s.kind_ = ScheduleKind::piecewise_constant;
  s.channels_ = static_cast<int>(values[0].size());
  s.breakpoints_ = std::move(breakpoints);
  s.values_ = std::move(values);
  return s;
}

ControlSchedule ControlSchedule::sinusoidal(RealVector amplitude, RealVector omega, RealVector phase,
                                            RealVector offset) {
  const auto n = amplitude.size();
  if (omega.size() != n || phase.size() != n || offset.size() != n)
    throw std::invalid_argument("sinusoidal schedule: parameter lengths differ");
  ControlSchedule s;
  s.kind_ = ScheduleKind::sinusoidal;
  s.channels_ = static_cast<int>(n);
  s.amplitude_ = std::move(amplitude);
  s.omega_ = std::move(omega);
  s.phase_ = std::move(phase);
  s.offset_ = std::move(offset);
  return s;
}

ControlSchedule ControlSchedule::callback(int channels, std::function<RealVector(double)> fn) {
  ControlSchedule s;
  s.kind_ = ScheduleKind::callback;
  s.channels_ = channels;
  s.fn_ = std::move(fn);
  return s;
}

int ControlSchedule::segment(double t) const {
  return static_cast<int>(std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t) - breakpoints_.begin());
}

RealVector ControlSchedule::operator()(double t) const {
  switch (kind_) {
    case ScheduleKind::constant: return values_[0];
    case ScheduleKind::piecewise_constant: return values_[segment(t)];
    case ScheduleKind::sinusoidal: {
      RealVector u(channels_);
      for (int i = 0; i < channels_; ++i) u(i) = offset_(i) + amplitude_(i) * std::sin(omega_(i) * t + phase_(i));
      return u;
    }
    default: {
      RealVector u = fn_(t);
      if (u.size() != channels_) throw DimensionError("callback schedule returned wrong channel count");
      return u;
    }
  }
}

RealVector spread_channels(int total, const std::vector<int>& channels, const RealVector& vals) {
  if (static_cast<Eigen::Index>(channels.size()) != vals.size())
    throw std::invalid_argument("spread_channels: one value per channel required");
  RealVector out = RealVector::Zero(total);
  for (size_t k = 0; k < channels.size(); ++k) {
    if (channels[k] < 1 || channels[k] > total) throw std::invalid_argument("channel number out of range");
    out(channels[k] - 1) = vals(static_cast<Eigen::Index>(k));
  }
  return out;
}

double Trajectory::max_norm_drift() const {
  double m = 0.0;
  for (double n : norm) m = std::max(m, std::abs(n - 1.0));
  return m;
}

namespace {

int step_count(const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0)) throw std::invalid_argument("integrator: dt and t_end must be positive");
  return static_cast<int>(std::llround(cfg.t_end / cfg.dt));
}

void check_initial(const SystemModel& model, const Vector& xi0) {
  if (xi0.size() != model.dim()) throw DimensionError("initial state dim does not match model");
  if (std::abs(xi0.norm() - 1.0) > tol::kStateNorm) throw std::invalid_argument("initial state must be normalized");
}

class Recorder {
 public:
  Recorder(const SystemModel& model, const IntegratorConfig& cfg, Trajectory& traj)
      : model_(model), cfg_(cfg), traj_(traj), c_const_(model.coherence.is_constant()) {
    if (c_const_) c_ = model.coherence.evaluate(0.0);
    traj_.control_labels = model.control_labels;
  }

  void record(double t, const Vector& xi, const RealVector& u) {
    double n = xi.norm();
    if (std::abs(n - 1.0) > cfg_.norm_guard) {
      std::ostringstream os;
      os << "norm drift guard exceeded at t = " << t << ": |xi| = " << std::setprecision(12) << n << " (guard "
         << cfg_.norm_guard << ")";
      throw NumericalError(os.str());
    }
    Complex y = c_const_ ? xi.dot(c_ * xi) : xi.dot(model_.coherence.evaluate(t) * xi);
    traj_.times.push_back(t);
    traj_.y.push_back(y);
    traj_.norm.push_back(n);
    traj_.controls.push_back(u);
    if (cfg_.record_states) traj_.states.push_back(xi);
  }

 private:
  const SystemModel& model_;
  const IntegratorConfig& cfg_;
  Trajectory& traj_;
  bool c_const_;
  Matrix c_;
};

Matrix total_generator(const SystemModel& model, const RealVector& u) {
  Matrix a = model.drift.matrix() + model.interaction.matrix();
  for (int j = 0; j < model.n_controls(); ++j)
    if (u(j) != 0.0) a += u(j) * model.controls[j].matrix();
  return a;
}

template <typename Rhs>
Vector rk4_step(const Rhs& f, double t, const Vector& xi, double dt) {
  Vector k1 = f(t, xi);
  Vector k2 = f(t + 0.5 * dt, xi + 0.5 * dt * k1);
  Vector k3 = f(t + 0.5 * dt, xi + 0.5 * dt * k2);
  Vector k4 = f(t + dt, xi + dt * k3);
  return xi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Step [t0, t1] split at interior breakpoints. Piecewise values are held over
// each sub-step (sampled at its midpoint) so no stage sees the next segment.
std::vector<double> step_nodes(const ControlSchedule& s, double t0, double t1) {
  std::vector<double> nodes{t0};
  const double eps = 1e-12 * std::max(1.0, std::abs(t1));
  for (double b : s.breakpoints())
    if (b > t0 + eps && b < t1 - eps) nodes.push_back(b);
  nodes.push_back(t1);
  return nodes;
}

class HeldInput {
 public:
  explicit HeldInput(const ControlSchedule& s) : s_(s), held_(s.kind() == ScheduleKind::piecewise_constant) {}
  void begin(double a, double b) {
    if (held_) value_ = s_(0.5 * (a + b));
  }
  RealVector operator()(double t) const { return held_ ? value_ : s_(t); }

 private:
  const ControlSchedule& s_;
  bool held_;
  RealVector value_;
};

}  // namespace

Trajectory integrate_open_loop(const SystemModel& model, const ControlSchedule& schedule, const Vector& xi0,
                               const IntegratorConfig& cfg) {
  check_initial(model, xi0);
  if (schedule.channels() != model.n_controls()) throw DimensionError("schedule channel count does not match model");
  const int n = step_count(cfg);
  Trajectory traj;
  Recorder rec(model, cfg, traj);
  const Matrix base = model.drift.matrix() + model.interaction.matrix();
  std::vector<Matrix> ctrl;
  for (const auto& c : model.controls) ctrl.push_back(c.matrix());
  HeldInput input(schedule);
  auto f = [&](double t, const Vector& xi) {
    RealVector u = input(t);
    Vector out = base * xi;
    for (size_t j = 0; j < ctrl.size(); ++j)
      if (u(j) != 0.0) out += u(j) * (ctrl[j] * xi);
    return out;
  };
  Vector xi = xi0;
  for (int k = 0; k <= n; ++k) {
    double t = k * cfg.dt;
    rec.record(t, xi, schedule(t));
    if (k == n) break;
    auto nodes = step_nodes(schedule, t, (k + 1) * cfg.dt);
    for (size_t i = 0; i + 1 < nodes.size(); ++i) {
      input.begin(nodes[i], nodes[i + 1]);
      xi = rk4_step(f, nodes[i], xi, nodes[i + 1] - nodes[i]);
    }
  }
  return traj;
}

Trajectory propagate_exact(const SystemModel& model, const ControlSchedule& schedule, const Vector& xi0,
                           const IntegratorConfig& cfg) {
  check_initial(model, xi0);
  if (schedule.kind() != ScheduleKind::constant && schedule.kind() != ScheduleKind::piecewise_constant)
    throw std::invalid_argument("exact propagation needs a constant or piecewise-constant schedule");
  const int n = step_count(cfg);
  Trajectory traj;
  Recorder rec(model, cfg, traj);
  std::map<int, Matrix> full_step;
  auto seg_gen = [&](double probe) { return total_generator(model, schedule(probe)); };
  Vector xi = xi0;
  const auto& bp = schedule.breakpoints();
  for (int k = 0; k <= n; ++k) {
    double t = k * cfg.dt;
    rec.record(t, xi, schedule(t));
    if (k == n) break;
    double t1 = (k + 1) * cfg.dt;
    int s0 = schedule.segment(t);
    int s1 = schedule.segment(t1 - 1e-14 * std::max(1.0, t1));
    if (s0 == s1) {
      auto it = full_step.find(s0);
      if (it == full_step.end()) it = full_step.emplace(s0, Matrix(seg_gen(t) * cfg.dt).exp()).first;
      xi = it->second * xi;
    } else {
      double a = t;
      for (int s = s0; s <= s1; ++s) {
        double b = s < static_cast<int>(bp.size()) ? std::min(t1, bp[s]) : t1;
        if (b > a) xi = Matrix(seg_gen(0.5 * (a + b)) * (b - a)).exp() * xi;
        a = b;
      }
    }
  }
  return traj;
}

Trajectory integrate_closed_loop(const SystemModel& model, const ControlSchedule& v, const Vector& xi0,
                                 const IntegratorConfig& cfg, const InvariantBasis& basis,
                                 const SynthesisOptions& options) {
  check_initial(model, xi0);
  const int m = model.n_controls();
  if (v.channels() != m) throw DimensionError("external input channel count does not match model");
  const int n = step_count(cfg);
  Trajectory traj;
  Recorder rec(model, cfg, traj);
  const Matrix base = model.drift.matrix() + model.interaction.matrix();
  std::vector<Matrix> ctrl;
  for (const auto& c : model.controls) ctrl.push_back(c.matrix());

  RealVector last_u;
  ControlLawSample last;
  HeldInput input(v);
  auto f = [&](double t, const Vector& xi) {
    try {
      // Gains depend on the direction only; RK stages sit slightly off the sphere.
      last = synthesize_alpha_beta(Vector(xi / xi.norm()), model, basis, options);
    } catch (const DegenerateStateError& e) {
      std::ostringstream os;
      os << e.what() << " at t = " << t << "; state:";
      for (int i = 0; i < xi.size(); ++i) os << " " << xi(i);
      throw NumericalError(os.str());
    }
    last_u = last.alpha + last.beta * input(t);
    Vector out = base * xi;
    for (int j = 0; j < m; ++j)
      if (last_u(j) != 0.0) out += last_u(j) * (ctrl[j] * xi);
    return out;
  };
  Vector xi = xi0;
  const double dt = cfg.dt;
  for (int k = 0; k <= n; ++k) {
    double t = k * dt;
    auto nodes = step_nodes(v, t, k == n ? t : (k + 1) * dt);
    input.begin(nodes[0], nodes[1]);
    Vector k1 = f(t, xi);
    rec.record(t, xi, last_u);
    traj.ranks.push_back(last.ranks);
    traj.beta_rank.push_back(last.beta_rank);
    if (k == n) break;
    for (size_t i = 0; i + 1 < nodes.size(); ++i) {
      double a = nodes[i], h = nodes[i + 1] - a;
      input.begin(a, nodes[i + 1]);
      if (i > 0) k1 = f(a, xi);
      Vector k2 = f(a + 0.5 * h, xi + 0.5 * h * k1);
      Vector k3 = f(a + 0.5 * h, xi + 0.5 * h * k2);
      Vector k4 = f(a + h, xi + h * k3);
      xi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return traj;
}

const char* to_string(LoopMode m) { return m == LoopMode::open ? "open" : "closed"; }

DecouplingReport compare_decoupling(const ModelBuilder& builder, const ModelParams& base,
                                    const std::vector<Complex>& g_values, const ControlSchedule& v,
                                    const Vector& xi0, const IntegratorConfig& cfg, LoopMode mode,
                                    double tolerance, const SynthesisOptions& options, bool parallel) {
  auto ref = std::find(g_values.begin(), g_values.end(), Complex(0.0, 0.0));
  if (ref == g_values.end()) throw std::invalid_argument("compare_decoupling: g_values must include 0");
  DecouplingReport rep;
  rep.g_values = g_values;
  rep.tolerance = tolerance;

  auto run = [&](Complex g) {
    auto start = std::chrono::steady_clock::now();
    ModelParams p = base;
    p.g = g;
    SystemModel model = builder(p);
    Trajectory tr;
    if (mode == LoopMode::open) {
      tr = integrate_open_loop(model, v, xi0, cfg);
    } else {
      InvariantBasis basis = build_invariant_basis(model);
      tr = integrate_closed_loop(model, v, xi0, cfg, basis, options);
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::make_pair(std::move(tr), secs);
  };

  std::vector<std::pair<Trajectory, double>> results;
  if (parallel) {
    std::vector<std::future<std::pair<Trajectory, double>>> futs;
    for (Complex g : g_values) futs.push_back(std::async(std::launch::async, run, g));
    for (auto& f : futs) results.push_back(f.get());
  } else {
    for (Complex g : g_values) results.push_back(run(g));
  }

  const Trajectory& r0 = results[ref - g_values.begin()].first;
  for (auto& [tr, secs] : results) {
    if (tr.times.size() != r0.times.size()) throw NumericalError("compare_decoupling: trajectory grids differ");
    for (size_t k = 0; k < tr.y.size(); ++k) {
      double d = std::abs(std::abs(tr.y[k]) - std::abs(r0.y[k]));
      if (d > rep.max_abs_deviation) {
        rep.max_abs_deviation = d;
        rep.time_of_max_deviation = tr.times[k];
      }
    }
    rep.norm_drift.push_back(tr.max_norm_drift());
    rep.runtime_seconds.push_back(secs);
  }
  for (auto& [tr, secs] : results) rep.trajectories.push_back(std::move(tr));
  rep.pass = rep.max_abs_deviation <= tolerance;
  return rep;
}

namespace {
void put(std::ostream& os, double x) { os << std::setprecision(15) << x; }
}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << "t,re_y,im_y,abs_y,norm";
  for (const auto& l : traj.control_labels) os << ",u_" << l;
  os << "\n";
  for (size_t k = 0; k < traj.times.size(); ++k) {
    put(os, traj.times[k]);
    for (double x : {traj.y[k].real(), traj.y[k].imag(), std::abs(traj.y[k]), traj.norm[k]}) {
      os << ",";
      put(os, x);
    }
    for (int j = 0; j < traj.controls[k].size(); ++j) {
      os << ",";
      put(os, traj.controls[k](j));
    }
    os << "\n";
  }
}

void write_comparison_csv(const DecouplingReport& rep, std::ostream& os) {
  os << "t";
  for (Complex g : rep.g_values) {
    std::ostringstream name;
    name << std::setprecision(15) << g.real();
    if (g.imag() != 0.0) name << (g.imag() > 0 ? "+" : "") << g.imag() << "i";
    os << ",abs_y_g" << name.str();
  }
  os << ",max_deviation\n";
  if (rep.trajectories.empty()) return;
  size_t ref = std::find(rep.g_values.begin(), rep.g_values.end(), Complex(0.0, 0.0)) - rep.g_values.begin();
  const auto& times = rep.trajectories[0].times;
  for (size_t k = 0; k < times.size(); ++k) {
    put(os, times[k]);
    double dev = 0.0;
    double y0 = std::abs(rep.trajectories[ref].y[k]);
    for (const auto& tr : rep.trajectories) {
      os << ",";
      put(os, std::abs(tr.y[k]));
      dev = std::max(dev, std::abs(std::abs(tr.y[k]) - y0));
    }
    os << ",";
    put(os, dev);
    os << "\n";
  }
}

}  // namespace qdc
