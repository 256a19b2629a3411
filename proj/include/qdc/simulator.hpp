#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qdc/models.hpp"
#include "qdc/synthesis.hpp"

namespace qdc {

enum class ScheduleKind { constant, piecewise_constant, sinusoidal, callback };

class ControlSchedule {
 public:
  static ControlSchedule zero(int channels);
  static ControlSchedule constant(RealVector values);
  // values[k] holds on [breakpoints[k-1], breakpoints[k]); values.size() = breakpoints.size() + 1.
  static ControlSchedule piecewise_constant(std::vector<double> breakpoints, std::vector<RealVector> values);
  // u_i(t) = offset_i + amplitude_i sin(omega_i t + phase_i).
  static ControlSchedule sinusoidal(RealVector amplitude, RealVector omega, RealVector phase, RealVector offset);
  static ControlSchedule callback(int channels, std::function<RealVector(double)> fn);

  RealVector operator()(double t) const;
  int channels() const { return channels_; }
  ScheduleKind kind() const { return kind_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  // Index of the piecewise segment containing t.
  int segment(double t) const;

 private:
  ScheduleKind kind_ = ScheduleKind::constant;
  int channels_ = 0;
  std::vector<double> breakpoints_;
  std::vector<RealVector> values_;
  RealVector amplitude_, omega_, phase_, offset_;
  std::function<RealVector(double)> fn_;
};

// Places vals on 1-based channel numbers of a total-length vector.
RealVector spread_channels(int total, const std::vector<int>& channels_one_based, const RealVector& vals);

struct IntegratorConfig {
  double dt = 1e-3;
  double t_end = 20.0;
  double norm_guard = 1e-4;
  bool record_states = true;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Complex> y;
  std::vector<double> norm;
  std::vector<RealVector> controls;
  std::vector<std::string> control_labels;
  // Closed loop only: synthesis diagnostics at each logged step.
  std::vector<Ranks> ranks;
  std::vector<int> beta_rank;

  double max_norm_drift() const;
};

Trajectory integrate_open_loop(const SystemModel& model, const ControlSchedule& schedule, const Vector& xi0,
                               const IntegratorConfig& cfg);
// Per-segment matrix exponential propagation (piecewise-constant or constant schedules).
Trajectory propagate_exact(const SystemModel& model, const ControlSchedule& schedule, const Vector& xi0,
                           const IntegratorConfig& cfg);
Trajectory integrate_closed_loop(const SystemModel& model, const ControlSchedule& v, const Vector& xi0,
                                 const IntegratorConfig& cfg, const InvariantBasis& basis,
                                 const SynthesisOptions& options = {});

enum class LoopMode { open, closed };

const char* to_string(LoopMode m);

struct DecouplingReport {
  std::vector<Complex> g_values;
  double max_abs_deviation = 0.0;
  double time_of_max_deviation = 0.0;
  std::vector<double> norm_drift;
  std::vector<double> runtime_seconds;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<Trajectory> trajectories;
};

using ModelBuilder = std::function<SystemModel(const ModelParams&)>;

DecouplingReport compare_decoupling(const ModelBuilder& builder, const ModelParams& base,
                                    const std::vector<Complex>& g_values, const ControlSchedule& v,
                                    const Vector& xi0, const IntegratorConfig& cfg, LoopMode mode,
                                    double tolerance, const SynthesisOptions& options = {}, bool parallel = true);

void write_trajectory_csv(const Trajectory& traj, std::ostream& os);
void write_comparison_csv(const DecouplingReport& rep, std::ostream& os);

}  // namespace qdc
