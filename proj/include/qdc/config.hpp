#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdc/models.hpp"
#include "qdc/simulator.hpp"
#include "qdc/synthesis.hpp"

namespace qdc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StateSpec {
  std::string preset = "dfs_pair";  // dfs_pair | ground | plus | generic
  std::vector<Complex> amplitudes;  // overrides the preset when non-empty
  unsigned seed = 1;                // for the generic preset
};

struct ScheduleSpec {
  std::string kind = "constant";  // zero | constant | sinusoidal | piecewise_constant
  std::vector<int> channels;      // 1-based; empty = model default
  std::vector<double> values{0.8, 0.5, 0.6, 0.3};
  std::vector<double> amplitude{1.0, 0.8, 0.6, 0.4};
  std::vector<double> omega{1.0, 0.7, 1.3, 0.5};
  std::vector<double> phase{0.0, 0.5, 1.0, 1.5};
  std::vector<double> offset{0.0, 0.0, 0.0, 0.0};
  std::vector<double> breakpoints;
  std::vector<std::vector<double>> segments;
};

struct ToleranceSpec {
  double rank = tol::kRank;
  double invariance = tol::kRank;
  double decoupling = 1e-4;
};

struct RunConfig {
  ModelKind model = ModelKind::restructured;
  ModelParams params;
  StateSpec initial_state;
  ScheduleSpec schedule;
  IntegratorConfig integrator;
  ToleranceSpec tolerances;
  SynthesisMode synthesis_mode = SynthesisMode::delta_only;
  std::vector<Complex> g_values{0.0, 10.0};
  LoopMode loop_mode = LoopMode::closed;
  int dfs_qubits = 2;
  std::string output_dir = "qdc_out";

  void validate() const;
};

// Strict YAML parsing; unknown keys and malformed values raise ConfigError
// with "<source>:<line>:<col>: message".
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::string& path);

Vector make_initial_state(const StateSpec& spec, const SystemModel& model);
ControlSchedule make_schedule(const ScheduleSpec& spec, const SystemModel& model);
std::vector<int> default_channels(const SystemModel& model);

}  // namespace qdc
