#pragma once

#include <string>
#include <vector>

#include "qdc/operator_core.hpp"
#include "qdc/time_operator.hpp"

namespace qdc {

struct ModelParams {
  double omega0 = 1.0;
  double omega_env = 1.0;
  Complex g{10.0, 0.0};
  Complex w{1.0, 0.0};
  double j1 = 1.0;
  double j2 = 1.0;
  int env_levels = 3;
  int n_sys = 10;

  void validate() const;
};

enum class ModelKind { one_qubit, two_qubit, electro_optic, ancilla, restructured };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct SystemModel {
  ModelKind kind = ModelKind::two_qubit;
  TensorLayout layout;
  Operator drift;                      // -i (H0 + He)
  std::vector<Operator> controls;      // -i H_i
  std::vector<std::string> control_labels;
  Operator interaction;                // -i H_SE (includes g)
  TimeOperator coherence;              // C
  ModelParams params;

  int dim() const { return layout.total_dim(); }
  int n_controls() const { return static_cast<int>(controls.size()); }
  // Constant coherence operator; throws when C depends on time.
  Operator coherence_constant() const;
  void validate() const;
};

SystemModel build_one_qubit(const ModelParams& p = {});
SystemModel build_two_qubit(const ModelParams& p = {});
SystemModel build_electrooptic(int n_sys, const ModelParams& p = {});
SystemModel build_ancilla_system(const ModelParams& p = {});
SystemModel build_restructured(const ModelParams& p = {});
SystemModel build_model(ModelKind kind, const ModelParams& p = {});

// Environment coupling D = w b+ + w* b on the environment factor.
Matrix env_displacement(const ModelParams& p);

// System-space (4x4) operators used by the restructured controls, in
// Order: sx1, sy1, sx2, sy2, sz1 sx2, sz1 sy2, sx1 sz2, sy1 sz2.
std::vector<Matrix> restructured_system_factors();
std::vector<std::string> restructured_system_labels();

struct CbhResult {
  Operator u;
  Operator effective;
};

// U = e^{A t} e^{B t} e^{-A t} e^{-B t}; effective = log(U) / t^2.
CbhResult cbh_effective_generator(const Operator& ha, const Operator& hb, double t);

}  // namespace qdc
