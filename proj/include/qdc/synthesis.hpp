#pragma once

#include <string>
#include <vector>

#include "qdc/models.hpp"
#include "qdc/operator_core.hpp"

namespace qdc {

class DegenerateStateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct BracketTableEntry {
  std::string relation;  // e.g. "[delta,g] in Delta+G"
  double max_residual = 0.0;
  std::string worst;     // labels of the worst bracket
};

struct InvariantBasis {
  // Skew generators -i (delta_s (x) D^k), system-major, env power fastest.
  std::vector<Operator> delta_ops;
  // Skew generators -i (d_s (x) I).
  std::vector<Operator> complement_ops;
  // Hermitian 4x4 system operators delta_1..delta_5 and d_1..d_3.
  std::vector<Operator> system_deltas;
  std::vector<Operator> system_complements;
  std::vector<double> coherence_check;  // |[delta_i, C]| per delta op
  std::vector<BracketTableEntry> table;
};

// Validates the bracket table; throws NumericalError naming the offending
// bracket when a relation fails.
InvariantBasis build_invariant_basis(const SystemModel& model, double tol = tol::kIdentity);

enum class SynthesisMode {
  // Complement coefficients restricted to Delta(xi); decouples y exactly.
  delta_only,
  // Coefficients over all selected v_1..v_r as written in the algorithm.
  literal
};

const char* to_string(SynthesisMode m);
SynthesisMode synthesis_mode_from_string(const std::string& s);

struct SynthesisOptions {
  double tol = tol::kRank;
  SynthesisMode mode = SynthesisMode::delta_only;
};

struct Ranks {
  int K = 0;
  int q = 0;
  int r = 0;
};

struct DirectionSelection {
  Ranks ranks;
  std::vector<int> delta;       // indices into basis.delta_ops
  std::vector<int> complement;  // indices into basis.complement_ops
  std::vector<int> controls;    // indices into model.controls
  std::vector<std::string> warnings;
};

// Greedy selection of independent directions at xi (no solves).
DirectionSelection select_directions(const Vector& xi, const SystemModel& model, const InvariantBasis& basis,
                                     double tol = tol::kRank);
Ranks evaluate_ranks(const Vector& xi, const SystemModel& model, const InvariantBasis& basis,
                     double tol = tol::kRank);

struct ControlLawSample {
  Vector state;
  RealVector alpha;
  RealMatrix beta;  // m x m; column i is the response to external input v_i
  Ranks ranks;
  // Residuals of the q first-step solves followed by the alpha solve.
  std::vector<double> residuals;
  int beta_rank = 0;
  std::vector<std::string> warnings;
  DirectionSelection selection;
  // Coefficients c paired with the null-space beta columns q..m-1.
  RealMatrix null_coefficients;
  SynthesisMode mode = SynthesisMode::delta_only;
};

ControlLawSample synthesize_alpha_beta(const Vector& xi, const SystemModel& model, const InvariantBasis& basis,
                                       const SynthesisOptions& options = {});

struct SynthesisVerification {
  // Distances (relative to max(1, |field|)) of the closed-loop fields from
  // Delta(xi): K~0 itself, and K~i minus its prescribed complement direction.
  double drift_residual = 0.0;
  std::vector<double> column_residuals;
  Complex lie_drift{0.0, 0.0};
  std::vector<Complex> lie_columns;
  // Informational: [K~, delta](xi) against Delta(xi) with frozen alpha, beta.
  double max_frozen_bracket_residual = 0.0;
  // max |L_delta y| over Delta generators.
  double dfs_coherence_residual = 0.0;

  bool pass(double tol) const;
};

SynthesisVerification verify_synthesis(const ControlLawSample& sample, const SystemModel& model,
                                       const InvariantBasis& basis, double tol = tol::kRank);

}  // namespace qdc
