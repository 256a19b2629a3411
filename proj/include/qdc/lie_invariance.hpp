#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdc/operator_core.hpp"
#include "qdc/time_operator.hpp"

namespace qdc {

struct CtildeOptions {
  int depth_cap = 12;
  double tol = tol::kRank;
  // Longest bracket word kept (each ad or ad+d/dt counts one); -1 = unlimited.
  int max_word_length = -1;
  // Optional projector P; generators are compared through P X P.
  std::optional<Matrix> compression;
};

struct OperatorDistribution {
  std::vector<TimeOperator> generators;
  std::vector<TimeTag> tags;
  // Columns are orthonormal vectorized generators over `tags`.
  Matrix ortho_basis;
  int rank = 0;
  int depth_reached = 0;
  bool converged = false;
  int dim = 0;
  std::optional<Matrix> compression;

  // Vectorizes over the distribution's tags; unknown tags go to `overflow`.
  Vector vectorize(const TimeOperator& op, double* overflow = nullptr) const;
  MembershipResult contains(const TimeOperator& op, double tol = tol::kRank) const;
};

OperatorDistribution generate_ctilde(const TimeOperator& c, const Matrix& drift, const std::vector<Matrix>& controls,
                                     const CtildeOptions& options = {});
OperatorDistribution generate_ctilde(const TimeOperator& c, const Operator& drift,
                                     const std::vector<Operator>& controls, int depth_cap = 12,
                                     double tol = tol::kRank);

enum class Verdict { invariant, not_invariant, necessary_failed, necessary_passed_sufficient_failed };

const char* to_string(Verdict v);

struct InvarianceReport {
  Verdict verdict = Verdict::not_invariant;
  std::optional<TimeOperator> witness;
  std::vector<double> residuals;
  // Filled by check_controller_necessary.
  double commutator_residual = 0.0;
  double subset_residual = 0.0;
  bool commutator_ok = false;
  bool subset_ok = false;
  std::vector<std::string> warnings;
};

InvarianceReport check_open_loop_invariance(const OperatorDistribution& dist, const Operator& h_se,
                                            double tol = tol::kRank);
InvarianceReport check_controller_necessary(const TimeOperator& c, const OperatorDistribution& dist,
                                            const Operator& h_se, double tol = tol::kRank);

struct CoherencePair {
  std::string i;
  std::string j;
  bool operator<(const CoherencePair& o) const { return i != o.i ? i < o.i : j < o.j; }
  bool operator==(const CoherencePair& o) const { return i == o.i && j == o.j; }
};

struct DfsResult {
  std::vector<CoherencePair> pairs;
  // |i><j| on the qubit register, same order as pairs.
  std::vector<Matrix> operators;
};

// Basis pairs (i, j) of the system factor whose |i><j| (x) I_env satisfy the
// open-loop condition against the given drift and interaction.
DfsResult find_invariant_coherences(const Operator& drift, const Operator& h_se, int system_dim, int env_dim,
                                    int n_qubits, double tol = tol::kRank);
// Collective dephasing (sum_j sz_j) (x) D with unit coupling, omega0 = omega_env = 1.
DfsResult find_dfs_coherences(int n_qubits, int env_levels, double tol = tol::kRank);

std::string basis_word(int index, int n_qubits);

}  // namespace qdc
