#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdc/operator_core.hpp"
#include "qdc/time_operator.hpp"

namespace qdc {

// K(xi) = A xi for a (normally skew-Hermitian) generator A.
struct LinearVectorField {
  Operator generator;
  std::string label;

  Vector operator()(const Vector& xi) const { return generator.matrix() * xi; }
  int dim() const { return generator.dim(); }
};

LinearVectorField make_field(const Operator& generator, std::string label = {});

// Generator B A - A B = -[A, B].
LinearVectorField vf_bracket(const LinearVectorField& ka, const LinearVectorField& kb);

struct KernelMembership {
  bool member = false;
  Operator witness;  // [C, A]
  double residual = 0.0;
};

// L_K y = <xi|[C, A]|xi>; member iff [C, A] = 0 at operator level.
KernelMembership kernel_dy_member(const LinearVectorField& k, const Operator& c, double tol = tol::kIdentity);
// Sampled variant for time-dependent C at time t: max |<xi|[C(t), A]|xi>| over
// n random states.
KernelMembership kernel_dy_member_sampled(const LinearVectorField& k, const TimeOperator& c, double t,
                                          int n_states = 200, double tol = 1e-9, unsigned seed = 7);

struct FailingBracket {
  std::string first;
  std::string second;
  double residual = 0.0;
};

struct DecouplabilityReport {
  bool k_i_in_ker_dy = false;
  bool k_i_in_delta = false;
  bool delta_in_ker_dy = false;
  bool delta_involutive = false;
  bool open_loop_ok = false;
  bool controlled_ok = false;
  std::optional<FailingBracket> failing_bracket;
  std::vector<FailingBracket> failures;
  int delta_rank = 0;
};

// fields = {K0, K1, ..., Kr}.
DecouplabilityReport check_open_loop_geometric(const std::vector<LinearVectorField>& delta_gens,
                                               const std::vector<LinearVectorField>& fields, const Operator& c,
                                               const LinearVectorField& k_i, double tol = tol::kRank);

DecouplabilityReport check_controlled_decouplable(const std::vector<LinearVectorField>& delta_gens,
                                                  const std::vector<LinearVectorField>& g,
                                                  const LinearVectorField& k0, const LinearVectorField& k_i,
                                                  const Operator& c, double tol = tol::kRank);

// Smallest bracket-closed span containing K_I and invariant under the fields
// (canonical candidate for Delta).
std::vector<LinearVectorField> closure_candidate(const LinearVectorField& k_i,
                                                 const std::vector<LinearVectorField>& fields, int depth_cap = 12,
                                                 double tol = tol::kRank);

}  // namespace qdc
