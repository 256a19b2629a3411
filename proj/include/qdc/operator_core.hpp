#pragma once

#include <complex>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qdc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

namespace tol {
constexpr double kRank = 1e-9;
constexpr double kIdentity = 1e-10;
constexpr double kHermiticity = 1e-12;
constexpr double kStateNorm = 1e-6;
}  // namespace tol

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TensorLayout {
 public:
  TensorLayout() = default;
  TensorLayout(std::vector<int> dims, std::vector<std::string> labels);

  int total_dim() const { return total_; }
  int slots() const { return static_cast<int>(dims_.size()); }
  int dim(int slot) const;
  const std::vector<int>& dims() const { return dims_; }
  const std::string& label(int slot) const;
  int slot_of(const std::string& label) const;

 private:
  std::vector<int> dims_;
  std::vector<std::string> labels_;
  int total_ = 1;
};

enum class Hermiticity { hermitian, skew_hermitian, general };

const char* to_string(Hermiticity h);

class Operator {
 public:
  Operator() = default;
  // The flag, when not general, is checked against the entries.
  explicit Operator(Matrix m, Hermiticity h = Hermiticity::general, std::string label = {});

  // Detects the strongest flag that holds within tolerance.
  static Operator classify(Matrix m, std::string label = {});
  static Operator identity(int dim, std::string label = "I");
  static Operator zero(int dim, std::string label = "0");

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  Hermiticity hermiticity() const { return h_; }
  const std::string& label() const { return label_; }
  bool is_skew() const { return h_ == Hermiticity::skew_hermitian; }
  bool is_hermitian() const { return h_ == Hermiticity::hermitian; }

  // -i * H for Hermitian H; the dynamical generator with hbar = 1.
  Operator generator() const;
  Operator scaled(double s) const;
  Operator with_label(std::string label) const;

  Operator operator+(const Operator& o) const;
  Operator operator-(const Operator& o) const;
  Operator operator*(const Operator& o) const;

 private:
  Matrix m_;
  Hermiticity h_ = Hermiticity::general;
  std::string label_;
};

// Largest absolute entry of M - s M^dagger (s = +1 Hermitian, -1 skew).
double hermiticity_deviation(const Matrix& m, bool skew);

enum class PrimitiveKind { pauli_x, pauli_y, pauli_z, identity, boson_lower, boson_raise, displacement };

Operator make_primitive(PrimitiveKind kind, int n_levels, Complex w = {1.0, 0.0});

Matrix kron(const Matrix& a, const Matrix& b);
Operator kron_embed(const Operator& op, int slot, const TensorLayout& layout);
// Product of single-slot factors; unspecified slots get the identity.
Operator embed_factors(const std::vector<std::pair<int, Matrix>>& factors, const TensorLayout& layout,
                       std::string label = {});
// Trace over one slot; returns a matrix on the remaining slots (in order).
Matrix partial_trace(const Matrix& op, int slot, const TensorLayout& layout);

Operator commutator(const Operator& a, const Operator& b);
Matrix commutator(const Matrix& a, const Matrix& b);

Operator matrix_exponential(const Operator& a);
Matrix principal_logarithm(const Matrix& u);

struct MembershipResult {
  bool is_member = false;
  std::vector<Complex> coefficients;
  double residual_norm = 0.0;
  int rank_used = 0;
};

// Complex span of operators (Frobenius geometry). For sets of skew-Hermitian
// (or Hermitian) matrices this coincides with the real span.
MembershipResult span_membership(const Matrix& target, const std::vector<Matrix>& basis, double tol = tol::kRank);
MembershipResult span_membership(const Operator& target, const std::vector<Operator>& basis, double tol = tol::kRank);
// Real span of tangent vectors (complex vectors seen as R^{2n}).
MembershipResult tangent_span_membership(const Vector& target, const std::vector<Vector>& basis,
                                         double tol = tol::kRank);

// <xi|C|xi>; requires a normalized state.
Complex bilinear_form(const Vector& xi, const Operator& c);
Complex bilinear_form(const Vector& xi, const Matrix& c);

// Stacks (Re, Im).
RealVector realify(const Vector& v);
Vector complexify(const RealVector& v);

Vector random_state(int dim, std::mt19937_64& rng);
Matrix random_matrix(int dim, std::mt19937_64& rng);
Matrix random_skew(int dim, std::mt19937_64& rng);

// Samples <xi|A|xi> at n random normalized states; returns the largest modulus.
double max_quadratic_form(const Matrix& a, int n_states, std::mt19937_64& rng);

double operator_norm(const Matrix& m);

}  // namespace qdc
