#include "qdc/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qdc {

TensorLayout::TensorLayout(std::vector<int> dims, std::vector<std::string> labels)
    : dims_(std::move(dims)), labels_(std::move(labels)) {
  if (dims_.empty()) throw DimensionError("layout needs at least one slot");
  if (labels_.size() != dims_.size()) throw DimensionError("layout: one label per slot required");
  std::set<std::string> seen;
  total_ = 1;
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] < 1) throw DimensionError("layout: subsystem dims must be positive");
    if (!seen.insert(labels_[i]).second) throw DimensionError("layout: duplicate label " + labels_[i]);
    total_ *= dims_[i];
  }
}

int TensorLayout::dim(int slot) const {
  if (slot < 0 || slot >= slots()) throw DimensionError("slot out of range");
  return dims_[slot];
}

const std::string& TensorLayout::label(int slot) const {
  if (slot < 0 || slot >= slots()) throw DimensionError("slot out of range");
  return labels_[slot];
}

int TensorLayout::slot_of(const std::string& label) const {
  for (int i = 0; i < slots(); ++i)
    if (labels_[i] == label) return i;
  throw DimensionError("no slot labelled " + label);
}

const char* to_string(Hermiticity h) {
  switch (h) {
    case Hermiticity::hermitian: return "hermitian";
    case Hermiticity::skew_hermitian: return "skew_hermitian";
    default: return "general";
  }
}

double hermiticity_deviation(const Matrix& m, bool skew) {
  if (m.rows() != m.cols()) return INFINITY;
  Matrix d = skew ? Matrix(m + m.adjoint()) : Matrix(m - m.adjoint());
  return d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
}

Operator::Operator(Matrix m, Hermiticity h, std::string label) : m_(std::move(m)), h_(h), label_(std::move(label)) {
  if (m_.rows() != m_.cols()) throw DimensionError("operator must be square");
  if (h_ != Hermiticity::general) {
    double dev = hermiticity_deviation(m_, h_ == Hermiticity::skew_hermitian);
    if (dev > tol::kHermiticity * std::max(1.0, m_.cwiseAbs().maxCoeff())) {
      std::ostringstream os;
      os << "operator '" << label_ << "' flagged " << to_string(h_) << " deviates by " << dev;
      throw NumericalError(os.str());
    }
  }
}

Operator Operator::classify(Matrix m, std::string label) {
  double scale = std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  Hermiticity h = Hermiticity::general;
  if (hermiticity_deviation(m, false) <= tol::kHermiticity * scale)
    h = Hermiticity::hermitian;
  else if (hermiticity_deviation(m, true) <= tol::kHermiticity * scale)
    h = Hermiticity::skew_hermitian;
  return Operator(std::move(m), h, std::move(label));
}

Operator Operator::identity(int dim, std::string label) {
  return Operator(Matrix::Identity(dim, dim), Hermiticity::hermitian, std::move(label));
}

Operator Operator::zero(int dim, std::string label) {
  // Zero is both; skew is the useful flag for generators.
  return Operator(Matrix::Zero(dim, dim), Hermiticity::skew_hermitian, std::move(label));
}

Operator Operator::generator() const {
  if (h_ != Hermiticity::hermitian) throw NumericalError("generator(): '" + label_ + "' is not Hermitian");
  return Operator(Complex(0, -1) * m_, Hermiticity::skew_hermitian, label_);
}

Operator Operator::scaled(double s) const { return Operator(s * m_, h_, label_); }

Operator Operator::with_label(std::string label) const { return Operator(m_, h_, std::move(label)); }

Operator Operator::operator+(const Operator& o) const {
  if (o.dim() != dim()) throw DimensionError("operator sum: dim mismatch");
  return Operator::classify(m_ + o.m_);
}

Operator Operator::operator-(const Operator& o) const {
  if (o.dim() != dim()) throw DimensionError("operator difference: dim mismatch");
  return Operator::classify(m_ - o.m_);
}

Operator Operator::operator*(const Operator& o) const {
  if (o.dim() != dim()) throw DimensionError("operator product: dim mismatch");
  return Operator(m_ * o.m_);
}

Operator make_primitive(PrimitiveKind kind, int n, Complex w) {
  const Complex I(0, 1);
  switch (kind) {
    case PrimitiveKind::pauli_x:
    case PrimitiveKind::pauli_y:
    case PrimitiveKind::pauli_z: {
      if (n != 2) throw DimensionError("Pauli operators need n_levels = 2");
      Matrix m(2, 2);
      if (kind == PrimitiveKind::pauli_x) m << 0, 1, 1, 0;
      if (kind == PrimitiveKind::pauli_y) m << 0, -I, I, 0;
      if (kind == PrimitiveKind::pauli_z) m << 1, 0, 0, -1;
      const char* names[] = {"sx", "sy", "sz"};
      return Operator(m, Hermiticity::hermitian, names[static_cast<int>(kind)]);
    }
    case PrimitiveKind::identity:
      if (n < 1) throw DimensionError("identity needs n_levels >= 1");
      return Operator::identity(n);
    case PrimitiveKind::boson_lower:
    case PrimitiveKind::boson_raise:
    case PrimitiveKind::displacement: {
      if (n < 2) throw DimensionError("boson operators need n_levels >= 2");
      Matrix b = Matrix::Zero(n, n);
      for (int k = 1; k < n; ++k) b(k - 1, k) = std::sqrt(static_cast<double>(k));
      if (kind == PrimitiveKind::boson_lower) return Operator(b, Hermiticity::general, "b");
      if (kind == PrimitiveKind::boson_raise) return Operator(b.adjoint(), Hermiticity::general, "b+");
      Matrix d = w * b.adjoint() + std::conj(w) * b;
      return Operator(d, Hermiticity::hermitian, "D");
    }
  }
  throw DimensionError("unknown primitive kind");
}

Matrix kron(const Matrix& a, const Matrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

Operator kron_embed(const Operator& op, int slot, const TensorLayout& layout) {
  if (slot < 0 || slot >= layout.slots()) throw DimensionError("kron_embed: slot out of range");
  if (op.dim() != layout.dim(slot)) throw DimensionError("kron_embed: operator dim does not match slot dim");
  Matrix out = Matrix::Identity(1, 1);
  for (int s = 0; s < layout.slots(); ++s)
    out = kron(out, s == slot ? op.matrix() : Matrix(Matrix::Identity(layout.dim(s), layout.dim(s))));
  return Operator(std::move(out), op.hermiticity(), op.label() + "@" + layout.label(slot));
}

Operator embed_factors(const std::vector<std::pair<int, Matrix>>& factors, const TensorLayout& layout,
                       std::string label) {
  std::vector<Matrix> per_slot(layout.slots());
  for (int s = 0; s < layout.slots(); ++s) per_slot[s] = Matrix::Identity(layout.dim(s), layout.dim(s));
  for (const auto& [slot, m] : factors) {
    if (slot < 0 || slot >= layout.slots()) throw DimensionError("embed_factors: slot out of range");
    if (m.rows() != layout.dim(slot) || m.cols() != layout.dim(slot))
      throw DimensionError("embed_factors: factor dim mismatch");
    per_slot[slot] = per_slot[slot] * m;
  }
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& m : per_slot) out = kron(out, m);
  return Operator::classify(std::move(out), std::move(label));
}

Matrix partial_trace(const Matrix& op, int slot, const TensorLayout& layout) {
  if (op.rows() != layout.total_dim()) throw DimensionError("partial_trace: dim mismatch");
  int d = layout.dim(slot);
  int inner = 1;
  for (int s = slot + 1; s < layout.slots(); ++s) inner *= layout.dim(s);
  int outer = layout.total_dim() / (d * inner);
  int red = outer * inner;
  Matrix out = Matrix::Zero(red, red);
  for (int o1 = 0; o1 < outer; ++o1)
    for (int i1 = 0; i1 < inner; ++i1)
      for (int o2 = 0; o2 < outer; ++o2)
        for (int i2 = 0; i2 < inner; ++i2) {
          Complex acc = 0;
          for (int k = 0; k < d; ++k) acc += op((o1 * d + k) * inner + i1, (o2 * d + k) * inner + i2);
          out(o1 * inner + i1, o2 * inner + i2) = acc;
        }
  return out;
}

Matrix commutator(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("commutator: dim mismatch");
  return a * b - b * a;
}

Operator commutator(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw DimensionError("commutator: dim mismatch");
  Matrix c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  bool skew = (a.is_skew() && b.is_skew()) || (a.is_hermitian() && b.is_hermitian());
  std::string label = "[" + a.label() + "," + b.label() + "]";
  if (skew) {
    // Enforce exact skew symmetry against roundoff.
    Matrix s = 0.5 * (c - c.adjoint());
    return Operator(std::move(s), Hermiticity::skew_hermitian, label);
  }
  return Operator(std::move(c), Hermiticity::general, label);
}

Operator matrix_exponential(const Operator& a) {
  Matrix u = a.matrix().exp();
  if (!u.allFinite()) {
    std::ostringstream os;
    os << "matrix exponential did not converge (generator norm " << a.matrix().norm() << ")";
    throw NumericalError(os.str());
  }
  if (a.is_skew()) {
    double dev = (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm();
    if (dev > tol::kIdentity) {
      std::ostringstream os;
      os << "exponential of skew generator not unitary: |U*U - I| = " << dev << ", generator norm "
         << a.matrix().norm();
      throw NumericalError(os.str());
    }
  }
  return Operator(std::move(u), Hermiticity::general, "exp(" + a.label() + ")");
}

Matrix principal_logarithm(const Matrix& u) {
  Eigen::ComplexEigenSolver<Matrix> es(u, false);
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    Complex ev = es.eigenvalues()(i);
    if (std::abs(ev) < 1e-14 || (std::abs(ev.imag()) < 1e-6 && ev.real() < 0)) {
      throw NumericalError("matrix logarithm: eigenvalue on or near the branch cut; use a smaller time step");
    }
  }
  Matrix l = u.log();
  if (!l.allFinite()) throw NumericalError("matrix logarithm did not converge; use a smaller time step");
  return l;
}

namespace {

template <typename Mat, typename Vec>
void project(const Mat& b, const Vec& target, double tol, Vec& coeffs, double& residual, int& rank) {
  Eigen::JacobiSVD<Mat> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  rank = 0;
  double smax = s.size() ? s(0) : 0.0;
  if (smax > 0)
    for (int i = 0; i < s.size(); ++i)
      if (s(i) > tol * smax) ++rank;
  auto ur = svd.matrixU().leftCols(rank);
  auto vr = svd.matrixV().leftCols(rank);
  Vec proj = ur.adjoint() * target;
  for (int i = 0; i < rank; ++i) proj(i) /= s(i);
  coeffs = vr * proj;
  residual = (target - b * coeffs).norm();
}

}  // namespace

MembershipResult span_membership(const Matrix& target, const std::vector<Matrix>& basis, double tol) {
  MembershipResult r;
  double tnorm = target.norm();
  if (basis.empty()) {
    r.residual_norm = tnorm;
    r.is_member = tnorm == 0.0;
    return r;
  }
  const Eigen::Index n = target.size();
  Matrix b(n, static_cast<Eigen::Index>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].rows() != target.rows() || basis[k].cols() != target.cols())
      throw DimensionError("span_membership: element dim mismatch");
    b.col(k) = Eigen::Map<const Vector>(basis[k].data(), n);
  }
  Vector t = Eigen::Map<const Vector>(target.data(), n);
  Vector c;
  project(b, t, tol, c, r.residual_norm, r.rank_used);
  r.coefficients.assign(c.data(), c.data() + c.size());
  r.is_member = r.residual_norm <= tol * std::max(1.0, tnorm);
  return r;
}

MembershipResult span_membership(const Operator& target, const std::vector<Operator>& basis, double tol) {
  std::vector<Matrix> mats;
  mats.reserve(basis.size());
  for (const auto& op : basis) mats.push_back(op.matrix());
  return span_membership(target.matrix(), mats, tol);
}

MembershipResult tangent_span_membership(const Vector& target, const std::vector<Vector>& basis, double tol) {
  MembershipResult r;
  double tnorm = target.norm();
  if (basis.empty()) {
    r.residual_norm = tnorm;
    r.is_member = tnorm == 0.0;
    return r;
  }
  RealMatrix b(2 * target.size(), static_cast<Eigen::Index>(basis.size()));
  for (size_t k = 0; k < basis.size(); ++k) {
    if (basis[k].size() != target.size()) throw DimensionError("tangent_span_membership: dim mismatch");
    b.col(k) = realify(basis[k]);
  }
  RealVector t = realify(target);
  RealVector c;
  project(b, t, tol, c, r.residual_norm, r.rank_used);
  for (int i = 0; i < c.size(); ++i) r.coefficients.emplace_back(c(i), 0.0);
  r.is_member = r.residual_norm <= tol * std::max(1.0, tnorm);
  return r;
}

Complex bilinear_form(const Vector& xi, const Matrix& c) {
  if (c.rows() != xi.size() || c.cols() != xi.size()) throw DimensionError("bilinear_form: dim mismatch");
  double n = xi.norm();
  if (std::abs(n - 1.0) > tol::kStateNorm) {
    std::ostringstream os;
    os << "bilinear_form: state norm " << n << " outside 1 +- " << tol::kStateNorm;
    throw std::invalid_argument(os.str());
  }
  return xi.dot(c * xi);
}

Complex bilinear_form(const Vector& xi, const Operator& c) { return bilinear_form(xi, c.matrix()); }

RealVector realify(const Vector& v) {
  RealVector r(2 * v.size());
  r.head(v.size()) = v.real();
  r.tail(v.size()) = v.imag();
  return r;
}

Vector complexify(const RealVector& v) {
  const Eigen::Index n = v.size() / 2;
  Vector c(n);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = Complex(v(i), v(n + i));
  return c;
}

Vector random_state(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(nd(rng), nd(rng));
  return v / v.norm();
}

Matrix random_matrix(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(ud(rng), ud(rng));
  return m;
}

Matrix random_skew(int dim, std::mt19937_64& rng) {
  Matrix m = random_matrix(dim, rng);
  return 0.5 * (m - m.adjoint());
}

double max_quadratic_form(const Matrix& a, int n_states, std::mt19937_64& rng) {
  double best = 0.0;
  for (int k = 0; k < n_states; ++k) {
    Vector xi = random_state(static_cast<int>(a.rows()), rng);
    best = std::max(best, std::abs(xi.dot(a * xi)));
  }
  return best;
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace qdc
