#include "qdc/lie_invariance.hpp"

#include <algorithm>
#include <cmath>

namespace qdc {

namespace {

constexpr double kTagFreqTol = 1e-12;

int find_tag(const std::vector<TimeTag>& tags, const TimeTerm& t) {
  for (size_t k = 0; k < tags.size(); ++k)
    if (tags[k].power == t.power && std::abs(tags[k].frequency - t.frequency) <= kTagFreqTol)
      return static_cast<int>(k);
  return -1;
}

class ClosureBuilder {
 public:
  ClosureBuilder(int dim, const CtildeOptions& opt) : dim_(dim), opt_(opt) {}

  struct Entry {
    TimeOperator op;
    int word = 0;
    bool controls_done = false;
    bool drift_done = false;
  };

  // Returns true when the candidate enlarged the span.
  bool try_add(const TimeOperator& raw, int word, double parent_scale) {
    TimeOperator cand = opt_.compression ? raw.compressed(*opt_.compression) : raw.canonical();
    for (const auto& t : cand.terms())
      if (find_tag(tags_, t) < 0) extend_tag({t.power, t.frequency});
    Vector v = vectorize(cand);
    double vn = v.norm();
    double scale = std::max(vn, parent_scale);
    if (vn <= opt_.tol * scale || vn == 0.0) return false;
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis_) r -= q * q.dot(r);
    if (r.norm() <= opt_.tol * scale) return false;
    basis_.push_back(r / r.norm());
    // Keep the uncompressed operator so later brackets see the full action.
    TimeOperator full = raw.canonical();
    entries_.push_back({full * Complex(1.0 / full.coefficient_norm(), 0.0), word, false, false});
    return true;
  }

  Vector vectorize(const TimeOperator& op) const {
    const Eigen::Index block = static_cast<Eigen::Index>(dim_) * dim_;
    Vector v = Vector::Zero(block * static_cast<Eigen::Index>(tags_.size()));
    for (const auto& t : op.terms()) {
      int k = find_tag(tags_, t);
      v.segment(k * block, block) += t.amplitude * Eigen::Map<const Vector>(t.matrix.data(), block);
    }
    return v;
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<TimeTag>& tags() const { return tags_; }
  const std::vector<Vector>& basis() const { return basis_; }

 private:
  void extend_tag(TimeTag tag) {
    tags_.push_back(tag);
    const Eigen::Index block = static_cast<Eigen::Index>(dim_) * dim_;
    for (auto& q : basis_) {
      Vector w = Vector::Zero(q.size() + block);
      w.head(q.size()) = q;
      q = std::move(w);
    }
  }

  int dim_;
  CtildeOptions opt_;
  std::vector<TimeTag> tags_;
  std::vector<Vector> basis_;
  std::vector<Entry> entries_;
};

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::invariant: return "invariant";
    case Verdict::not_invariant: return "not_invariant";
    case Verdict::necessary_failed: return "necessary_failed";
    default: return "necessary_passed_sufficient_failed";
  }
}

Vector OperatorDistribution::vectorize(const TimeOperator& op, double* overflow) const {
  const Eigen::Index block = static_cast<Eigen::Index>(dim) * dim;
  Vector v = Vector::Zero(block * static_cast<Eigen::Index>(tags.size()));
  double extra = 0.0;
  TimeOperator c = compression ? op.compressed(*compression) : op.canonical();
  for (const auto& t : c.terms()) {
    int k = find_tag(tags, t);
    if (k < 0) {
      extra += (t.amplitude * t.matrix).squaredNorm();
      continue;
    }
    v.segment(k * block, block) += t.amplitude * Eigen::Map<const Vector>(t.matrix.data(), block);
  }
  if (overflow) *overflow = std::sqrt(extra);
  return v;
}

MembershipResult OperatorDistribution::contains(const TimeOperator& op, double tol) const {
  double overflow = 0.0;
  Vector v = vectorize(op, &overflow);
  MembershipResult r;
  Vector res = v;
  if (rank > 0) {
    Vector c = ortho_basis.adjoint() * v;
    res -= ortho_basis * c;
    r.coefficients.assign(c.data(), c.data() + c.size());
  }
  r.rank_used = rank;
  r.residual_norm = std::sqrt(res.squaredNorm() + overflow * overflow);
  double tnorm = std::sqrt(v.squaredNorm() + overflow * overflow);
  r.is_member = r.residual_norm <= tol * std::max(1.0, tnorm);
  return r;
}

OperatorDistribution generate_ctilde(const TimeOperator& c, const Matrix& drift, const std::vector<Matrix>& controls,
                                     const CtildeOptions& opt) {
  if (opt.depth_cap < 1) throw std::invalid_argument("generate_ctilde: depth_cap must be >= 1");
  const int dim = c.dim();
  if (drift.rows() != dim) throw DimensionError("generate_ctilde: drift dim mismatch");
  for (const auto& h : controls)
    if (h.rows() != dim) throw DimensionError("generate_ctilde: control dim mismatch");

  ClosureBuilder b(dim, opt);
  auto within_words = [&](int w) { return opt.max_word_length < 0 || w < opt.max_word_length; };
  b.try_add(c, 0, 0.0);

  OperatorDistribution out;
  out.dim = dim;
  out.compression = opt.compression;
  int sweep = 0;
  bool converged = false;
  while (sweep < opt.depth_cap) {
    ++sweep;
    // Closure under ad of every control.
    for (size_t k = 0; k < b.entries().size(); ++k) {
      if (b.entries()[k].controls_done) continue;
      b.entries()[k].controls_done = true;
      if (!within_words(b.entries()[k].word)) continue;
      for (const auto& h : controls) {
        TimeOperator x = b.entries()[k].op;
        int w = b.entries()[k].word;
        b.try_add(commutator(x, h), w + 1, 2.0 * h.norm());
      }
    }
    // Closure under ad of the drift plus the time derivative.
    for (size_t k = 0; k < b.entries().size(); ++k) {
      if (b.entries()[k].drift_done) continue;
      b.entries()[k].drift_done = true;
      if (!within_words(b.entries()[k].word)) continue;
      TimeOperator x = b.entries()[k].op;
      int w = b.entries()[k].word;
      double freq_scale = 0.0;
      for (const auto& t : x.terms()) freq_scale = std::max(freq_scale, std::abs(t.frequency) + t.power);
      b.try_add(ad_plus_dt(x, drift), w + 1, 2.0 * drift.norm() + freq_scale);
    }
    bool pending = false;
    for (const auto& e : b.entries())
      if (!e.controls_done || !e.drift_done) pending = true;
    if (!pending) {
      converged = true;
      break;
    }
  }
  out.depth_reached = sweep;
  out.converged = converged;
  out.tags = b.tags();
  out.rank = static_cast<int>(b.basis().size());
  const Eigen::Index n = static_cast<Eigen::Index>(dim) * dim * static_cast<Eigen::Index>(out.tags.size());
  out.ortho_basis = Matrix::Zero(n, out.rank);
  for (int k = 0; k < out.rank; ++k) out.ortho_basis.col(k) = b.basis()[k];
  for (auto& e : b.entries()) out.generators.push_back(std::move(e.op));
  return out;
}

OperatorDistribution generate_ctilde(const TimeOperator& c, const Operator& drift,
                                     const std::vector<Operator>& controls, int depth_cap, double tol) {
  std::vector<Matrix> ctrl;
  for (const auto& h : controls) ctrl.push_back(h.matrix());
  CtildeOptions opt;
  opt.depth_cap = depth_cap;
  opt.tol = tol;
  return generate_ctilde(c, drift.matrix(), ctrl, opt);
}

InvarianceReport check_open_loop_invariance(const OperatorDistribution& dist, const Operator& h_se, double tol) {
  InvarianceReport rep;
  if (!dist.converged) rep.warnings.push_back("distribution closure did not converge within the depth cap");
  const double hn = h_se.matrix().norm();
  bool ok = true;
  for (const auto& t : dist.generators) {
    TimeOperator r = commutator(t, h_se.matrix());
    if (dist.compression) r = r.compressed(*dist.compression);
    double tn = (dist.compression ? t.compressed(*dist.compression) : t).coefficient_norm();
    double res = (hn == 0.0 || tn == 0.0) ? 0.0 : r.coefficient_norm() / (tn * hn);
    rep.residuals.push_back(res);
    if (res > tol && ok) {
      ok = false;
      rep.witness = t;
    }
  }
  rep.verdict = ok ? Verdict::invariant : Verdict::not_invariant;
  return rep;
}

InvarianceReport check_controller_necessary(const TimeOperator& c, const OperatorDistribution& dist,
                                            const Operator& h_se, double tol) {
  InvarianceReport rep = check_open_loop_invariance(dist, h_se, tol);
  const bool open_loop = rep.verdict == Verdict::invariant;
  const double hn = h_se.matrix().norm();

  TimeOperator cw = commutator(c, h_se.matrix());
  double cn = c.coefficient_norm();
  rep.commutator_residual = (hn == 0.0 || cn == 0.0) ? 0.0 : cw.coefficient_norm() / (cn * hn);
  rep.commutator_ok = rep.commutator_residual <= tol;

  rep.subset_ok = true;
  rep.subset_residual = 0.0;
  std::optional<TimeOperator> subset_witness;
  for (const auto& t : dist.generators) {
    TimeOperator r = commutator(t, h_se.matrix());
    MembershipResult m = dist.contains(r, tol);
    double rel = m.residual_norm / std::max(1.0, r.coefficient_norm());
    rep.subset_residual = std::max(rep.subset_residual, rel);
    if (!m.is_member && rep.subset_ok) {
      rep.subset_ok = false;
      subset_witness = r;
    }
  }
  rep.residuals = {rep.commutator_residual, rep.subset_residual};
  if (open_loop) {
    rep.verdict = Verdict::invariant;
    rep.witness.reset();
  } else if (rep.commutator_ok && rep.subset_ok) {
    rep.verdict = Verdict::necessary_passed_sufficient_failed;
  } else {
    rep.verdict = Verdict::necessary_failed;
    rep.witness = rep.commutator_ok ? subset_witness : std::optional<TimeOperator>(cw);
  }
  return rep;
}

std::string basis_word(int index, int n_qubits) {
  std::string w(n_qubits, '0');
  for (int q = 0; q < n_qubits; ++q)
    if (index & (1 << (n_qubits - 1 - q))) w[q] = '1';
  return w;
}

DfsResult find_invariant_coherences(const Operator& drift, const Operator& h_se, int system_dim, int env_dim,
                                    int n_qubits, double tol) {
  if (drift.dim() != system_dim * env_dim || h_se.dim() != drift.dim())
    throw DimensionError("find_invariant_coherences: dim mismatch");
  DfsResult out;
  Matrix id_env = Matrix::Identity(env_dim, env_dim);
  std::vector<std::pair<CoherencePair, Matrix>> found;
  for (int i = 0; i < system_dim; ++i)
    for (int j = 0; j < system_dim; ++j) {
      Matrix e = Matrix::Zero(system_dim, system_dim);
      e(i, j) = 1.0;
      TimeOperator c(Operator(kron(e, id_env)));
      CtildeOptions opt;
      opt.tol = tol;
      OperatorDistribution d = generate_ctilde(c, drift.matrix(), {}, opt);
      if (check_open_loop_invariance(d, h_se, tol).verdict == Verdict::invariant)
        found.push_back({{basis_word(i, n_qubits), basis_word(j, n_qubits)}, e});
    }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [p, m] : found) {
    out.pairs.push_back(p);
    out.operators.push_back(std::move(m));
  }
  return out;
}

DfsResult find_dfs_coherences(int n_qubits, int env_levels, double tol) {
  if (n_qubits < 1 || n_qubits > 4) throw DimensionError("find_dfs_coherences: n_qubits must be in [1, 4]");
  if (env_levels < 2) throw DimensionError("find_dfs_coherences: env_levels must be >= 2");
  std::vector<int> dims(n_qubits, 2);
  std::vector<std::string> labels;
  for (int q = 0; q < n_qubits; ++q) labels.push_back("q" + std::to_string(q + 1));
  dims.push_back(env_levels);
  labels.push_back("env");
  TensorLayout layout(dims, labels);
  const int env = n_qubits;
  Matrix sz = make_primitive(PrimitiveKind::pauli_z, 2).matrix();
  Matrix b = make_primitive(PrimitiveKind::boson_lower, env_levels).matrix();
  Matrix d = make_primitive(PrimitiveKind::displacement, env_levels).matrix();
  Matrix h0 = embed_factors({{env, Matrix(b.adjoint() * b)}}, layout).matrix();
  Matrix hse = Matrix::Zero(layout.total_dim(), layout.total_dim());
  for (int q = 0; q < n_qubits; ++q) {
    h0 += 0.5 * embed_factors({{q, sz}}, layout).matrix();
    hse += embed_factors({{q, sz}, {env, d}}, layout).matrix();
  }
  Operator drift(Complex(0, -1) * h0, Hermiticity::skew_hermitian, "K0");
  Operator inter(Complex(0, -1) * hse, Hermiticity::skew_hermitian, "KI");
  return find_invariant_coherences(drift, inter, 1 << n_qubits, env_levels, n_qubits, tol);
}

}  // namespace qdc
