#include "qdc/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SVD>

namespace qdc {

namespace {

const Complex kMinusI(0.0, -1.0);

Matrix vec_columns(const std::vector<Matrix>& ms) {
  const Eigen::Index n = ms.empty() ? 0 : ms[0].size();
  Matrix b(n, static_cast<Eigen::Index>(ms.size()));
  for (size_t k = 0; k < ms.size(); ++k) b.col(k) = Eigen::Map<const Vector>(ms[k].data(), n);
  return b;
}

Matrix orthonormal_columns(const Matrix& b, double tol) {
  if (b.cols() == 0) return Matrix(b.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return svd.matrixU().leftCols(r);
}

double relative_residual(const Matrix& q, const Matrix& target) {
  Vector t = Eigen::Map<const Vector>(target.data(), target.size());
  Vector r = t - q * (q.adjoint() * t);
  return r.norm() / std::max(1.0, t.norm());
}

// Real-ified tangent vectors of a list of generators at xi.
RealMatrix field_columns(const std::vector<Operator>& ops, const Vector& xi) {
  RealMatrix out(2 * xi.size(), static_cast<Eigen::Index>(ops.size()));
  for (size_t k = 0; k < ops.size(); ++k) out.col(k) = realify(ops[k].matrix() * xi);
  return out;
}

struct Pinv {
  RealMatrix u, v;
  RealVector s;
  int rank = 0;
  RealMatrix null_basis;  // orthonormal basis of the null space

  Pinv(const RealMatrix& m, double tol) {
    Eigen::JacobiSVD<RealMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeFullV);
    s = svd.singularValues();
    double smax = s.size() ? s(0) : 0.0;
    for (int i = 0; i < s.size(); ++i)
      if (smax > 0 && s(i) > tol * smax) ++rank;
    u = svd.matrixU().leftCols(rank);
    v = svd.matrixV();
    null_basis = v.rightCols(v.cols() - rank);
  }

  RealVector solve(const RealVector& b) const {
    RealVector p = u.transpose() * b;
    for (int i = 0; i < rank; ++i) p(i) /= s(i);
    return v.leftCols(rank) * p;
  }
};

class GreedySelector {
 public:
  GreedySelector(Eigen::Index rows, double threshold) : threshold_(threshold) { q_.reserve(rows); }

  // Adds the column when its residual against the current span exceeds the
  // threshold. Records an instability warning near the cutoff.
  bool offer(const RealVector& v, const std::string& label, std::vector<std::string>& warnings) {
    RealVector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : q_) r -= q * q.dot(r);
    double rn = r.norm();
    if (rn > threshold_ / 10.0 && rn < threshold_ * 10.0 && threshold_ > 0) {
      std::ostringstream os;
      os << "rank estimation unstable at " << label << " (residual " << rn << ", cutoff " << threshold_ << ")";
      warnings.push_back(os.str());
    }
    if (rn <= threshold_ || rn == 0.0) return false;
    q_.push_back(r / rn);
    return true;
  }

 private:
  double threshold_;
  std::vector<RealVector> q_;
};

}  // namespace

const char* to_string(SynthesisMode m) { return m == SynthesisMode::literal ? "literal" : "delta_only"; }

SynthesisMode synthesis_mode_from_string(const std::string& s) {
  if (s == "delta_only") return SynthesisMode::delta_only;
  if (s == "literal") return SynthesisMode::literal;
  throw std::invalid_argument("unknown synthesis mode '" + s + "'");
}

InvariantBasis build_invariant_basis(const SystemModel& model, double tol) {
  if (model.kind != ModelKind::restructured)
    throw std::invalid_argument("build_invariant_basis: model must be the restructured system");
  const int L = model.params.env_levels;
  Matrix sx = make_primitive(PrimitiveKind::pauli_x, 2).matrix();
  Matrix sy = make_primitive(PrimitiveKind::pauli_y, 2).matrix();
  Matrix sz = make_primitive(PrimitiveKind::pauli_z, 2).matrix();
  Matrix i2 = Matrix::Identity(2, 2);
  Matrix ie = Matrix::Identity(L, L);

  InvariantBasis out;
  std::vector<std::pair<std::string, Matrix>> deltas = {
      {"delta1", kron(sz, i2) + kron(i2, sz)},
      {"delta2", kron(sz, sz)},
      {"delta3", Matrix::Identity(4, 4)},
      {"delta4", kron(sx, sx) - kron(sy, sy)},
      {"delta5", kron(sx, sy) + kron(sy, sx)}};
  std::vector<std::pair<std::string, Matrix>> comps = {
      {"d1", kron(sz, i2) - kron(i2, sz)},
      {"d2", kron(sx, sx) + kron(sy, sy)},
      {"d3", kron(sx, sy) - kron(sy, sx)}};

  Matrix dw = env_displacement(model.params);
  for (const auto& [label, m] : deltas) {
    out.system_deltas.emplace_back(m, Hermiticity::hermitian, label);
    Matrix e = ie;
    for (int k = 0; k < L; ++k) {
      std::string l = label + (k == 0 ? std::string() : "*D^" + std::to_string(k));
      out.delta_ops.emplace_back(Matrix(kMinusI * kron(m, e)), Hermiticity::skew_hermitian, l);
      e = e * dw;
    }
  }
  for (const auto& [label, m] : comps) {
    out.system_complements.emplace_back(m, Hermiticity::hermitian, label);
    out.complement_ops.emplace_back(Matrix(kMinusI * kron(m, ie)), Hermiticity::skew_hermitian, label);
  }

  Matrix c = model.coherence_constant().matrix();
  for (const auto& d : out.delta_ops) out.coherence_check.push_back(commutator(c, d.matrix()).norm());

  std::vector<Matrix> dm, gm, dgm;
  for (const auto& d : out.delta_ops) dm.push_back(d.matrix());
  for (const auto& g : model.controls) gm.push_back(g.matrix());
  dgm = dm;
  dgm.insert(dgm.end(), gm.begin(), gm.end());
  Matrix q_delta = orthonormal_columns(vec_columns(dm), tol::kRank);
  Matrix q_g = orthonormal_columns(vec_columns(gm), tol::kRank);
  Matrix q_dg = orthonormal_columns(vec_columns(dgm), tol::kRank);

  auto scan = [&](const std::string& relation, const std::vector<Operator>& xs, const std::vector<Operator>& ys,
                  const Matrix& q) {
    BracketTableEntry e{relation, 0.0, ""};
    for (const auto& x : xs)
      for (const auto& y : ys) {
        double r = relative_residual(q, commutator(x.matrix(), y.matrix()));
        if (r > e.max_residual) {
          e.max_residual = r;
          e.worst = "[" + x.label() + "," + y.label() + "]";
        }
      }
    out.table.push_back(e);
    if (e.max_residual > tol) {
      std::ostringstream os;
      os << "invariant basis validation failed: " << relation << " violated by " << e.worst << " (residual "
         << e.max_residual << ")";
      throw NumericalError(os.str());
    }
  };
  for (size_t k = 0; k < out.coherence_check.size(); ++k)
    if (out.coherence_check[k] > tol::kHermiticity)
      throw NumericalError("invariant basis validation failed: " + out.delta_ops[k].label() +
                           " does not commute with C");
  scan("[delta,delta] in Delta", out.delta_ops, out.delta_ops, q_delta);
  scan("[delta,g] in Delta+G", out.delta_ops, model.controls, q_dg);
  scan("[delta,d] in Delta", out.delta_ops, out.complement_ops, q_delta);
  scan("[d,g] in G", out.complement_ops, model.controls, q_g);
  return out;
}

DirectionSelection select_directions(const Vector& xi, const SystemModel& model, const InvariantBasis& basis,
                                     double tol) {
  if (xi.size() != model.dim()) throw DimensionError("select_directions: state dim mismatch");
  RealMatrix vd = field_columns(basis.delta_ops, xi);
  RealMatrix vc = field_columns(basis.complement_ops, xi);
  RealMatrix vg = field_columns(model.controls, xi);
  RealMatrix all(vd.rows(), vd.cols() + vc.cols() + vg.cols());
  all << vd, vc, vg;
  Eigen::JacobiSVD<RealMatrix> svd(all);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;

  DirectionSelection sel;
  GreedySelector gs(vd.rows(), tol * smax);
  for (int k = 0; k < vd.cols(); ++k)
    if (gs.offer(vd.col(k), basis.delta_ops[k].label(), sel.warnings)) sel.delta.push_back(k);
  for (int k = 0; k < vc.cols(); ++k)
    if (gs.offer(vc.col(k), basis.complement_ops[k].label(), sel.warnings)) sel.complement.push_back(k);
  for (int k = 0; k < vg.cols(); ++k)
    if (gs.offer(vg.col(k), model.controls[k].label(), sel.warnings)) sel.controls.push_back(k);
  sel.ranks.K = static_cast<int>(sel.delta.size());
  sel.ranks.q = static_cast<int>(sel.complement.size());
  sel.ranks.r = sel.ranks.K + sel.ranks.q + static_cast<int>(sel.controls.size());
  return sel;
}

Ranks evaluate_ranks(const Vector& xi, const SystemModel& model, const InvariantBasis& basis, double tol) {
  return select_directions(xi, model, basis, tol).ranks;
}

ControlLawSample synthesize_alpha_beta(const Vector& xi, const SystemModel& model, const InvariantBasis& basis,
                                       const SynthesisOptions& opt) {
  if (std::abs(xi.norm() - 1.0) > 1e-4) throw std::invalid_argument("synthesize_alpha_beta: state not normalized");
  ControlLawSample out;
  out.state = xi;
  out.mode = opt.mode;
  out.selection = select_directions(xi, model, basis, opt.tol);
  out.ranks = out.selection.ranks;
  out.warnings = out.selection.warnings;
  const int q = out.ranks.q;
  if (q == 0) {
    std::ostringstream os;
    os << "degenerate state: no complement direction is independent of Delta (K = " << out.ranks.K << ")";
    throw DegenerateStateError(os.str());
  }
  const int m = model.n_controls();
  const Eigen::Index rows = 2 * xi.size();

  RealMatrix g = field_columns(model.controls, xi);
  auto pick = [&](const std::vector<Operator>& ops, const std::vector<int>& idx) {
    RealMatrix v(rows, static_cast<Eigen::Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) v.col(k) = realify(ops[idx[k]].matrix() * xi);
    return v;
  };
  RealMatrix v_delta = pick(basis.delta_ops, out.selection.delta);
  RealMatrix v_comp = pick(basis.complement_ops, out.selection.complement);
  RealMatrix v_ctrl = pick(model.controls, out.selection.controls);

  // Columns of the solve matrices: [G, -V...].
  auto stack = [&](std::initializer_list<const RealMatrix*> vs) {
    Eigen::Index cols = m;
    for (const auto* v : vs) cols += v->cols();
    RealMatrix a(rows, cols);
    a.leftCols(m) = g;
    Eigen::Index at = m;
    for (const auto* v : vs) {
      a.middleCols(at, v->cols()) = -*v;
      at += v->cols();
    }
    return a;
  };
  RealMatrix step1, step2;
  if (opt.mode == SynthesisMode::delta_only) {
    step1 = stack({&v_delta});
    step2 = step1;
  } else {
    step1 = stack({&v_delta, &v_ctrl});
    step2 = stack({&v_delta, &v_comp, &v_ctrl});
  }

  out.beta = RealMatrix::Zero(m, m);
  Pinv p1(step1, opt.tol);
  for (int i = 0; i < q; ++i) {
    RealVector rhs = v_comp.col(i);
    RealVector s = p1.solve(rhs);
    out.beta.col(i) = s.head(m);
    out.residuals.push_back((step1 * s - rhs).norm());
  }

  // Null space of step2; candidates are the beta parts of the projector
  // columns, which do not depend on the choice of null-space basis.
  const Pinv p2 = opt.mode == SynthesisMode::delta_only ? p1 : Pinv(step2, opt.tol);
  const RealMatrix& nb = p2.null_basis;
  RealMatrix proj_beta = nb.topRows(m) * nb.topRows(m).transpose();
  RealMatrix proj_coef = nb.bottomRows(nb.rows() - m) * nb.topRows(m).transpose();
  out.null_coefficients = RealMatrix::Zero(nb.rows() - m, m - q);

  std::vector<RealVector> qb;
  auto residual_of = [&](const RealVector& c) {
    RealVector r = c;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : qb) r -= b * b.dot(r);
    return r;
  };
  for (int i = 0; i < q; ++i) {
    RealVector r = residual_of(out.beta.col(i));
    if (r.norm() > opt.tol * std::max(1.0, out.beta.col(i).norm())) qb.push_back(r / r.norm());
  }
  std::vector<bool> used(m, false);
  for (int col = q; col < m; ++col) {
    int best = -1;
    double best_norm = 0.0;
    for (int j = 0; j < m; ++j) {
      if (used[j]) continue;
      double rn = residual_of(proj_beta.col(j)).norm();
      if (rn > best_norm) {
        best_norm = rn;
        best = j;
      }
    }
    if (best < 0 || best_norm <= opt.tol) break;
    used[best] = true;
    out.beta.col(col) = proj_beta.col(best);
    out.null_coefficients.col(col - q) = proj_coef.col(best);
    RealVector r = residual_of(proj_beta.col(best));
    qb.push_back(r / r.norm());
  }

  RealMatrix step3 = opt.mode == SynthesisMode::delta_only ? step1 : step2;
  RealVector rhs = -realify(model.drift.matrix() * xi);
  RealVector s = (opt.mode == SynthesisMode::delta_only ? p1 : p2).solve(rhs);
  out.alpha = s.head(m);
  out.residuals.push_back((step3 * s - rhs).norm());

  Eigen::JacobiSVD<RealMatrix> bsvd(out.beta);
  const auto& bs = bsvd.singularValues();
  out.beta_rank = 0;
  for (int i = 0; i < bs.size(); ++i)
    if (bs(0) > 0 && bs(i) > opt.tol * bs(0)) ++out.beta_rank;
  return out;
}

bool SynthesisVerification::pass(double tol) const {
  if (drift_residual > tol) return false;
  for (double r : column_residuals)
    if (r > tol) return false;
  return true;
}

SynthesisVerification verify_synthesis(const ControlLawSample& sample, const SystemModel& model,
                                       const InvariantBasis& basis, double tol) {
  const Vector& xi = sample.state;
  const int m = model.n_controls();
  if (sample.alpha.size() != m || sample.beta.rows() != m)
    throw DimensionError("verify_synthesis: sample does not match the model's control count");
  DirectionSelection sel = select_directions(xi, model, basis, tol);

  std::vector<Vector> delta_fields;
  for (const auto& d : basis.delta_ops) delta_fields.push_back(d.matrix() * xi);
  auto dist = [&](const Vector& v) {
    MembershipResult r = tangent_span_membership(v, delta_fields, tol);
    return r.residual_norm / std::max(1.0, v.norm());
  };
  Matrix c = model.coherence.evaluate(0.0);
  auto lie = [&](const Matrix& a) { return xi.dot(commutator(c, a) * xi); };

  SynthesisVerification out;
  Matrix a0 = model.drift.matrix();
  for (int j = 0; j < m; ++j) a0 += sample.alpha(j) * model.controls[j].matrix();
  out.drift_residual = dist(a0 * xi);
  out.lie_drift = lie(a0);

  std::vector<Matrix> ai;
  for (int i = 0; i < sample.beta.cols(); ++i) {
    Matrix a = Matrix::Zero(model.dim(), model.dim());
    for (int j = 0; j < m; ++j) a += sample.beta(j, i) * model.controls[j].matrix();
    Vector f = a * xi;
    if (i < static_cast<int>(sel.complement.size())) f -= basis.complement_ops[sel.complement[i]].matrix() * xi;
    out.column_residuals.push_back(dist(f));
    out.lie_columns.push_back(lie(a));
    ai.push_back(std::move(a));
  }

  for (const auto& d : basis.delta_ops) {
    const Matrix& dm = d.matrix();
    out.max_frozen_bracket_residual = std::max(out.max_frozen_bracket_residual, dist(Matrix(dm * a0 - a0 * dm) * xi));
    for (const auto& a : ai)
      out.max_frozen_bracket_residual = std::max(out.max_frozen_bracket_residual, dist(Matrix(dm * a - a * dm) * xi));
    out.dfs_coherence_residual = std::max(out.dfs_coherence_residual, std::abs(lie(dm)));
  }
  return out;
}

}  // namespace qdc
