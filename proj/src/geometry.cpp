#include "qdc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace qdc {

namespace {

std::vector<Matrix> generators_of(const std::vector<LinearVectorField>& fs) {
  std::vector<Matrix> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(f.generator.matrix());
  return out;
}

int numerical_rank(const std::vector<Matrix>& ms, double tol) {
  if (ms.empty()) return 0;
  const Eigen::Index n = ms[0].size();
  Matrix b(n, static_cast<Eigen::Index>(ms.size()));
  for (size_t k = 0; k < ms.size(); ++k) b.col(k) = Eigen::Map<const Vector>(ms[k].data(), n);
  Eigen::JacobiSVD<Matrix> svd(b);
  const auto& s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return s(0) > 0 ? r : 0;
}

// Residual of [x, y] against span(basis), relative to max(1, |[x, y]|).
double bracket_residual(const LinearVectorField& x, const LinearVectorField& y, const std::vector<Matrix>& basis,
                        double tol, bool& member) {
  Matrix br = vf_bracket(x, y).generator.matrix();
  MembershipResult m = span_membership(br, basis, tol);
  member = m.is_member;
  return m.residual_norm / std::max(1.0, br.norm());
}

void scan_brackets(const std::vector<LinearVectorField>& delta_gens, const std::vector<LinearVectorField>& fields,
                   const std::vector<Matrix>& target_span, double tol, DecouplabilityReport& rep, bool& ok) {
  for (const auto& k : fields)
    for (const auto& d : delta_gens) {
      bool member = false;
      double res = bracket_residual(k, d, target_span, tol, member);
      if (!member) {
        ok = false;
        rep.failures.push_back({k.label, d.label, res});
      }
    }
}

void common_checks(const std::vector<LinearVectorField>& delta_gens, const Operator& c, const LinearVectorField& k_i,
                   double tol, DecouplabilityReport& rep) {
  const std::vector<Matrix> dspan = generators_of(delta_gens);
  rep.delta_rank = numerical_rank(dspan, tol);
  rep.k_i_in_ker_dy = kernel_dy_member(k_i, c).member;
  rep.delta_in_ker_dy = true;
  for (const auto& d : delta_gens)
    if (!kernel_dy_member(d, c).member) {
      rep.delta_in_ker_dy = false;
      rep.failures.push_back({d.label, "ker(dy)", kernel_dy_member(d, c).residual});
    }
  MembershipResult m = span_membership(k_i.generator.matrix(), dspan, tol);
  rep.k_i_in_delta = m.is_member;
  if (!m.is_member) rep.failures.push_back({k_i.label, "Delta", m.residual_norm});
  rep.delta_involutive = true;
  for (size_t a = 0; a < delta_gens.size(); ++a)
    for (size_t b = a + 1; b < delta_gens.size(); ++b) {
      bool member = false;
      double res = bracket_residual(delta_gens[a], delta_gens[b], dspan, tol, member);
      if (!member) {
        rep.delta_involutive = false;
        rep.failures.push_back({delta_gens[a].label, delta_gens[b].label, res});
      }
    }
}

void finish(DecouplabilityReport& rep) {
  if (!rep.failures.empty()) rep.failing_bracket = rep.failures.front();
}

}  // namespace

LinearVectorField make_field(const Operator& generator, std::string label) {
  std::string l = label.empty() ? generator.label() : label;
  return {generator.with_label(l), l};
}

LinearVectorField vf_bracket(const LinearVectorField& ka, const LinearVectorField& kb) {
  if (ka.dim() != kb.dim()) throw DimensionError("vf_bracket: dim mismatch");
  Operator c = commutator(kb.generator, ka.generator);
  std::string label = "[" + ka.label + "," + kb.label + "]";
  return {c.with_label(label), label};
}

KernelMembership kernel_dy_member(const LinearVectorField& k, const Operator& c, double tol) {
  if (k.dim() != c.dim()) throw DimensionError("kernel_dy_member: dim mismatch");
  if (hermiticity_deviation(k.generator.matrix(), true) >
      tol::kHermiticity * std::max(1.0, k.generator.matrix().cwiseAbs().maxCoeff()))
    throw std::invalid_argument("kernel_dy_member: generator of '" + k.label + "' is not skew-Hermitian");
  KernelMembership out;
  out.witness = Operator(commutator(c.matrix(), k.generator.matrix()), Hermiticity::general, "[C," + k.label + "]");
  double scale = std::max(1.0, c.matrix().norm() * k.generator.matrix().norm());
  out.residual = out.witness.matrix().norm();
  out.member = out.residual <= tol * scale;
  return out;
}

KernelMembership kernel_dy_member_sampled(const LinearVectorField& k, const TimeOperator& c, double t, int n_states,
                                          double tol, unsigned seed) {
  Matrix ct = c.evaluate(t);
  Matrix w = commutator(ct, k.generator.matrix());
  std::mt19937_64 rng(seed);
  KernelMembership out;
  out.witness = Operator(w, Hermiticity::general, "[C(t)," + k.label + "]");
  out.residual = max_quadratic_form(w, n_states, rng);
  out.member = out.residual <= tol * std::max(1.0, ct.norm() * k.generator.matrix().norm());
  return out;
}

DecouplabilityReport check_open_loop_geometric(const std::vector<LinearVectorField>& delta_gens,
                                               const std::vector<LinearVectorField>& fields, const Operator& c,
                                               const LinearVectorField& k_i, double tol) {
  DecouplabilityReport rep;
  common_checks(delta_gens, c, k_i, tol, rep);
  bool ok = rep.delta_in_ker_dy && rep.k_i_in_delta && rep.delta_involutive;
  scan_brackets(delta_gens, fields, generators_of(delta_gens), tol, rep, ok);
  rep.open_loop_ok = ok;
  // Open-loop invariance is controlled invariance with alpha = 0, beta = I.
  rep.controlled_ok = ok;
  finish(rep);
  return rep;
}

DecouplabilityReport check_controlled_decouplable(const std::vector<LinearVectorField>& delta_gens,
                                                  const std::vector<LinearVectorField>& g,
                                                  const LinearVectorField& k0, const LinearVectorField& k_i,
                                                  const Operator& c, double tol) {
  DecouplabilityReport rep;
  common_checks(delta_gens, c, k_i, tol, rep);
  bool ok = rep.delta_in_ker_dy && rep.k_i_in_delta && rep.delta_involutive;
  std::vector<Matrix> span = generators_of(delta_gens);
  for (const auto& f : g) span.push_back(f.generator.matrix());
  std::vector<LinearVectorField> fields{k0};
  fields.insert(fields.end(), g.begin(), g.end());
  scan_brackets(delta_gens, fields, span, tol, rep, ok);
  rep.controlled_ok = ok;
  bool open_ok = rep.delta_in_ker_dy && rep.k_i_in_delta && rep.delta_involutive;
  DecouplabilityReport scratch;
  scan_brackets(delta_gens, fields, generators_of(delta_gens), tol, scratch, open_ok);
  rep.open_loop_ok = open_ok;
  finish(rep);
  return rep;
}

std::vector<LinearVectorField> closure_candidate(const LinearVectorField& k_i,
                                                 const std::vector<LinearVectorField>& fields, int depth_cap,
                                                 double tol) {
  std::vector<LinearVectorField> out;
  std::vector<Vector> q;
  auto try_add = [&](const LinearVectorField& f, double scale) {
    const Eigen::Index n = f.generator.matrix().size();
    Vector v = Eigen::Map<const Vector>(f.generator.matrix().data(), n);
    double vn = v.norm();
    if (vn <= tol * std::max(scale, vn)) return false;
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : q) r -= b * b.dot(r);
    if (r.norm() <= tol * std::max(scale, vn)) return false;
    q.push_back(r / r.norm());
    out.push_back({f.generator.scaled(1.0 / vn).with_label(f.label), f.label});
    return true;
  };
  try_add(k_i, 0.0);
  size_t done = 0;
  for (int depth = 0; depth < depth_cap && done < out.size(); ++depth) {
    size_t end = out.size();
    for (; done < end; ++done) {
      LinearVectorField cur = out[done];
      for (const auto& f : fields) try_add(vf_bracket(f, cur), 2.0 * f.generator.matrix().norm());
      for (size_t j = 0; j < done; ++j) {
        LinearVectorField other = out[j];
        try_add(vf_bracket(other, cur), 2.0);
      }
    }
  }
  return out;
}

}  // namespace qdc
