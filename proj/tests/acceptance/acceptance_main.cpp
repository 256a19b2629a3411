#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "qdc/config.hpp"
#include "qdc/geometry.hpp"
#include "qdc/lie_invariance.hpp"
#include "qdc/models.hpp"
#include "qdc/simulator.hpp"
#include "qdc/synthesis.hpp"

using namespace qdc;

namespace {

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int id, const std::string& name, bool ok, const std::string& detail, double secs, double limit) {
  bool timely = secs < limit;
  bool pass = ok && timely;
  if (!pass) ++failures;
  std::printf("%s %2d %-28s %s (%.2f s, limit %.0f s)%s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(),
              secs, limit, timely ? "" : " too slow");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

bool has_pair(const DfsResult& r, const std::string& a, const std::string& b) {
  return std::find(r.pairs.begin(), r.pairs.end(), CoherencePair{a, b}) != r.pairs.end();
}

int weight(const std::string& w) { return static_cast<int>(std::count(w.begin(), w.end(), '1')); }

void dfs_law() {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  DfsResult two = find_dfs_coherences(2, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      std::string a = basis_word(i, 2), b = basis_word(j, 2);
      ok = ok && (has_pair(two, a, b) == (weight(a) == weight(b)));
    }
  ok = ok && has_pair(two, "01", "10");
  DfsResult three = find_dfs_coherences(3, 3);
  ok = ok && has_pair(three, "011", "101") && has_pair(three, "010", "100");
  report(1, "dfs-hamming-law", ok, fmt("n=2: %.0f pairs, n=3: %.0f pairs", two.pairs.size(), three.pairs.size()),
         seconds_since(t0), 1);
}

void one_qubit_verdict() {
  auto t0 = std::chrono::steady_clock::now();
  SystemModel m = build_one_qubit();
  OperatorDistribution d = generate_ctilde(m.coherence, m.drift, m.controls);
  InvarianceReport r = check_controller_necessary(m.coherence, d, m.interaction);
  double wn = r.witness ? operator_norm(r.witness->evaluate(0.0)) : 0.0;
  bool ok = r.verdict == Verdict::necessary_failed && !r.commutator_ok && wn > 0.1;
  report(2, "one-qubit-witness", ok, fmt("||[C,H_SE]|| = %.4g", wn), seconds_since(t0), 1);
}

void two_qubit_geometry() {
  auto t0 = std::chrono::steady_clock::now();
  SystemModel m = build_two_qubit();
  LinearVectorField ki = make_field(m.interaction, "KI");
  LinearVectorField k0 = make_field(m.drift, "K0");
  LinearVectorField k1 = make_field(m.controls[0], "sx1");
  KernelMembership km = kernel_dy_member(ki, m.coherence_constant());
  Matrix br = vf_bracket(k1, ki).generator.matrix();
  Matrix target = embed_factors({{0, make_primitive(PrimitiveKind::pauli_y, 2).matrix()},
                                 {2, env_displacement(m.params)}},
                                m.layout)
                      .matrix();
  double in_sy = span_membership(br, std::vector<Matrix>{target}).residual_norm;
  std::vector<Matrix> cand;
  for (const auto& f : closure_candidate(ki, {k0})) cand.push_back(f.generator.matrix());
  for (const auto& g : m.controls) cand.push_back(g.matrix());
  double out = span_membership(br, cand).residual_norm;
  bool ok = km.member && in_sy < 1e-10 && out > 0.1;
  report(3, "two-qubit-bracket", ok, fmt("in span{sy1*D}: %.2e, outside Delta+G: %.4g", in_sy, out),
         seconds_since(t0), 1);
}

void restructured_sufficiency() {
  auto t0 = std::chrono::steady_clock::now();
  SystemModel m = build_restructured();
  std::vector<Matrix> g;
  for (const auto& c : m.controls) g.push_back(c.matrix());
  double worst = 0.0;
  for (const auto& c : m.controls)
    worst = std::max(worst, span_membership(commutator(c.matrix(), m.interaction.matrix()), g).residual_norm);
  report(4, "restructured-sufficiency", worst < 1e-9, fmt("max residual over 24 controls %.2e", worst),
         seconds_since(t0), 5);
}

double worst_norm_drift = 0.0;

void decoupling() {
  ModelParams base;
  base.env_levels = 3;
  SystemModel m = build_restructured(base);
  StateSpec s;
  s.preset = "dfs_pair";
  Vector xi = make_initial_state(s, m);
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 20.0;
  cfg.record_states = false;
  for (const char* kind : {"zero", "constant", "sinusoidal"}) {
    auto t0 = std::chrono::steady_clock::now();
    ScheduleSpec spec;
    spec.kind = kind;
    DecouplingReport r = compare_decoupling([](const ModelParams& p) { return build_restructured(p); }, base,
                                            {0.0, 10.0}, make_schedule(spec, m), xi, cfg, LoopMode::closed, 1e-4);
    for (double d : r.norm_drift) worst_norm_drift = std::max(worst_norm_drift, d);
    report(5, std::string("closed-loop-") + kind, r.max_abs_deviation < 1e-4 && std::abs(std::abs(r.trajectories[0].y[0]) - 0.5) < 1e-12,
           fmt("max ||y10|-|y0|| = %.3e at t = %.3f", r.max_abs_deviation, r.time_of_max_deviation),
           seconds_since(t0), 60);
  }
}

void open_loop_contrast() {
  auto t0 = std::chrono::steady_clock::now();
  ModelParams base;
  SystemModel m = build_restructured(base);
  StateSpec s;
  Vector xi = make_initial_state(s, m);
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 20.0;
  cfg.record_states = false;
  ScheduleSpec spec;
  spec.kind = "constant";
  DecouplingReport r = compare_decoupling([](const ModelParams& p) { return build_restructured(p); }, base,
                                          {0.0, 10.0}, make_schedule(spec, m), xi, cfg, LoopMode::open, 1e-4);
  for (double d : r.norm_drift) worst_norm_drift = std::max(worst_norm_drift, d);
  report(6, "open-loop-contrast", r.max_abs_deviation > 0.05,
         fmt("max ||y10|-|y0|| = %.4f at t = %.3f", r.max_abs_deviation, r.time_of_max_deviation), seconds_since(t0),
         30);
}

void norm_budget() {
  report(7, "norm-budget", worst_norm_drift <= 1e-6, fmt("max | ||xi|| - 1 | = %.2e", worst_norm_drift), 0.0, 1);
}

void cbh_scaling() {
  auto t0 = std::chrono::steady_clock::now();
  SystemModel anc = build_ancilla_system();
  const Operator& ha = anc.controls[5];
  const Operator& hb = anc.controls[8];
  Matrix bracket = commutator(ha.matrix(), hb.matrix());
  double ts[3] = {1e-2, 1e-3, 1e-4}, le[3], lt[3];
  for (int i = 0; i < 3; ++i) {
    lt[i] = std::log10(ts[i]);
    le[i] = std::log10((cbh_effective_generator(ha, hb, ts[i]).effective.matrix() - bracket).norm());
  }
  double mx = (lt[0] + lt[1] + lt[2]) / 3, my = (le[0] + le[1] + le[2]) / 3, sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (lt[i] - mx) * (le[i] - my);
    sxx += (lt[i] - mx) * (lt[i] - mx);
  }
  double slope = sxy / sxx;
  report(8, "cbh-scaling", std::abs(slope - 1.0) <= 0.1, fmt("slope %.4f", slope), seconds_since(t0), 1);
}

void algebra_properties() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(2, 4);
  double tensor = 0, jacobi = 0, polar = 0, unit = 0;
  for (int i = 0; i < 200; ++i) {
    int n = dim(rng), k = dim(rng);
    Matrix a = random_matrix(n, rng), b = random_matrix(n, rng);
    Matrix c = random_matrix(k, rng), d = random_matrix(k, rng);
    // [A (x) C, B (x) D] = [A,B] (x) (CD + DC)/2 + (AB + BA)/2 (x) [C,D]
    Matrix lhs = commutator(kron(a, c), kron(b, d));
    Matrix rhs = 0.5 * (kron(commutator(a, b), c * d + d * c) + kron(a * b + b * a, commutator(c, d)));
    tensor = std::max(tensor, (lhs - rhs).norm() / std::max(1.0, lhs.norm()));
  }
  for (int i = 0; i < 200; ++i) {
    int n = dim(rng) + 2;
    Matrix a = random_matrix(n, rng), b = random_matrix(n, rng), c = random_matrix(n, rng);
    Matrix j = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b));
    jacobi = std::max(jacobi, j.norm());
  }
  for (int i = 0; i < 200; ++i) {
    int n = dim(rng) + 2;
    Matrix a = random_matrix(n, rng);
    Vector x = random_state(n, rng), y = random_state(n, rng);
    auto q = [&](const Vector& v) { return v.dot(a * v); };
    const Complex I(0, 1);
    Complex rec = 0.25 * (q(x + y) - q(x - y) - I * q(x + I * y) + I * q(x - I * y));
    polar = std::max(polar, std::abs(rec - x.dot(a * y)));
  }
  for (int i = 0; i < 200; ++i) {
    int n = dim(rng) + 2;
    Matrix u = matrix_exponential(Operator(random_skew(n, rng), Hermiticity::skew_hermitian)).matrix();
    unit = std::max(unit, (u.adjoint() * u - Matrix::Identity(n, n)).norm());
  }
  bool ok = tensor < 1e-12 && jacobi < 1e-11 && polar < 1e-12 && unit < 1e-10;
  char buf[256];
  std::snprintf(buf, sizeof buf, "tensor %.1e, jacobi %.1e, polarization %.1e, unitarity %.1e", tensor, jacobi, polar,
                unit);
  report(9, "algebra-properties", ok, buf, seconds_since(t0), 10);
}

void electro_optic() {
  auto t0 = std::chrono::steady_clock::now();
  ModelParams p;
  const int n = 10, safe = n - 4;
  SystemModel m = build_electrooptic(n, p);
  Matrix proj = Matrix::Zero(n, n);
  for (int k = 0; k < safe; ++k) proj(k, k) = 1.0;
  Matrix pp = kron(proj, Matrix::Identity(p.env_levels, p.env_levels));
  TimeOperator cg = commutator(m.coherence, m.controls[0].matrix()).compressed(pp);
  TimeOperator two_cos(m.dim());
  two_cos.add_term({pp, 1.0, p.omega0, 0});
  two_cos.add_term({pp, 1.0, -p.omega0, 0});
  bool c1 = time_operators_equal(cg, two_cos, 1e-9);
  double c0 = ad_plus_dt(m.coherence, m.drift.matrix()).canonical().coefficient_norm();
  CtildeOptions opt;
  opt.compression = pp;
  opt.max_word_length = 3;
  OperatorDistribution d = generate_ctilde(m.coherence, m.drift.matrix(), {m.controls[0].matrix()}, opt);
  Verdict v = check_open_loop_invariance(d, m.interaction).verdict;
  bool ok = c1 && c0 < 1e-9 && v == Verdict::not_invariant;
  char buf[256];
  std::snprintf(buf, sizeof buf, "[C,H1] = 2cos I: %s, drift residual %.1e, rank %d, verdict %s", c1 ? "yes" : "no",
                c0, d.rank, to_string(v));
  report(10, "electro-optic", ok, buf, seconds_since(t0), 2);
}

}  // namespace

int main() {
  std::function<void()> steps[] = {dfs_law,      one_qubit_verdict, two_qubit_geometry, restructured_sufficiency,
                                   decoupling,   open_loop_contrast, norm_budget,       cbh_scaling,
                                   algebra_properties, electro_optic};
  for (auto& s : steps) {
    try {
      s();
    } catch (const std::exception& e) {
      ++failures;
      std::printf("FAIL    error: %s\n", e.what());
    }
  }
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
