#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qdc/simulator.hpp"

using namespace qdc;

namespace {

Vector pair_state(int env_levels = 3) {
  Vector xi = Vector::Zero(4 * env_levels);
  xi(1 * env_levels) = xi(2 * env_levels) = 1.0 / std::sqrt(2.0);
  return xi;
}

ModelParams with_g(double g, double omega_env = 1.0) {
  ModelParams p;
  p.g = g;
  p.omega_env = omega_env;
  return p;
}

IntegratorConfig config(double dt, double t_end) {
  IntegratorConfig c;
  c.dt = dt;
  c.t_end = t_end;
  return c;
}

double max_abs_gap(const Trajectory& a, const Trajectory& b, int stride_b = 1) {
  double worst = 0.0;
  for (size_t k = 0; k < a.y.size(); ++k)
    worst = std::max(worst, std::abs(std::abs(a.y[k]) - std::abs(b.y[k * stride_b])));
  return worst;
}

RealVector vec(std::initializer_list<double> v) {
  RealVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(Schedule, Kinds) {
  ControlSchedule z = ControlSchedule::zero(3);
  EXPECT_EQ(z(1.0).norm(), 0.0);
  ControlSchedule c = ControlSchedule::constant(vec({1.0, -2.0}));
  EXPECT_EQ(c(5.0)(1), -2.0);
  ControlSchedule p = ControlSchedule::piecewise_constant({1.0, 2.0}, {vec({0.0}), vec({1.0}), vec({2.0})});
  EXPECT_EQ(p(0.5)(0), 0.0);
  EXPECT_EQ(p(1.0)(0), 1.0);
  EXPECT_EQ(p(2.5)(0), 2.0);
  EXPECT_EQ(p.segment(1.5), 1);
  EXPECT_ANY_THROW(ControlSchedule::piecewise_constant({2.0, 1.0}, {vec({0.0}), vec({1.0}), vec({2.0})}));
  EXPECT_ANY_THROW(ControlSchedule::piecewise_constant({1.0}, {vec({0.0})}));
  ControlSchedule s = ControlSchedule::sinusoidal(vec({2.0}), vec({3.0}), vec({0.5}), vec({1.0}));
  EXPECT_NEAR(s(0.7)(0), 1.0 + 2.0 * std::sin(3.0 * 0.7 + 0.5), 1e-15);
  ControlSchedule f = ControlSchedule::callback(1, [](double t) { return vec({t * t}); });
  EXPECT_EQ(f(3.0)(0), 9.0);
}

TEST(Schedule, SpreadChannels) {
  RealVector u = spread_channels(6, {1, 4}, vec({0.5, -1.0}));
  EXPECT_EQ(u.size(), 6);
  EXPECT_EQ(u(0), 0.5);
  EXPECT_EQ(u(3), -1.0);
  EXPECT_EQ(u(1), 0.0);
  EXPECT_ANY_THROW(spread_channels(3, {4}, vec({1.0})));
}

TEST(OpenLoop, DfsPairProtectedWithoutControls) {
  for (double g : {0.0, 10.0}) {
    SystemModel m = build_two_qubit(with_g(g));
    Trajectory tr = integrate_open_loop(m, ControlSchedule::zero(4), pair_state(), config(1e-3, 5.0));
    for (Complex y : tr.y) EXPECT_NEAR(std::abs(y), 0.5, 1e-9);
    EXPECT_LT(tr.max_norm_drift(), 1e-9);
  }
}

TEST(OpenLoop, ActiveControlSeparatesTraces) {
  ControlSchedule u = ControlSchedule::constant(vec({1.0, 0.0, 0.0, 0.0}));
  Trajectory a = integrate_open_loop(build_two_qubit(with_g(10.0)), u, pair_state(), config(1e-3, 10.0));
  Trajectory b = integrate_open_loop(build_two_qubit(with_g(0.0)), u, pair_state(), config(1e-3, 10.0));
  EXPECT_GT(max_abs_gap(a, b), 0.05);
  EXPECT_LT(a.max_norm_drift(), 1e-6);
}

TEST(OpenLoop, MatchesExactPropagation) {
  SystemModel m = build_two_qubit(with_g(10.0));
  std::mt19937_64 rng(3);
  ControlSchedule u = ControlSchedule::piecewise_constant(
      {0.7, 1.9}, {vec({0.3, -0.5, 1.0, 0.2}), vec({-1.0, 0.4, 0.0, 0.8}), vec({0.5, 0.5, -0.5, 0.1})});
  Vector xi = random_state(m.dim(), rng);
  IntegratorConfig c = config(1e-3, 3.0);
  Trajectory ex = propagate_exact(m, u, xi, c);
  auto worst_gap = [&](double dt, double t_end) {
    Trajectory rk = integrate_open_loop(m, u, xi, config(dt, t_end));
    Trajectory e = propagate_exact(m, u, xi, config(dt, t_end));
    double worst = 0.0;
    for (size_t k = 0; k < rk.states.size(); ++k) worst = std::max(worst, (rk.states[k] - e.states[k]).norm());
    return worst;
  };
  EXPECT_LT(worst_gap(1e-3, 1.0), 1e-6);
  // Fourth order across both breakpoints.
  double e1 = worst_gap(2e-3, 3.0), e2 = worst_gap(1e-3, 3.0);
  EXPECT_GT(e1 / e2, 12.0) << e1 << " " << e2;
  // Exact propagation against Taylor exponentials of the segment generators.
  Matrix a0 = m.drift.matrix() + m.interaction.matrix();
  RealVector v0 = u(0.0);
  for (int j = 0; j < 4; ++j) a0 += v0(j) * m.controls[j].matrix();
  Vector ref = oracle::expm(0.5 * a0) * xi;
  EXPECT_LT((ex.states[500] - ref).norm(), 1e-10);
}

TEST(OpenLoop, GlobalPhaseLeavesModulus) {
  SystemModel m = build_two_qubit();
  std::mt19937_64 rng(8);
  Vector xi = random_state(m.dim(), rng);
  ControlSchedule u = ControlSchedule::constant(vec({0.4, 0.1, -0.3, 0.9}));
  Trajectory a = integrate_open_loop(m, u, xi, config(1e-3, 2.0));
  Trajectory b = integrate_open_loop(m, u, Vector(std::exp(Complex(0, 1.1)) * xi), config(1e-3, 2.0));
  EXPECT_LT(max_abs_gap(a, b), 1e-12);
}

TEST(OpenLoop, NormGuardAborts) {
  SystemModel m = build_two_qubit();
  IntegratorConfig c = config(0.5, 5.0);
  EXPECT_THROW(integrate_open_loop(m, ControlSchedule::constant(vec({5.0, 5.0, 5.0, 5.0})), pair_state(), c),
               NumericalError);
}

TEST(ClosedLoop, ZeroInputClosedSystemKeepsCoherence) {
  SystemModel m = build_restructured(with_g(0.0));
  InvariantBasis b = build_invariant_basis(m);
  Trajectory tr = integrate_closed_loop(m, ControlSchedule::zero(24), pair_state(), config(1e-3, 1.0), b);
  for (Complex y : tr.y) EXPECT_NEAR(std::abs(y), 0.5, 1e-9);
  EXPECT_EQ(tr.ranks.size(), tr.times.size());
  EXPECT_EQ(tr.controls.front().size(), 24);
}

TEST(ClosedLoop, GenericStateDecouplesWithoutEnvironmentEnergy) {
  std::mt19937_64 rng(7);
  Vector xi = random_state(12, rng);
  // The first q columns of beta move y; the rest act inside the invariant set.
  ControlSchedule v = ControlSchedule::sinusoidal(spread_channels(24, {1, 2, 3}, vec({1.0, 0.8, 0.6})),
                                                  spread_channels(24, {1, 2, 3}, vec({1.0, 0.7, 1.3})),
                                                  RealVector::Zero(24), RealVector::Zero(24));
  DecouplingReport r = compare_decoupling([](const ModelParams& p) { return build_restructured(p); },
                                          with_g(0.0, 0.0), {0.0, 10.0}, v, xi, config(1e-3, 1.0), LoopMode::closed,
                                          1e-4);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.max_abs_deviation, 1e-6);
  // The trace actually moves: the test is not a fixed point.
  double spread = 0.0;
  for (Complex y : r.trajectories[0].y) spread = std::max(spread, std::abs(std::abs(y) - std::abs(r.trajectories[0].y[0])));
  EXPECT_GT(spread, 1e-3);
  for (double d : r.norm_drift) EXPECT_LT(d, 1e-6);
}

TEST(ClosedLoop, LiteralSynthesisDoesNotDecouple) {
  std::mt19937_64 rng(7);
  Vector xi = random_state(12, rng);
  ControlSchedule v = ControlSchedule::constant(spread_channels(24, {1, 4, 7, 10}, vec({0.8, 0.5, 0.6, 0.3})));
  SynthesisOptions lit{tol::kRank, SynthesisMode::literal};
  DecouplingReport r = compare_decoupling([](const ModelParams& p) { return build_restructured(p); },
                                          with_g(0.0, 0.0), {0.0, 10.0}, v, xi, config(1e-3, 1.0), LoopMode::closed,
                                          1e-4, lit);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_abs_deviation, 1e-4);
}

TEST(ClosedLoop, FourthOrderConvergence) {
  ModelParams p = with_g(10.0, 0.0);
  SystemModel m = build_restructured(p);
  InvariantBasis b = build_invariant_basis(m);
  std::mt19937_64 rng(19);
  Vector xi = random_state(12, rng);
  ControlSchedule v = ControlSchedule::constant(spread_channels(24, {1, 2, 3}, vec({0.8, 0.5, 0.6})));
  // Coarse steps lose more norm than the default guard allows.
  auto run = [&](double dt) {
    IntegratorConfig c = config(dt, 0.5);
    c.norm_guard = 1e-1;
    return integrate_closed_loop(m, v, xi, c, b);
  };
  Trajectory t1 = run(1e-2), t2 = run(5e-3), t3 = run(2.5e-3);
  double e1 = max_abs_gap(t1, t2, 2);
  double e2 = max_abs_gap(t2, t3, 2);
  EXPECT_GT(e1 / e2, 8.0) << e1 << " " << e2;
}

TEST(ClosedLoop, NormPreservedForAnyRealGains) {
  SystemModel m = build_restructured();
  InvariantBasis b = build_invariant_basis(m);
  std::mt19937_64 rng(2);
  Vector xi = random_state(12, rng);
  SynthesisOptions lit{tol::kRank, SynthesisMode::literal};
  Trajectory tr = integrate_closed_loop(m, ControlSchedule::zero(24), xi, config(1e-3, 0.5), b, lit);
  EXPECT_LT(tr.max_norm_drift(), 1e-6);
}

TEST(ClosedLoop, DegenerateStateAborts) {
  SystemModel m = build_restructured();
  InvariantBasis b = build_invariant_basis(m);
  EXPECT_THROW(integrate_closed_loop(m, ControlSchedule::zero(24), Vector(Vector::Unit(12, 0)), config(1e-3, 0.1), b),
               NumericalError);
}

TEST(Compare, IdenticalCouplingsGiveZero) {
  DecouplingReport r = compare_decoupling([](const ModelParams& p) { return build_two_qubit(p); }, ModelParams{},
                                          {0.0, 0.0}, ControlSchedule::constant(vec({1.0, 0.0, 0.5, 0.0})),
                                          pair_state(), config(1e-3, 2.0), LoopMode::open, 1e-4);
  EXPECT_EQ(r.max_abs_deviation, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Compare, OpenLoopFailsWithActiveControls) {
  DecouplingReport r = compare_decoupling([](const ModelParams& p) { return build_restructured(p); }, ModelParams{},
                                          {0.0, 10.0},
                                          ControlSchedule::constant(spread_channels(24, {1, 4, 7, 10},
                                                                                    vec({0.8, 0.5, 0.6, 0.3}))),
                                          pair_state(), config(1e-3, 10.0), LoopMode::open, 1e-4);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.max_abs_deviation, 0.05);
  EXPECT_EQ(r.pass, r.max_abs_deviation <= r.tolerance);
}

TEST(Csv, TrajectoryFormatAndDeterminism) {
  SystemModel m = build_two_qubit();
  ControlSchedule u = ControlSchedule::constant(vec({0.2, 0.0, 0.0, 0.1}));
  Trajectory tr = integrate_open_loop(m, u, pair_state(), config(1e-2, 0.1));
  std::ostringstream a, b;
  write_trajectory_csv(tr, a);
  write_trajectory_csv(integrate_open_loop(m, u, pair_state(), config(1e-2, 0.1)), b);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "t,re_y,im_y,abs_y,norm,u_sx1,u_sy1,u_sx2,u_sy2");
  // abs_y = 0.5 printed with at least 12 significant digits.
  EXPECT_NE(first.find("0.5"), std::string::npos);
  std::stringstream row(first);
  std::string cell;
  int cells = 0;
  while (std::getline(row, cell, ',')) ++cells;
  EXPECT_EQ(cells, 9);
  std::ostringstream pi;
  Trajectory tiny;
  tiny.times = {0.0};
  tiny.y = {Complex(M_PI, 0.0)};
  tiny.norm = {1.0};
  tiny.controls = {RealVector()};
  write_trajectory_csv(tiny, pi);
  EXPECT_NE(pi.str().find("3.14159265358"), std::string::npos);
}
