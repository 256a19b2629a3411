#include "qdc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qdc/config.hpp"
#include "qdc/geometry.hpp"
#include "qdc/lie_invariance.hpp"
#include "qdc/models.hpp"
#include "qdc/simulator.hpp"
#include "qdc/synthesis.hpp"

namespace qdc {

namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& contents) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << contents;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> model;
  std::optional<std::string> g_list;
  std::optional<int> qubits;
  std::optional<int> env_levels;
  std::optional<std::string> out_dir;
  std::optional<double> dt, t_end;
  std::optional<std::string> schedule;
  std::optional<std::string> loop_mode;
  std::optional<std::string> synthesis_mode;
  std::optional<std::string> state;
  std::optional<double> tol_rank, tol_invariance, tol_decoupling;
};

std::vector<Complex> parse_g_list(const std::string& s) {
  std::vector<Complex> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError("--g: cannot parse '" + item + "' as a number");
    out.emplace_back(v, 0.0);
  }
  if (out.empty()) throw ConfigError("--g: empty list");
  return out;
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.model) {
    try {
      cfg.model = model_kind_from_string(*o.model);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--model: ") + e.what());
    }
  }
  if (o.g_list) cfg.g_values = parse_g_list(*o.g_list);
  if (o.qubits) cfg.dfs_qubits = *o.qubits;
  if (o.env_levels) cfg.params.env_levels = *o.env_levels;
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.dt) cfg.integrator.dt = *o.dt;
  if (o.t_end) cfg.integrator.t_end = *o.t_end;
  if (o.schedule) cfg.schedule.kind = *o.schedule;
  if (o.loop_mode) {
    if (*o.loop_mode == "open")
      cfg.loop_mode = LoopMode::open;
    else if (*o.loop_mode == "closed")
      cfg.loop_mode = LoopMode::closed;
    else
      throw ConfigError("--mode must be open or closed");
  }
  if (o.synthesis_mode) {
    try {
      cfg.synthesis_mode = synthesis_mode_from_string(*o.synthesis_mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--synthesis-mode: ") + e.what());
    }
  }
  if (o.state) cfg.initial_state.preset = *o.state;
  if (o.tol_rank) cfg.tolerances.rank = *o.tol_rank;
  if (o.tol_invariance) cfg.tolerances.invariance = *o.tol_invariance;
  if (o.tol_decoupling) cfg.tolerances.decoupling = *o.tol_decoupling;
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string fmt(double x, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

std::string fmt(Complex z) {
  std::ostringstream os;
  os << std::setprecision(6) << z.real();
  if (z.imag() != 0.0) os << (z.imag() >= 0 ? "+" : "") << z.imag() << "i";
  return os.str();
}

std::string header(const std::string& command, const RunConfig& cfg) {
  std::ostringstream os;
  os << "schema-version: " << kReportSchema << "\n";
  os << "command: " << command << "\n";
  os << "model: " << to_string(cfg.model) << "\n";
  os << "tolerances: rank=" << fmt(cfg.tolerances.rank) << " invariance=" << fmt(cfg.tolerances.invariance)
     << " decoupling=" << fmt(cfg.tolerances.decoupling) << "\n";
  const auto& p = cfg.params;
  os << "params: omega0=" << fmt(p.omega0) << " omega_env=" << fmt(p.omega_env) << " g=" << fmt(p.g)
     << " w=" << fmt(p.w) << " j1=" << fmt(p.j1) << " j2=" << fmt(p.j2) << " env_levels=" << p.env_levels
     << " n_sys=" << p.n_sys << "\n";
  return os.str();
}

void emit(const RunConfig& cfg, const std::string& name, const std::string& text) {
  write_file_atomic((fs::path(cfg.output_dir) / name).string(), text);
}

std::vector<LinearVectorField> fields_of(const std::vector<Operator>& ops) {
  std::vector<LinearVectorField> out;
  for (const auto& o : ops) out.push_back(make_field(o));
  return out;
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
  SystemModel model = build_model(cfg.model, cfg.params);
  const double tol = cfg.tolerances.invariance;
  std::ostringstream rep;
  rep << header("check", cfg);

  std::vector<Matrix> ctrl;
  for (const auto& c : model.controls) ctrl.push_back(c.matrix());
  CtildeOptions opt;
  opt.tol = cfg.tolerances.rank;
  if (model.kind == ModelKind::electro_optic) {
    // Compare on low oscillator levels, where truncation does not reach
    // within the allowed bracket depth.
    const int n = model.params.n_sys;
    const int safe = n - 4;
    Matrix p = Matrix::Zero(n, n);
    for (int k = 0; k < safe; ++k) p(k, k) = 1.0;
    opt.compression = kron(p, Matrix::Identity(model.params.env_levels, model.params.env_levels));
    opt.max_word_length = 3;
  }
  OperatorDistribution dist = generate_ctilde(model.coherence, model.drift.matrix(), ctrl, opt);
  InvarianceReport open = check_open_loop_invariance(dist, model.interaction, tol);
  InvarianceReport lemma = check_controller_necessary(model.coherence, dist, model.interaction, tol);
  rep << "ctilde: rank=" << dist.rank << " depth=" << dist.depth_reached
      << " converged=" << (dist.converged ? "true" : "false") << "\n";
  rep << "open_loop_invariance: " << to_string(open.verdict) << "\n";
  rep << "controller_necessary: " << to_string(lemma.verdict) << " commutator_residual="
      << fmt(lemma.commutator_residual) << " subset_residual=" << fmt(lemma.subset_residual) << "\n";
  for (const auto& w : open.warnings) rep << "warning: " << w << "\n";

  std::string verdict;
  int code = kExitOk;
  if (!lemma.commutator_ok) {
    verdict = "NOT DECOUPLABLE: [C,H_SE] ≠ 0";
    code = kExitNegative;
  } else if (open.verdict == Verdict::invariant) {
    verdict = "DECOUPLED: [C~,H_SE] = 0 (open loop)";
  } else if (!model.coherence.is_constant()) {
    verdict = "NOT DECOUPLABLE: [C~,H_SE] ≠ 0";
    code = kExitNegative;
  } else {
    Operator c = model.coherence_constant();
    LinearVectorField k0 = make_field(model.drift, "K0");
    LinearVectorField ki = make_field(model.interaction, "KI");
    std::vector<LinearVectorField> g = fields_of(model.controls);
    std::vector<LinearVectorField> delta;
    if (model.kind == ModelKind::restructured) {
      delta = fields_of(build_invariant_basis(model).delta_ops);
      rep << "delta_candidate: invariant basis (" << delta.size() << " generators)\n";
    } else {
      delta = closure_candidate(ki, {k0}, 12, cfg.tolerances.rank);
      rep << "delta_candidate: bracket closure of K_I under K0 (" << delta.size() << " generators)\n";
    }
    DecouplabilityReport geo = check_controlled_decouplable(delta, g, k0, ki, c, cfg.tolerances.rank);
    rep << "k_i_in_ker_dy: " << (geo.k_i_in_ker_dy ? "true" : "false") << "\n";
    rep << "delta_rank: " << geo.delta_rank << "\n";
    rep << "open_loop_ok: " << (geo.open_loop_ok ? "true" : "false") << "\n";
    rep << "controlled_ok: " << (geo.controlled_ok ? "true" : "false") << "\n";
    rep << "failing_brackets: " << geo.failures.size() << "\n";
    for (size_t k = 0; k < std::min<size_t>(geo.failures.size(), 10); ++k)
      rep << "  " << geo.failures[k].first << " x " << geo.failures[k].second
          << " residual=" << fmt(geo.failures[k].residual) << "\n";
    if (geo.controlled_ok) {
      verdict = "DECOUPLABLE: controlled invariance conditions hold";
    } else if (geo.failing_bracket) {
      verdict = "NOT DECOUPLABLE: [" + geo.failing_bracket->first + "," + geo.failing_bracket->second +
                "] ∉ Δ + G";
      code = kExitNegative;
    } else {
      verdict = "NOT DECOUPLABLE";
      code = kExitNegative;
    }
  }
  rep << "verdict: " << verdict << "\n";
  emit(cfg, "check_report.txt", rep.str());
  out << rep.str();
  out << verdict << "\n";
  return code;
}

int cmd_dfs(const RunConfig& cfg, std::ostream& out) {
  DfsResult r = find_dfs_coherences(cfg.dfs_qubits, cfg.params.env_levels, cfg.tolerances.invariance);
  std::ostringstream rep;
  rep << header("dfs", cfg);
  rep << "qubits: " << cfg.dfs_qubits << "\n";
  rep << "pairs: " << r.pairs.size() << "\n";
  for (const auto& p : r.pairs) rep << "pair (" << p.i << ", " << p.j << ")\n";
  emit(cfg, "dfs_report.txt", rep.str());
  out << rep.str();
  return kExitOk;
}

int cmd_synthesize(const RunConfig& cfg, std::ostream& out) {
  if (cfg.model != ModelKind::restructured) throw ConfigError("synthesize-demo needs model: restructured");
  SystemModel model = build_model(cfg.model, cfg.params);
  InvariantBasis basis = build_invariant_basis(model);
  Vector xi = make_initial_state(cfg.initial_state, model);
  SynthesisOptions opt{cfg.tolerances.rank, cfg.synthesis_mode};
  ControlLawSample s = synthesize_alpha_beta(xi, model, basis, opt);
  SynthesisVerification v = verify_synthesis(s, model, basis, cfg.tolerances.rank);
  std::ostringstream rep;
  rep << header("synthesize-demo", cfg);
  rep << "synthesis_mode: " << to_string(opt.mode) << "\n";
  rep << "state: " << (cfg.initial_state.amplitudes.empty() ? cfg.initial_state.preset : "amplitudes") << "\n";
  rep << "y: " << fmt(bilinear_form(xi, model.coherence_constant())) << "\n";
  rep << "ranks: K=" << s.ranks.K << " q=" << s.ranks.q << " r=" << s.ranks.r << "\n";
  rep << "selected_complement:";
  for (int i : s.selection.complement) rep << " " << basis.complement_ops[i].label();
  rep << "\n";
  rep << "step1_residuals:";
  for (int i = 0; i < s.ranks.q; ++i) rep << " " << fmt(s.residuals[i]);
  rep << "\n";
  rep << "alpha_residual: " << fmt(s.residuals.back()) << "\n";
  rep << "beta_rank: " << s.beta_rank << "\n";
  rep << "verify_drift_residual: " << fmt(v.drift_residual) << "\n";
  rep << "verify_column_residual_max: "
      << fmt(v.column_residuals.empty() ? 0.0 : *std::max_element(v.column_residuals.begin(), v.column_residuals.end()))
      << "\n";
  rep << "lie_derivative_drift: " << fmt(v.lie_drift) << "\n";
  for (const auto& w : s.warnings) rep << "warning: " << w << "\n";
  emit(cfg, "synthesis_report.txt", rep.str());
  out << rep.str();
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  SystemModel model = build_model(cfg.model, cfg.params);
  Vector xi = make_initial_state(cfg.initial_state, model);
  ControlSchedule sched = make_schedule(cfg.schedule, model);
  Trajectory tr;
  if (cfg.loop_mode == LoopMode::closed) {
    if (cfg.model != ModelKind::restructured) throw ConfigError("closed-loop simulation needs model: restructured");
    InvariantBasis basis = build_invariant_basis(model);
    tr = integrate_closed_loop(model, sched, xi, cfg.integrator, basis, {cfg.tolerances.rank, cfg.synthesis_mode});
  } else {
    tr = integrate_open_loop(model, sched, xi, cfg.integrator);
  }
  std::ostringstream csv;
  write_trajectory_csv(tr, csv);
  emit(cfg, "trajectory.csv", csv.str());
  std::ostringstream rep;
  rep << header("simulate", cfg);
  rep << "mode: " << to_string(cfg.loop_mode) << "\n";
  rep << "steps: " << tr.times.size() << "\n";
  rep << "abs_y_initial: " << fmt(std::abs(tr.y.front()), 12) << "\n";
  rep << "abs_y_final: " << fmt(std::abs(tr.y.back()), 12) << "\n";
  rep << "max_norm_drift: " << fmt(tr.max_norm_drift()) << "\n";
  rep << "csv: " << (fs::path(cfg.output_dir) / "trajectory.csv").string() << "\n";
  emit(cfg, "simulate_report.txt", rep.str());
  out << rep.str();
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  if (cfg.loop_mode == LoopMode::closed && cfg.model != ModelKind::restructured)
    throw ConfigError("closed-loop compare needs model: restructured");
  SystemModel model = build_model(cfg.model, cfg.params);
  Vector xi = make_initial_state(cfg.initial_state, model);
  ControlSchedule sched = make_schedule(cfg.schedule, model);
  ModelKind kind = cfg.model;
  DecouplingReport r = compare_decoupling([kind](const ModelParams& p) { return build_model(kind, p); }, cfg.params,
                                          cfg.g_values, sched, xi, cfg.integrator, cfg.loop_mode,
                                          cfg.tolerances.decoupling, {cfg.tolerances.rank, cfg.synthesis_mode});
  std::ostringstream csv;
  write_comparison_csv(r, csv);
  emit(cfg, "compare.csv", csv.str());
  std::ostringstream rep;
  rep << header("compare", cfg);
  rep << "mode: " << to_string(cfg.loop_mode) << "\n";
  rep << "schedule: " << cfg.schedule.kind << "\n";
  rep << "g_values:";
  for (Complex g : r.g_values) rep << " " << fmt(g);
  rep << "\n";
  rep << "max_abs_deviation: " << fmt(r.max_abs_deviation, 12) << " at t=" << fmt(r.time_of_max_deviation) << "\n";
  rep << "max_norm_drift: " << fmt(*std::max_element(r.norm_drift.begin(), r.norm_drift.end())) << "\n";
  std::string verdict = r.pass ? "PASS max deviation < tol" : "FAIL max deviation >= tol";
  verdict += " (" + fmt(r.max_abs_deviation) + " vs " + fmt(r.tolerance) + ")";
  rep << "verdict: " << verdict << "\n";
  emit(cfg, "compare_report.txt", rep.str());
  out << rep.str();
  out << verdict << "\n";
  return r.pass ? kExitOk : kExitNegative;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coherence decoupling analysis and simulation"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "YAML run configuration");
    sub->add_option("--model", o.model, "one_qubit | two_qubit | electro_optic | ancilla | restructured");
    sub->add_option("--env-levels", o.env_levels, "environment truncation");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--tolerance-rank", o.tol_rank);
    sub->add_option("--tolerance-invariance", o.tol_invariance);
    sub->add_option("--tolerance-decoupling", o.tol_decoupling);
  };
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--dt", o.dt);
    sub->add_option("--t-end", o.t_end);
    sub->add_option("--schedule", o.schedule, "zero | constant | sinusoidal | piecewise_constant");
    sub->add_option("--mode", o.loop_mode, "open | closed");
    sub->add_option("--synthesis-mode", o.synthesis_mode, "delta_only | literal");
    sub->add_option("--state", o.state, "dfs_pair | ground | plus | generic");
  };
  CLI::App* check = app.add_subcommand("check", "invariance and decouplability verdicts");
  CLI::App* dfs = app.add_subcommand("dfs", "coherences protected under collective dephasing");
  CLI::App* synth = app.add_subcommand("synthesize-demo", "feedback synthesis at one state");
  CLI::App* sim = app.add_subcommand("simulate", "single trajectory to CSV");
  CLI::App* cmp = app.add_subcommand("compare", "coherence traces for several coupling strengths");
  for (auto* s : {check, dfs, synth, sim, cmp}) add_common(s);
  dfs->add_option("--qubits", o.qubits, "number of qubits (1..4)");
  synth->add_option("--state", o.state, "dfs_pair | ground | plus | generic");
  synth->add_option("--synthesis-mode", o.synthesis_mode, "delta_only | literal");
  add_sim(sim);
  add_sim(cmp);
  cmp->add_option("--g", o.g_list, "comma-separated coupling strengths, e.g. 0,10");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitError;
  }

  try {
    RunConfig cfg = resolve(o);
    if (check->parsed()) return cmd_check(cfg, out);
    if (dfs->parsed()) return cmd_dfs(cfg, out);
    if (synth->parsed()) return cmd_synthesize(cfg, out);
    if (sim->parsed()) return cmd_simulate(cfg, out);
    return cmd_compare(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace qdc
