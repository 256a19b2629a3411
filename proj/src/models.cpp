#include "qdc/models.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace qdc {

namespace {

const Complex kMinusI(0.0, -1.0);

Matrix pauli(PrimitiveKind k) { return make_primitive(k, 2).matrix(); }

Operator gen(const Matrix& hermitian, const std::string& label) {
  Matrix h = 0.5 * (hermitian + hermitian.adjoint());
  return Operator(kMinusI * h, Hermiticity::skew_hermitian, label);
}

Matrix number_op(int n) {
  Matrix b = make_primitive(PrimitiveKind::boson_lower, n).matrix();
  return b.adjoint() * b;
}

Matrix coupling(Complex g, int n) { return make_primitive(PrimitiveKind::displacement, n, g).matrix(); }

Matrix ket_bra(int dim, int i, int j) {
  Matrix m = Matrix::Zero(dim, dim);
  m(i, j) = 1.0;
  return m;
}

}  // namespace

void ModelParams::validate() const {
  if (env_levels < 2) throw DimensionError("env_levels must be >= 2");
  if (!std::isfinite(omega0) || !std::isfinite(omega_env) || !std::isfinite(g.real()) || !std::isfinite(g.imag()) ||
      !std::isfinite(w.real()) || !std::isfinite(w.imag()) || !std::isfinite(j1) || !std::isfinite(j2))
    throw std::invalid_argument("model parameters must be finite");
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::one_qubit: return "one_qubit";
    case ModelKind::two_qubit: return "two_qubit";
    case ModelKind::electro_optic: return "electro_optic";
    case ModelKind::ancilla: return "ancilla";
    default: return "restructured";
  }
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "one_qubit") return ModelKind::one_qubit;
  if (s == "two_qubit") return ModelKind::two_qubit;
  if (s == "electro_optic") return ModelKind::electro_optic;
  if (s == "ancilla") return ModelKind::ancilla;
  if (s == "restructured") return ModelKind::restructured;
  throw std::invalid_argument("unknown model '" + s + "'");
}

Operator SystemModel::coherence_constant() const {
  if (!coherence.is_constant()) throw std::logic_error("coherence operator is time dependent");
  return Operator::classify(coherence.evaluate(0.0), "C");
}

void SystemModel::validate() const {
  auto skew = [](const Operator& o) {
    return hermiticity_deviation(o.matrix(), true) <= tol::kHermiticity * std::max(1.0, o.matrix().norm());
  };
  if (!skew(drift) || !skew(interaction)) throw NumericalError("model drift/interaction must be skew-Hermitian");
  for (const auto& c : controls)
    if (!skew(c)) throw NumericalError("model control '" + c.label() + "' must be skew-Hermitian");
  if (coherence.dim() != dim()) throw DimensionError("coherence operator dim does not match layout");
}

Matrix env_displacement(const ModelParams& p) { return coupling(p.w, p.env_levels); }

SystemModel build_one_qubit(const ModelParams& p) {
  p.validate();
  SystemModel m;
  m.kind = ModelKind::one_qubit;
  m.params = p;
  m.layout = TensorLayout({2, p.env_levels}, {"q", "env"});
  const auto& L = m.layout;
  Matrix h0 = embed_factors({{0, Matrix(0.5 * p.omega0 * pauli(PrimitiveKind::pauli_z))}}, L).matrix() +
              embed_factors({{1, Matrix(p.omega_env * number_op(p.env_levels))}}, L).matrix();
  m.drift = gen(h0, "K0");
  m.controls = {gen(embed_factors({{0, pauli(PrimitiveKind::pauli_x)}}, L).matrix(), "sx"),
                gen(embed_factors({{0, pauli(PrimitiveKind::pauli_y)}}, L).matrix(), "sy")};
  m.control_labels = {"sx", "sy"};
  m.interaction =
      gen(embed_factors({{0, pauli(PrimitiveKind::pauli_z)}, {1, coupling(p.g, p.env_levels)}}, L).matrix(), "KI");
  m.coherence = TimeOperator(Operator(embed_factors({{0, ket_bra(2, 1, 0)}}, L).matrix(), Hermiticity::general, "C"));
  m.validate();
  return m;
}

SystemModel build_two_qubit(const ModelParams& p) {
  p.validate();
  SystemModel m;
  m.kind = ModelKind::two_qubit;
  m.params = p;
  m.layout = TensorLayout({2, 2, p.env_levels}, {"q1", "q2", "env"});
  const auto& L = m.layout;
  Matrix sz = pauli(PrimitiveKind::pauli_z);
  Matrix ztot = embed_factors({{0, sz}}, L).matrix() + embed_factors({{1, sz}}, L).matrix();
  Matrix h0 = 0.5 * p.omega0 * ztot + embed_factors({{2, Matrix(p.omega_env * number_op(p.env_levels))}}, L).matrix();
  m.drift = gen(h0, "K0");
  const std::vector<std::pair<int, PrimitiveKind>> ctl = {{0, PrimitiveKind::pauli_x},
                                                          {0, PrimitiveKind::pauli_y},
                                                          {1, PrimitiveKind::pauli_x},
                                                          {1, PrimitiveKind::pauli_y}};
  const char* labels[] = {"sx1", "sy1", "sx2", "sy2"};
  for (size_t k = 0; k < ctl.size(); ++k) {
    m.controls.push_back(gen(embed_factors({{ctl[k].first, pauli(ctl[k].second)}}, L).matrix(), labels[k]));
    m.control_labels.push_back(labels[k]);
  }
  Matrix dg = coupling(p.g, p.env_levels);
  m.interaction = gen(embed_factors({{0, sz}, {2, dg}}, L).matrix() + embed_factors({{1, sz}, {2, dg}}, L).matrix(), "KI");
  m.coherence = TimeOperator(Operator(kron(ket_bra(4, 1, 2), Matrix::Identity(p.env_levels, p.env_levels)),
                                      Hermiticity::general, "C"));
  m.validate();
  return m;
}

SystemModel build_electrooptic(int n_sys, const ModelParams& p) {
  p.validate();
  if (n_sys < 3) throw DimensionError("electro-optic model needs n_sys >= 3");
  SystemModel m;
  m.kind = ModelKind::electro_optic;
  m.params = p;
  m.params.n_sys = n_sys;
  m.layout = TensorLayout({n_sys, p.env_levels}, {"osc", "env"});
  const auto& L = m.layout;
  Matrix a = make_primitive(PrimitiveKind::boson_lower, n_sys).matrix();
  Matrix b = make_primitive(PrimitiveKind::boson_lower, p.env_levels).matrix();
  Matrix h0 = embed_factors({{0, Matrix(p.omega0 * a.adjoint() * a)}}, L).matrix() +
              embed_factors({{1, Matrix(p.omega_env * b.adjoint() * b)}}, L).matrix();
  m.drift = gen(h0, "K0");
  // Hermitian i(a+ - a); generator a+ - a.
  Matrix h1 = Complex(0, 1) * (a.adjoint() - a);
  m.controls = {gen(embed_factors({{0, h1}}, L).matrix(), "a+-a")};
  m.control_labels = {"a+-a"};
  Matrix hse = embed_factors({{0, a}, {1, Matrix(std::conj(p.g) * b)}}, L).matrix() +
               embed_factors({{0, Matrix(a.adjoint())}, {1, Matrix(p.g * b.adjoint())}}, L).matrix();
  m.interaction = gen(hse, "KI");
  Matrix af = embed_factors({{0, a}}, L).matrix();
  TimeOperator c(m.dim());
  c.add_term({af, 1.0, p.omega0, 0});
  c.add_term({Matrix(af.adjoint()), 1.0, -p.omega0, 0});
  m.coherence = c;
  m.validate();
  return m;
}

SystemModel build_ancilla_system(const ModelParams& p) {
  p.validate();
  SystemModel m;
  m.kind = ModelKind::ancilla;
  m.params = p;
  m.layout = TensorLayout({2, 2, 2, p.env_levels}, {"q1", "q2", "anc", "env"});
  const auto& L = m.layout;
  Matrix sx = pauli(PrimitiveKind::pauli_x), sy = pauli(PrimitiveKind::pauli_y), sz = pauli(PrimitiveKind::pauli_z);
  Matrix h0 = 0.5 * p.omega0 *
                  (embed_factors({{0, sz}}, L).matrix() + embed_factors({{1, sz}}, L).matrix() +
                   embed_factors({{2, sz}}, L).matrix()) +
              embed_factors({{3, Matrix(p.omega_env * number_op(p.env_levels))}}, L).matrix();
  m.drift = gen(h0, "K0");
  Matrix dw = coupling(p.w, p.env_levels);
  std::vector<std::pair<std::string, Matrix>> hs = {
      {"H1", embed_factors({{0, sx}}, L).matrix()},
      {"H2", embed_factors({{0, sy}}, L).matrix()},
      {"H3", embed_factors({{1, sx}}, L).matrix()},
      {"H4", embed_factors({{1, sy}}, L).matrix()},
      {"H5", embed_factors({{2, sx}}, L).matrix()},
      {"H6", embed_factors({{2, sy}}, L).matrix()},
      {"H7", Matrix(p.j1 * embed_factors({{0, sz}, {2, sz}}, L).matrix())},
      {"H8", Matrix(p.j2 * embed_factors({{1, sz}, {2, sz}}, L).matrix())},
      {"H9", embed_factors({{2, sz}, {3, dw}}, L).matrix()}};
  for (const auto& [label, h] : hs) {
    m.controls.push_back(gen(h, label));
    m.control_labels.push_back(label);
  }
  Matrix dg = coupling(p.g, p.env_levels);
  m.interaction = gen(embed_factors({{0, sz}, {3, dg}}, L).matrix() + embed_factors({{1, sz}, {3, dg}}, L).matrix(), "KI");
  Matrix c = kron(kron(ket_bra(4, 1, 2), Matrix::Identity(2, 2)), Matrix::Identity(p.env_levels, p.env_levels));
  m.coherence = TimeOperator(Operator(c, Hermiticity::general, "C"));
  m.validate();
  return m;
}

std::vector<Matrix> restructured_system_factors() {
  Matrix sx = pauli(PrimitiveKind::pauli_x), sy = pauli(PrimitiveKind::pauli_y), sz = pauli(PrimitiveKind::pauli_z);
  Matrix i2 = Matrix::Identity(2, 2);
  return {kron(sx, i2), kron(sy, i2), kron(i2, sx), kron(i2, sy),
          kron(sz, sx), kron(sz, sy), kron(sx, sz), kron(sy, sz)};
}

std::vector<std::string> restructured_system_labels() {
  return {"sx1", "sy1", "sx2", "sy2", "sz1sx2", "sz1sy2", "sx1sz2", "sy1sz2"};
}

SystemModel build_restructured(const ModelParams& p) {
  p.validate();
  SystemModel m;
  m.kind = ModelKind::restructured;
  m.params = p;
  const int L = p.env_levels;
  m.layout = TensorLayout({2, 2, L}, {"q1", "q2", "env"});
  Matrix sz = pauli(PrimitiveKind::pauli_z);
  Matrix ie = Matrix::Identity(L, L);
  Matrix ztot = kron(kron(sz, Matrix::Identity(2, 2)) + kron(Matrix::Identity(2, 2), sz), ie);
  Matrix h0 = 0.5 * p.omega0 * ztot + kron(Matrix::Identity(4, 4), Matrix(p.omega_env * number_op(L)));
  m.drift = gen(h0, "K0");
  Matrix dw = env_displacement(p);
  auto sys = restructured_system_factors();
  auto names = restructured_system_labels();
  for (size_t s = 0; s < sys.size(); ++s) {
    Matrix e = ie;
    for (int k = 0; k < L; ++k) {
      std::string label = names[s] + (k == 0 ? std::string() : "*D^" + std::to_string(k));
      m.controls.push_back(gen(kron(sys[s], e), label));
      m.control_labels.push_back(label);
      e = e * dw;
    }
  }
  Matrix zsys = kron(sz, Matrix::Identity(2, 2)) + kron(Matrix::Identity(2, 2), sz);
  m.interaction = gen(kron(zsys, coupling(p.g, L)), "KI");
  m.coherence = TimeOperator(Operator(kron(ket_bra(4, 1, 2), ie), Hermiticity::general, "C"));
  m.validate();
  return m;
}

SystemModel build_model(ModelKind kind, const ModelParams& p) {
  switch (kind) {
    case ModelKind::one_qubit: return build_one_qubit(p);
    case ModelKind::two_qubit: return build_two_qubit(p);
    case ModelKind::electro_optic: return build_electrooptic(p.n_sys, p);
    case ModelKind::ancilla: return build_ancilla_system(p);
    default: return build_restructured(p);
  }
}

CbhResult cbh_effective_generator(const Operator& ha, const Operator& hb, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("cbh_effective_generator: t must be positive");
  if (ha.dim() != hb.dim()) throw DimensionError("cbh_effective_generator: dim mismatch");
  for (const Operator* h : {&ha, &hb})
    if (hermiticity_deviation(h->matrix(), true) > tol::kHermiticity * std::max(1.0, h->matrix().norm()))
      throw std::invalid_argument("cbh_effective_generator: generators must be skew-Hermitian");
  const Matrix& a = ha.matrix();
  const Matrix& b = hb.matrix();
  Matrix u = Matrix(a * t).exp() * Matrix(b * t).exp() * Matrix(-a * t).exp() * Matrix(-b * t).exp();
  Matrix l;
  try {
    l = principal_logarithm(u);
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << "CBH maneuver at t = " << t << ": " << e.what();
    throw NumericalError(os.str());
  }
  Matrix eff = l / (t * t);
  // log of a unitary is skew-Hermitian up to roundoff.
  eff = Matrix(0.5 * (eff - eff.adjoint()));
  return {Operator(u, Hermiticity::general, "U"), Operator(eff, Hermiticity::skew_hermitian, "effective")};
}

}  // namespace qdc
