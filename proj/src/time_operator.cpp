#include "qdc/time_operator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qdc {

namespace {
constexpr double kTagFreqTol = 1e-12;

bool same_tag(const TimeTerm& a, int power, double freq) {
  return a.power == power && std::abs(a.frequency - freq) <= kTagFreqTol;
}
}  // namespace

TimeOperator::TimeOperator(const Operator& constant) : dim_(constant.dim()) {
  terms_.push_back({constant.matrix(), 1.0, 0.0, 0});
}

TimeOperator::TimeOperator(int dim, std::vector<TimeTerm> terms) : dim_(dim) {
  for (auto& t : terms) add_term(std::move(t));
}

void TimeOperator::add_term(TimeTerm term) {
  if (term.matrix.rows() != dim_ || term.matrix.cols() != dim_)
    throw DimensionError("TimeOperator: term dim mismatch");
  if (term.power < 0) throw DimensionError("TimeOperator: negative power");
  terms_.push_back(std::move(term));
}

bool TimeOperator::is_constant() const {
  for (const auto& t : canonical().terms_)
    if (t.power != 0 || t.frequency != 0.0) return false;
  return true;
}

Matrix TimeOperator::evaluate(double t) const {
  Matrix out = Matrix::Zero(dim_, dim_);
  for (const auto& term : terms_) {
    Complex c = term.amplitude * std::pow(t, term.power) * std::exp(Complex(0, term.frequency * t));
    out += c * term.matrix;
  }
  return out;
}

TimeOperator TimeOperator::time_derivative() const {
  TimeOperator d(dim_);
  for (const auto& term : terms_) {
    if (term.power > 0)
      d.terms_.push_back({term.matrix, term.amplitude * static_cast<double>(term.power), term.frequency, term.power - 1});
    if (term.frequency != 0.0)
      d.terms_.push_back({term.matrix, term.amplitude * Complex(0, term.frequency), term.frequency, term.power});
  }
  return d.canonical();
}

TimeOperator TimeOperator::canonical() const {
  std::vector<TimeTerm> merged;
  for (const auto& term : terms_) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const TimeTerm& m) { return same_tag(m, term.power, term.frequency); });
    if (it == merged.end())
      merged.push_back({term.amplitude * term.matrix, 1.0, term.frequency, term.power});
    else
      it->matrix += term.amplitude * term.matrix;
  }
  std::vector<TimeTerm> kept;
  for (auto& m : merged)
    if (m.matrix.cwiseAbs().maxCoeff() > 0.0) kept.push_back(std::move(m));
  std::sort(kept.begin(), kept.end(), [](const TimeTerm& a, const TimeTerm& b) {
    return a.power != b.power ? a.power < b.power : a.frequency < b.frequency;
  });
  TimeOperator out(dim_);
  out.terms_ = std::move(kept);
  return out;
}

TimeOperator TimeOperator::operator+(const TimeOperator& o) const {
  if (o.dim_ != dim_) throw DimensionError("TimeOperator sum: dim mismatch");
  TimeOperator out = *this;
  out.terms_.insert(out.terms_.end(), o.terms_.begin(), o.terms_.end());
  return out.canonical();
}

TimeOperator TimeOperator::operator-(const TimeOperator& o) const { return *this + o * Complex(-1.0, 0.0); }

TimeOperator TimeOperator::operator*(Complex s) const {
  TimeOperator out = *this;
  for (auto& t : out.terms_) t.amplitude *= s;
  return out;
}

TimeOperator TimeOperator::operator*(const TimeOperator& o) const {
  if (o.dim_ != dim_) throw DimensionError("TimeOperator product: dim mismatch");
  TimeOperator out(dim_);
  for (const auto& a : terms_)
    for (const auto& b : o.terms_)
      out.terms_.push_back({a.matrix * b.matrix, a.amplitude * b.amplitude, a.frequency + b.frequency, a.power + b.power});
  return out.canonical();
}

TimeOperator TimeOperator::compressed(const Matrix& p) const {
  TimeOperator out(dim_);
  for (const auto& t : terms_) out.terms_.push_back({p * t.matrix * p, t.amplitude, t.frequency, t.power});
  return out.canonical();
}

double TimeOperator::coefficient_norm() const {
  double s = 0.0;
  for (const auto& t : canonical().terms_) s += t.matrix.squaredNorm();
  return std::sqrt(s);
}

TimeOperator commutator(const TimeOperator& a, const Matrix& b) {
  if (b.rows() != a.dim()) throw DimensionError("commutator: dim mismatch");
  TimeOperator out(a.dim());
  for (const auto& t : a.terms()) out.add_term({t.matrix * b - b * t.matrix, t.amplitude, t.frequency, t.power});
  return out.canonical();
}

TimeOperator commutator(const TimeOperator& a, const TimeOperator& b) { return a * b - b * a; }

TimeOperator ad_plus_dt(const TimeOperator& x, const Matrix& h) { return commutator(x, h) + x.time_derivative(); }

bool time_operators_equal(const TimeOperator& a, const TimeOperator& b, double tolerance) {
  TimeOperator diff = (a - b).canonical();
  double scale = std::max(1.0, std::max(a.coefficient_norm(), b.coefficient_norm()));
  bool near_degenerate = false;
  const auto& terms = diff.terms();
  for (size_t i = 0; i < terms.size(); ++i)
    for (size_t j = i + 1; j < terms.size(); ++j)
      if (terms[i].power == terms[j].power && std::abs(terms[i].frequency - terms[j].frequency) < 1e-6)
        near_degenerate = true;
  if (!near_degenerate) {
    for (const auto& t : terms)
      if (t.matrix.norm() > tolerance * scale) return false;
    return true;
  }
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> ud(0.0, 10.0);
  for (int k = 0; k < 16; ++k) {
    double t = ud(rng);
    if ((a.evaluate(t) - b.evaluate(t)).norm() > tolerance * scale) return false;
  }
  return true;
}

}  // namespace qdc
