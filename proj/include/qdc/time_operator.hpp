#pragma once

#include <vector>

#include "qdc/operator_core.hpp"

namespace qdc {

// One term amplitude * t^power * exp(i frequency t) * matrix.
struct TimeTerm {
  Matrix matrix;
  Complex amplitude{1.0, 0.0};
  double frequency = 0.0;
  int power = 0;
};

// Coefficient function t^k e^{i nu t}; terms sharing a tag are merged.
struct TimeTag {
  int power = 0;
  double frequency = 0.0;
  bool operator<(const TimeTag& o) const {
    return power != o.power ? power < o.power : frequency < o.frequency;
  }
};

class TimeOperator {
 public:
  TimeOperator() = default;
  explicit TimeOperator(int dim) : dim_(dim) {}
  explicit TimeOperator(const Operator& constant);
  TimeOperator(int dim, std::vector<TimeTerm> terms);

  int dim() const { return dim_; }
  const std::vector<TimeTerm>& terms() const { return terms_; }
  bool is_constant() const;

  void add_term(TimeTerm term);

  Matrix evaluate(double t) const;
  TimeOperator time_derivative() const;

  // Merges equal tags (frequencies equal within 1e-12) into amplitude-1 terms
  // and drops zero matrices; tags sorted by (power, frequency).
  TimeOperator canonical() const;

  TimeOperator operator+(const TimeOperator& o) const;
  TimeOperator operator-(const TimeOperator& o) const;
  TimeOperator operator*(Complex s) const;
  // Pointwise product; frequencies add and powers add.
  TimeOperator operator*(const TimeOperator& o) const;

  // Applies M -> P M P to every coefficient matrix.
  TimeOperator compressed(const Matrix& projector) const;

  // Frobenius norm over the canonical coefficient matrices.
  double coefficient_norm() const;

 private:
  int dim_ = 0;
  std::vector<TimeTerm> terms_;
};

TimeOperator commutator(const TimeOperator& a, const Matrix& b);
TimeOperator commutator(const TimeOperator& a, const TimeOperator& b);

// (ad_H + d/dt) X = [X, H] + dX/dt with H constant.
TimeOperator ad_plus_dt(const TimeOperator& x, const Matrix& h);

// Exact comparison of canonical coefficients; falls back to sampling at 16
// random times in [0, 10] when two tags in the difference are nearly equal.
bool time_operators_equal(const TimeOperator& a, const TimeOperator& b, double tolerance = 1e-9);

inline Operator evaluate_time_operator(const TimeOperator& t, double time) {
  return Operator::classify(t.evaluate(time));
}
inline TimeOperator time_derivative(const TimeOperator& t) { return t.time_derivative(); }

}  // namespace qdc
