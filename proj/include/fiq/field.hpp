#pragma once

#include <fiq/dual.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fiq {

// Scalar field of the reduced coordinate: x on the line (d = 1) or r = |x| for radial fields.
class Field {
 public:
  using Jet = std::function<Dual(const Dual&)>;
  using Plain = std::function<double(double)>;

  Field();
  explicit Field(Jet f, std::string label = {});

  // A field known only through its values; derivative requests throw DifferentiationFailure.
  static Field values_only(Plain f, std::string label = {});
  static Field constant(double c);

  double operator()(double t) const;
  Dual jet(double t) const;
  double derivative(double t) const { return jet(t).d; }
  bool differentiable() const { return static_cast<bool>(jet_); }
  // Evaluation on an arbitrary jet argument, for composing fields.
  Dual apply(const Dual& t) const;
  const std::string& label() const { return label_; }

  // Non-empty when the field is identically equal to a constant.
  std::optional<double> constant_value() const { return constant_; }

 private:
  Jet jet_;
  Plain plain_;
  std::string label_;
  std::optional<double> constant_;
};

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double c, const Field& a);
Field shifted(const Field& a, double c);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Sorted sample points of the reduced coordinate: logarithmic in |t| so that far tails are resolved.
std::vector<double> reference_grid(bool radial, double lo, double hi, int per_side = 2048);

// {t in [lo, hi] : q(t) <= y} as a union of intervals, crossings refined by bisection.
std::vector<Interval> sublevel_set(const Field& q, double y, bool radial, double lo, double hi);

struct MinEstimate {
  double value = 0.0;
  double argmin = 0.0;
  bool certified = false;
};

// Potential energy term: a field plus its lower bound when known exactly.
class Potential {
 public:
  Potential() = default;
  explicit Potential(Field f, std::optional<double> exact_min = std::nullopt);

  static Potential zero();
  static Potential constant(double c);
  // c * ln(1 + |x|)
  static Potential log_abs(double c);
  // c * ln(1 + x^2)
  static Potential log_quadratic(double c);
  // c * |x|^p
  static Potential power_abs(double c, double p);

  const Field& field() const { return field_; }
  double operator()(double t) const { return field_(t); }
  double derivative(double t) const { return field_.derivative(t); }
  bool is_constant() const { return field_.constant_value().has_value(); }
  const std::string& label() const { return field_.label(); }

  // Lower bound m_U: exact for builtins, grid minimization plus golden refinement otherwise.
  MinEstimate lower_bound(bool radial) const;
  // Osc of the potential over the ball of radius R (interval [-R, R] on the line, [0, R] radially).
  double osc_ball(double R, bool radial) const;
  // Minimum over a union of intervals (endpoints included).
  double min_over(const std::vector<Interval>& set, bool radial) const;

 private:
  Field field_ = Field::constant(0.0);
  std::optional<double> exact_min_;
};

}  // namespace fiq
