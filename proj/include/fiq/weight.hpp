#pragma once

#include <fiq/field.hpp>

#include <map>
#include <string>

namespace fiq {

// Positive weight omega, stored through omega^2 as a field of the reduced coordinate.
class Weight {
 public:
  Weight();
  Weight(Field omega2, std::string tag, std::map<std::string, double> params = {});

  static Weight unit();
  // omega^2 = 1 + |x|^2
  static Weight cauchy_optimal();
  // omega^2 = 1 + (1 + |x|)^{2(1 - alpha)}
  static Weight subbotin_optimal(double alpha);
  // omega^2 = (1 + |x|^2) ln(e + |x|^2)
  static Weight cauchy_ls();
  // omega^2 = c
  static Weight constant(double c);

  double omega(double t) const;
  double omega2(double t) const { return omega2_(t); }
  const Field& omega2_field() const { return omega2_; }
  // |d omega / dt|
  double grad_omega(double t) const;
  const std::string& tag() const { return tag_; }
  const std::map<std::string, double>& params() const { return params_; }
  bool is_unit() const;

  // The weight 1/omega.
  Weight reciprocal() const;
  // omega * exp(U/2)
  Weight tilted(const Field& U) const;

 private:
  Field omega2_;
  std::string tag_;
  std::map<std::string, double> params_;
};

}  // namespace fiq
