#include <fiq/errors.hpp>
#include <fiq/weight.hpp>

#include <cmath>
#include <numbers>

namespace fiq {

Weight::Weight() : omega2_(Field::constant(1.0)), tag_("unit") {}

Weight::Weight(Field omega2, std::string tag, std::map<std::string, double> params)
    : omega2_(std::move(omega2)), tag_(std::move(tag)), params_(std::move(params)) {}

Weight Weight::unit() { return Weight(); }

Weight Weight::cauchy_optimal() {
  return Weight(Field([](const Dual& t) { return Dual(1.0) + t * t; }, "1+x^2"), "cauchy_optimal");
}

Weight Weight::subbotin_optimal(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw BadParameter("subbotin weight needs alpha in (0, 1]");
  const double p = 2.0 * (1.0 - alpha);
  return Weight(Field([p](const Dual& t) { return Dual(1.0) + pow(Dual(1.0) + abs(t), p); }, "1+(1+|x|)^(2(1-alpha))"),
                "subbotin_optimal", {{"alpha", alpha}});
}

Weight Weight::cauchy_ls() {
  return Weight(Field([](const Dual& t) { return (Dual(1.0) + t * t) * log(Dual(std::numbers::e) + t * t); },
                      "(1+x^2)*ln(e+x^2)"),
                "cauchy_ls");
}

Weight Weight::constant(double c) {
  if (!(c > 0.0)) throw BadParameter("weight must be positive");
  return Weight(Field::constant(c), c == 1.0 ? "unit" : "constant", {{"omega2", c}});
}

double Weight::omega(double t) const { return std::sqrt(omega2_(t)); }

double Weight::grad_omega(double t) const {
  const Dual j = omega2_.jet(t);
  return std::abs(j.d) / (2.0 * std::sqrt(j.v));
}

bool Weight::is_unit() const {
  const auto c = omega2_.constant_value();
  return c && *c == 1.0;
}

Weight Weight::reciprocal() const {
  if (const auto c = omega2_.constant_value()) return Weight(Field::constant(1.0 / *c), tag_ + "^-1", params_);
  const Field w = omega2_;
  if (w.differentiable())
    return Weight(Field([w](const Dual& t) { return Dual(1.0) / w.apply(t); }, "1/(" + w.label() + ")"), tag_ + "^-1",
                  params_);
  return Weight(Field::values_only([w](double t) { return 1.0 / w(t); }, "1/(" + w.label() + ")"), tag_ + "^-1", params_);
}

Weight Weight::tilted(const Field& U) const {
  const Field w = omega2_;
  if (U.constant_value()) {
    const double e = std::exp(*U.constant_value());
    if (w.constant_value()) return Weight(Field::constant(*w.constant_value() * e), tag_ + "*e^U", params_);
    if (w.differentiable())
      return Weight(Field([w, e](const Dual& t) { return Dual(e) * w.apply(t); }, w.label()), tag_ + "*e^U", params_);
  }
  if (w.differentiable() && U.differentiable())
    return Weight(Field([w, U](const Dual& t) { return w.apply(t) * exp(U.apply(t)); }, "(" + w.label() + ")*e^U"),
                  tag_ + "*e^U", params_);
  return Weight(Field::values_only([w, U](double t) { return w(t) * std::exp(U(t)); }, "(" + w.label() + ")*e^U"),
                tag_ + "*e^U", params_);
}

}  // namespace fiq
