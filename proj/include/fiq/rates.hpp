#pragma once

#include <fiq/field.hpp>
#include <fiq/lyapunov.hpp>
#include <fiq/measures.hpp>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace fiq {

enum class RateKind { weak_poincare, weak_log_sobolev };
std::string to_string(RateKind k);

// Non-increasing rate s -> beta(s) on (0, 1/4]. Closed forms and exact compositions keep their
// closures; everything else is tabulated on 128 log-spaced nodes in [1e-8, 1/4] and interpolated
// linearly in (ln s, ln beta). Tabulated rates extrapolate below the first node along the first
// segment and are held constant beyond the last node.
class RateFunction {
 public:
  using Fn = std::function<double(double)>;
  enum class Representation { closed_form, composite, tabulated };

  static constexpr double kSMin = 1e-8;
  static constexpr double kSMax = 0.25;
  static constexpr int kNodes = 128;

  // The standard tabulation nodes.
  static std::vector<double> nodes();

  // c * s^{-p}
  static RateFunction power(double c, double p, RateKind kind = RateKind::weak_poincare);
  static RateFunction constant(double c, RateKind kind = RateKind::weak_poincare);
  // c * ln^q(1/s)
  static RateFunction log_power(double c, double q, RateKind kind = RateKind::weak_poincare);
  // Exact closure of other rates; checked for monotonicity on a 64-point log grid.
  static RateFunction composite(Fn f, RateKind kind, std::string provenance);
  // Explicit table; rejected with NotMonotone if it increases.
  static RateFunction tabulated(std::vector<double> s, std::vector<double> beta, RateKind kind, std::string provenance);
  // Sample f on the standard nodes.
  static RateFunction tabulate(const Fn& f, RateKind kind, std::string provenance);

  double operator()(double s) const;
  // Generalized inverse inf{s in (0, 1/4] : beta(s) <= y}; +inf if the set is empty.
  double inverse(double y) const;

  Representation representation() const;
  RateKind kind() const;
  const std::string& provenance() const;
  const std::string& family() const;
  const std::map<std::string, double>& params() const;
  // Table nodes and values (tabulated), or the closure sampled on the standard nodes.
  std::vector<double> table_s() const;
  std::vector<double> table_beta() const;

  RateFunction with_provenance(std::string p) const;
  RateFunction with_kind(RateKind k) const;

  struct Rep;

 private:
  explicit RateFunction(std::shared_ptr<const Rep> r) : rep_(std::move(r)) {}
  std::shared_ptr<const Rep> rep_;
};

// Ball constant: 4/pi^2 for d = 1, (d + 2)/(d (d - 1)) for d >= 2.
double ball_poincare_prefactor(int d);

// cauchy: c s^{-2/alpha}; subbotin (alpha in (0, 1)): c ln^{2(1 - alpha)/alpha}(1/s).
RateFunction builtin_rate(Family family, double alpha, double c = 1.0);

RateFunction rate_scale(const RateFunction& beta, double lambda);
RateFunction rate_tensorize(const std::vector<RateFunction>& rates);
RateFunction rate_convolve(const RateFunction& b1, const RateFunction& b2);
RateFunction wls_tensorize(const std::vector<RateFunction>& rates);
RateFunction wls_convolve(const std::vector<RateFunction>& rates);

// C(d) R(s)^2 exp(Osc_{B(0, R(s))} V) with R(s) the radius of mass 1/(1 + s).
RateFunction rate_from_local_oscillation(const Measure& m);

// Theta(u) = inf{s in (0, 1/4] : u >= 4 sqrt(beta(s)) ln(1/s)}, 1/4 when the set is empty.
class ConcentrationProfile {
 public:
  explicit ConcentrationProfile(RateFunction beta) : beta_(std::move(beta)) {}
  double operator()(double u) const;
  // Bound on mu(|G - m_G| > a) for an L-Lipschitz G.
  double tail_bound(double a, double L) const;
  const RateFunction& rate() const { return beta_; }

 private:
  RateFunction beta_;
};

ConcentrationProfile concentration_profile(const RateFunction& beta);

// e^{osc} beta(e^{m_U} s), with osc >= 0 and m_U <= 0.
RateFunction perturb_rate_holley_stroock(const RateFunction& beta_nu, double osc_U, double m_U);

// 2 e^{Osc_{B(0,R)} U} beta_nu(e^{m_U} s / 7) with R = 1 + med + 4 sqrt(beta_nu(u)) ln(1/u),
// u = s / (1 + 2 beta_nu(s)); U is normalized so that e^{-U} nu is a probability.
RateFunction perturb_rate_lower_bounded(const RateFunction& beta_nu, const Measure& nu, const Potential& U);

// Ingredients of the lower-bounded perturbation at one s, for reporting.
struct LowerBoundedTerms {
  double u = 0.0;
  double R = 0.0;
  double osc = 0.0;
  double m_U = 0.0;
  double value = 0.0;
};
LowerBoundedTerms lower_bounded_terms(const RateFunction& beta_nu, const Measure& nu, const Potential& U, double s);

// (1 + C(d) b R^2 e^{Osc_{B(0,R)} V}) h^{-1}(s) with h(r) = mu(phi <= 1/r).
RateFunction rate_from_lyapunov(const LyapunovCertificate& cert, const Measure& m);
double lyapunov_prefactor(const LyapunovCertificate& cert, const Measure& m);

// C h_U^{-1}(s) with h_U(r) = e^{-min_{phi_U <= 1/r} U} nu(phi_U <= 1/r).
RateFunction rate_from_perturbed_lyapunov(const LyapunovCertificate& cert, const Potential& U, const Measure& nu);

// s -> beta(s^{p/(p-2)} / 2^{(3p-2)/(p-2)}); p = +inf gives beta(s/8).
RateFunction p_weak_rate(const RateFunction& beta, double p);

// c' beta(c s / ln(1/s)) ln(1/s) for s <= s0, held at its s0 value above.
RateFunction wls_from_wp(const RateFunction& beta, double c = 1.0, double c_prime = 1.0, double s0 = 0.25);
// 24 beta_LS((s/2) ln(1 + 1/(2s))) / ln(1 + 1/(2s)), tabulated; NotApplicable unless the table is non-increasing.
RateFunction wp_from_wls(const RateFunction& beta_ls);

// True if f is non-increasing on a log grid of n points in [lo, hi], up to relative tolerance.
bool non_increasing(const RateFunction::Fn& f, double lo = RateFunction::kSMin, double hi = RateFunction::kSMax,
                    int n = 64, double rel_tol = 1e-12);

}  // namespace fiq
