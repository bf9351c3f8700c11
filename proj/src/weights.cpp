#include <fiq/errors.hpp>
#include <fiq/quadrature.hpp>
#include <fiq/weights.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

namespace fiq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// n log-spaced points in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n = 32) {
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
  return g;
}

// Weight with omega^2 replaced by omega^2(map(t)).
Weight composed(const Weight& w, const Field& map, const std::string& tag) {
  const Field w2 = w.omega2_field();
  if (const auto c = w2.constant_value()) return Weight(Field::constant(*c), tag, w.params());
  const std::string label = w2.label() + " o " + map.label();
  if (w2.differentiable() && map.differentiable())
    return Weight(Field([w2, map](const Dual& t) { return w2.apply(map.apply(t)); }, label), tag, w.params());
  return Weight(Field::values_only([w2, map](double t) { return w2(map(t)); }, label), tag, w.params());
}

void require_kind(const WeightedConstant& c, ConstantKind k, const char* what) {
  if (c.kind != k) throw BadParameter(std::string(what) + " needs a " + to_string(k) + " constant");
  if (!(c.value > 0.0) || !std::isfinite(c.value)) throw BadParameter(std::string(what) + ": constant must be positive");
}

WeightedConstant make(Weight w, double value, ConstantKind kind, std::string prov,
                      std::map<std::string, double> params = {}) {
  if (!(value > 0.0) || !std::isfinite(value)) throw BadParameter("weighted constant must be finite and positive");
  return WeightedConstant{std::move(w), value, kind, std::move(prov), std::move(params)};
}

// mu(t > y) and mu(t < y) from cumulative cell masses on the reference grid, with a 10-point Gauss
// rule on the partial cell; reproduces Measure::tail to quadrature accuracy at a fraction of the cost.
class TailTable {
 public:
  explicit TailTable(const Measure& m) : m_(m), t_(reference_grid(m.reduced_radial(), m.lo(), m.hi())) {
    const std::size_t n = t_.size();
    std::vector<double> cell(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) cell[i] = gauss(t_[i], t_[i + 1]);
    above_.assign(n, 0.0);
    below_.assign(n, 0.0);
    above_[n - 1] = t_[n - 1] < m.hi() ? m.mass(t_[n - 1], m.hi()) : 0.0;
    for (std::size_t i = n - 1; i-- > 0;) above_[i] = above_[i + 1] + cell[i];
    below_[0] = t_[0] > m.lo() ? m.mass(m.lo(), t_[0]) : 0.0;
    for (std::size_t i = 1; i < n; ++i) below_[i] = below_[i - 1] + cell[i - 1];
  }

  double above(double y) const {
    if (y <= t_.front() || y >= t_.back()) return m_.mass(y, m_.hi());
    const std::size_t i = cell_of(y);
    return above_[i + 1] + gauss(y, t_[i + 1]);
  }
  double below(double y) const {
    if (y <= t_.front() || y >= t_.back()) return m_.mass(m_.lo(), y);
    const std::size_t i = cell_of(y);
    return below_[i] + gauss(t_[i], y);
  }
  // mu(|t - x0| > r)
  double tail(double r, double x0) const {
    if (r <= 0.0) return 1.0;
    if (m_.reduced_radial()) return std::clamp(above(r), 0.0, 1.0);
    double s = 0.0;
    if (x0 - r > m_.lo()) s += below(x0 - r);
    if (x0 + r < m_.hi()) s += above(x0 + r);
    return std::clamp(s, 0.0, 1.0);
  }

 private:
  std::size_t cell_of(double y) const {
    return static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), y) - t_.begin()) - 1;
  }
  double gauss(double a, double b) const {
    const auto& rule = gauss_legendre(10);
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    double s = 0.0;
    for (int k = 0; k < 10; ++k) s += rule.weights[k] * m_.density(c + h * rule.nodes[k]);
    return s * h;
  }

  Measure m_;
  std::vector<double> t_;
  std::vector<double> above_, below_;
};

}  // namespace

std::string to_string(ConstantKind k) {
  switch (k) {
    case ConstantKind::direct: return "direct";
    case ConstantKind::converse: return "converse";
    case ConstantKind::log_sobolev: return "log_sobolev";
  }
  return "unknown";
}

std::string to_string(LsCase c) {
  switch (c) {
    case LsCase::bounded: return "bounded";
    case LsCase::lipschitz: return "lipschitz";
    case LsCase::lipschitz_alt: return "lipschitz_alt";
    case LsCase::generator: return "generator";
    case LsCase::lyapunov: return "lyapunov";
  }
  return "unknown";
}

LsCase ls_case_from_string(const std::string& s) {
  for (auto c : {LsCase::bounded, LsCase::lipschitz, LsCase::lipschitz_alt, LsCase::generator, LsCase::lyapunov})
    if (to_string(c) == s) return c;
  throw BadParameter("unknown log-Sobolev perturbation case '" + s + "'");
}

WeightedConstant cauchy_weighted_constant(double alpha, int d) {
  if (!(alpha > 0.0)) throw BadParameter("cauchy weighted constant needs alpha > 0");
  if (d < 1) throw BadParameter("dimension must be positive");
  double v;
  if (d == 1) v = alpha <= 2.0 ? 4.0 / (alpha * alpha) : 1.0 / (alpha - 1.0);
  else if (alpha <= 4.0) v = 4.0 / (alpha * alpha);
  else if (alpha <= d + 2.0) v = 1.0 / (2.0 * (alpha - 2.0));
  else v = 1.0 / (alpha + d - 2.0);
  std::map<std::string, double> params{{"alpha", alpha}, {"d", double(d)}, {"piecewise", v}};
  std::string prov = "cauchy piecewise bound";
  if (alpha > d) {
    const double bl = 2.0 / (alpha + d - 2.0);
    params["brascamp_lieb"] = bl;
    if (bl < v) {
      v = bl;
      prov = "cauchy Brascamp-Lieb bound 2/(alpha+d-2)";
    }
  }
  return make(Weight::cauchy_optimal(), v, ConstantKind::direct, prov, std::move(params));
}

WeightedConstant converse_from_direct(const WeightedConstant& direct, double grad_bound) {
  require_kind(direct, ConstantKind::direct, "converse_from_direct");
  if (!(grad_bound >= 0.0)) throw BadParameter("gradient bound must be non-negative");
  const double a = direct.value * grad_bound * grad_bound;
  if (a >= 1.0) throw TrickInapplicable("C |grad omega|^2 = " + num(a) + " is not below 1");
  const double r = 1.0 - std::sqrt(a);
  auto params = direct.params;
  params["grad_bound"] = grad_bound;
  params["direct"] = direct.value;
  return make(direct.weight, direct.value / (r * r), ConstantKind::converse,
              "change of function from direct constant " + num(direct.value), std::move(params));
}

WeightedConstant cauchy_converse_constant(double alpha, int d) {
  const auto direct = cauchy_weighted_constant(alpha, d);
  std::optional<WeightedConstant> best;
  if (alpha >= d + 2.0)
    best = make(Weight::cauchy_optimal(), 1.0 / (alpha + d), ConstantKind::converse, "cauchy converse 1/(alpha+d)",
                {{"alpha", alpha}, {"d", double(d)}});
  try {
    auto trick = converse_from_direct(direct, 1.0);
    if (!best || trick.value < best->value) best = std::move(trick);
  } catch (const TrickInapplicable&) {
  }
  if (!best) best = cauchy_lyapunov_converse(alpha, d);
  return *best;
}

WeightedConstant cauchy_lyapunov_converse(double alpha, int d, double k, double eps) {
  if (!(alpha > 0.0) || d < 1) throw BadParameter("cauchy converse needs alpha > 0, d >= 1");
  if (!(k > 0.0 && k <= 2.0 && k < alpha)) throw BadParameter("cauchy converse needs 0 < k <= 2, k < alpha");
  if (!(eps > 0.0 && eps < alpha - k)) throw BadParameter("cauchy converse needs 0 < eps < alpha - k");
  const double R2 = (d + eps) / (alpha - k - eps);
  const double C = 1.0 / (k + 2.0) + ((d + alpha - k) + eps * std::pow(1.0 + R2, 0.5 * k)) *
                                         ball_poincare_prefactor(d) * R2 * std::pow(1.0 + R2, 0.5 * (alpha + d));
  return make(Weight::cauchy_optimal(), C / eps, ConstantKind::converse, "cauchy converse from a phi-Lyapunov function",
              {{"alpha", alpha}, {"d", double(d)}, {"k", k}, {"eps", eps}, {"R", std::sqrt(R2)}});
}

WeightedConstant cauchy_lyapunov_converse(double alpha, int d) {
  if (!(alpha > 0.0)) throw BadParameter("cauchy converse needs alpha > 0");
  const double kmax = std::min(2.0, alpha);
  std::optional<WeightedConstant> best;
  for (int i = 1; i <= 32; ++i) {
    const double k = kmax * i / 33.0;
    for (int j = 1; j <= 32; ++j) {
      const double eps = (alpha - k) * j / 33.0;
      auto c = cauchy_lyapunov_converse(alpha, d, k, eps);
      if (!best || c.value < best->value) best = std::move(c);
    }
  }
  return *best;
}

double ball_poincare_bound(const Measure& m, double R) {
  if (!(R > 0.0)) throw BadParameter("ball radius must be positive");
  const double osc = Potential(m.potential()).osc_ball(R, m.reduced_radial());
  return ball_poincare_prefactor(m.dim()) * R * R * std::exp(osc);
}

double weighted_ball_bound(const Measure& m, const Weight& w, double R) {
  const bool radial = m.reduced_radial();
  const int n = 2049;
  const double a = radial ? 0.0 : -R;
  double sup = 0.0;
  for (int i = 0; i < n; ++i) sup = std::max(sup, w.omega2(a + (R - a) * i / (n - 1)));
  return sup * ball_poincare_bound(m, R);
}

LyapunovWeights weight_from_phi_lyapunov(const LyapunovCertificate& cert, const Measure& m,
                                         std::optional<double> ball_constant) {
  if (cert.variant != Variant::phi) throw CertificateInvalid("weights need a phi-variant certificate");
  const VerificationReport rep = cert.report.points > 0 ? cert.report : verify_certificate(cert, m);
  if (!rep.verified) throw CertificateInvalid("phi certificate does not verify");
  const double CR = ball_constant ? *ball_constant : ball_poincare_bound(m, cert.R);
  const Field F = cert.F, phi = cert.phi;
  const double phi1 = phi(1.0);
  if (!(phi1 > 0.0)) throw CertificateInvalid("phi(1) must be positive");
  const double M = std::max(1.0, cert.b * CR / phi1);
  std::map<std::string, double> params = cert.params;
  params["b"] = cert.b;
  params["R"] = cert.R;
  params["ball_constant"] = CR;

  Weight direct_w(Field::values_only([F, phi](double t) { return 1.0 + 1.0 / phi.derivative(F(t)); }, "1+1/phi'(F)"),
                  "lyapunov_phi", params);
  Weight converse_w(Field::values_only([F, phi](double t) {
                      const double f = F(t);
                      return f / phi(f);
                    }, "F/phi(F)"),
                    "lyapunov_phi_converse", params);
  Weight alt_w(Field::values_only([F, phi](double t) {
                 const Dual j = F.jet(t);
                 const double p = phi(j.v);
                 return 1.0 + j.d * j.d / (p * p);
               }, "1+|F'|^2/phi(F)^2"),
               "lyapunov_phi_alternate", params);
  return {make(direct_w, M, ConstantKind::direct, "phi-Lyapunov weight 1+1/phi'(F)", params),
          make(converse_w, 1.0 + cert.b * CR, ConstantKind::converse, "phi-Lyapunov converse weight phi(F)/F", params),
          make(alt_w, 8.0 * M * M, ConstantKind::direct, "phi-Lyapunov weight 1+|grad F|^2/phi(F)^2", params)};
}

WeightedConstant perturb_bounded(const WeightedConstant& c, const Potential& U, double m_U, std::optional<double> osc_U) {
  if (c.kind == ConstantKind::converse) throw Unsupported("bounded perturbation of converse constants");
  if (!(c.value > 0.0)) throw BadParameter("constant must be positive");
  auto params = c.params;
  if (osc_U) {
    if (!(*osc_U >= 0.0)) throw BadParameter("oscillation must be non-negative");
    params["osc_U"] = *osc_U;
    return make(c.weight, std::exp(*osc_U) * c.value, c.kind, c.provenance + "; bounded perturbation", params);
  }
  if (!(m_U <= 0.0)) throw BadParameter("m_U must be <= 0 for a normalized perturbation");
  params["m_U"] = m_U;
  return make(c.weight.tilted(U.field()), std::exp(-m_U) * c.value, c.kind,
              c.provenance + "; perturbation bounded below, weight omega e^{U/2}", params);
}

double lipschitz_sup_term(const Weight& w, const Potential& U, const Measure& nu) {
  double sup = 0.0;
  for (double t : lyapunov_grid(nu)) {
    const double g = U.field().derivative(t);
    const double v = g * g * w.omega2(t);
    if (std::isnan(v)) throw DifferentiationFailure("grad U not finite at " + num(t));
    sup = std::max(sup, v);
  }
  return sup;
}

double generator_sup_term(const Weight& w, const Potential& U, const Measure& nu) {
  const WeightedGenerator gen(nu.potential() + U.field(), w, nu.dim());
  double sup = 0.0;
  for (double t : lyapunov_grid(nu)) {
    const double g = U.field().derivative(t);
    const double v = 0.5 * g * g * w.omega2(t) + gen.apply(U.field(), t);
    if (std::isnan(v)) throw DifferentiationFailure("generator term not finite at " + num(t));
    sup = std::max(sup, v);
  }
  return sup;
}

WeightedConstant perturb_weighted_lipschitz(const WeightedConstant& c, double sup, double eps) {
  require_kind(c, ConstantKind::direct, "weighted Lipschitz perturbation");
  if (!(sup >= 0.0)) throw BadParameter("sup |grad U|^2 omega^2 must be non-negative");
  if (!(eps > 0.0)) throw BadParameter("eps must be positive");
  const double s = c.value * (1.0 + eps) * sup / 4.0;
  if (s >= 1.0) throw PerturbationTooLarge("s = " + num(s) + " is not below 1");
  auto params = c.params;
  params["eps"] = eps;
  params["s"] = s;
  return make(c.weight, (1.0 + 1.0 / eps) * c.value / (1.0 - s), ConstantKind::direct,
              c.provenance + "; weighted Lipschitz perturbation", params);
}

WeightedConstant perturb_weighted_lipschitz(const WeightedConstant& c, double sup) {
  require_kind(c, ConstantKind::direct, "weighted Lipschitz perturbation");
  if (!(sup >= 0.0)) throw BadParameter("sup |grad U|^2 omega^2 must be non-negative");
  if (sup == 0.0) {
    auto params = c.params;
    params["eps"] = kInf;
    params["s"] = 0.0;
    return make(c.weight, c.value, ConstantKind::direct, c.provenance + "; weighted Lipschitz perturbation", params);
  }
  const double a = c.value * sup / 4.0;
  if (a >= 1.0) throw PerturbationTooLarge("C sup / 4 = " + num(a) + " leaves no admissible eps");
  auto best = perturb_weighted_lipschitz(c, sup, 1.0 / std::sqrt(a) - 1.0);
  for (double eps : log_grid(1e-3 * (1.0 / a - 1.0), (1.0 - 1e-9) * (1.0 / a - 1.0))) {
    auto r = perturb_weighted_lipschitz(c, sup, eps);
    if (r.value < best.value) best = std::move(r);
  }
  return best;
}

WeightedConstant perturb_weighted_generator(const WeightedConstant& c, double sup_term) {
  require_kind(c, ConstantKind::direct, "weighted generator perturbation");
  if (!(sup_term >= 0.0)) throw BadParameter("generator sup term is a positive part");
  const double s = 0.5 * c.value * sup_term;
  if (s >= 1.0) throw PerturbationTooLarge("s = " + num(s) + " is not below 1");
  auto params = c.params;
  params["s"] = s;
  return make(c.weight, c.value / (1.0 - s), ConstantKind::direct, c.provenance + "; weighted generator perturbation",
              params);
}

WeightedConstant perturb_weighted_lyapunov(const WeightedLyapunovReport& check, double ball_constant, const Weight& w) {
  if (!check.verified) throw CertificateInvalid("weighted Lyapunov check failed: " + check.reason);
  if (!(check.theta_prime < check.theta)) throw CertificateInvalid("needs theta' < theta");
  if (!(ball_constant > 0.0)) throw BadParameter("ball constant must be positive");
  return make(w, (1.0 + ball_constant) / (check.theta - check.theta_prime), ConstantKind::direct,
              "weighted Lyapunov perturbation",
              {{"theta", check.theta}, {"theta_prime", check.theta_prime}, {"R", check.R}, {"b", check.b},
               {"ball_constant", ball_constant}});
}

RateFunction weak_rate_from_converse(const WeightedConstant& c, const Measure& m) {
  require_kind(c, ConstantKind::converse, "weak_rate_from_converse");
  const Field w2 = c.weight.omega2_field();
  double integral;
  try {
    integral = m.expect([&w2](double t) { return 1.0 / w2(t); });
  } catch (const Error& e) {
    throw WeightNotIntegrable(std::string("int omega^-2 d mu: ") + e.what());
  }
  if (!std::isfinite(integral)) throw WeightNotIntegrable("int omega^-2 d mu is infinite");
  if (const auto k = w2.constant_value())
    return RateFunction::constant(c.value * *k).with_provenance("ordinary Poincare from a constant converse weight");

  // y*(s) = sup{y : mu(omega^2 >= y) > s}; beta = C y*.
  const LevelProfile prof(m, Field::values_only([w2](double t) { return -w2(t); }, "-omega^2"));
  const double ylo = -prof.q_max(), yhi = -prof.q_min();
  if (!(ylo > 0.0)) throw BadParameter("converse weight must be positive");
  const double C = c.value;
  auto level = [&prof, ylo, yhi](double s) {
    if (prof.mass_below(-yhi) > s) return yhi;
    double a = std::log(ylo), b = std::log(yhi);
    for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
      const double mid = 0.5 * (a + b);
      if (prof.mass_below(-std::exp(mid)) > s) a = mid;
      else b = mid;
    }
    return std::exp(a);
  };
  return RateFunction::tabulate([C, level](double s) { return C * level(s); }, RateKind::weak_poincare,
                                "weak Poincare from converse constant " + num(C));
}

double capacity_lower_bound(const RateFunction& beta, double a) {
  if (!(a > 0.0 && a <= 0.5)) throw BadParameter("capacity bound needs 0 < a <= 1/2");
  return a / (4.0 * beta(a / 4.0));
}

Weight explicit_weight_from_rate(const RateFunction& beta, const Measure& m, double x0) {
  if (!(beta(1e-12) > beta(RateFunction::kSMin) * (1.0 + 1e-9)))
    throw RateBoundedAtZero("rate stays bounded as s -> 0; an ordinary Poincare inequality holds");
  if (m.reduced_radial() && x0 != 0.0) throw Unsupported("radial measures need x0 = 0");
  auto tails = std::make_shared<const TailTable>(m);
  Field w2 = Field::values_only(
      [beta, tails, x0](double t) {
        const double s = std::max(tails->tail(std::abs(t - x0), x0), 1e-300);
        return 1.0 / (4.0 * beta(0.25 * s));
      },
      "1/(4 beta(s(|x-x0|)/4))");
  return Weight(std::move(w2), "constructed_from_rate", {{"x0", x0}});
}

WeightedConstant converse_weighted_from_capacity(const Weight& w, double C) {
  if (!(C > 0.0)) throw BadParameter("capacity ratio must be positive");
  auto params = w.params();
  params["capacity_ratio"] = C;
  return make(w.reciprocal(), 16.0 * C, ConstantKind::converse, "capacity: nu(A) <= C Cap(A), constant 16 C", params);
}

double ls_lipschitz_bound(double C_LS, double C_P, double s, double beta, double eps, double eps_prime, double alpha,
                          double exp_moment) {
  if (!(s < 1.0)) throw PerturbationTooLarge("s = " + num(s) + " is not below 1");
  if (!(alpha > 1.0)) throw BadParameter("alpha must exceed 1");
  if (!std::isfinite(exp_moment)) throw IntegralDiverges("int e^{alpha U} d mu diverges");
  return alpha / (alpha - 1.0) *
         ((1.0 + 1.0 / eps) * C_LS + (2.0 + beta + exp_moment / alpha) * (1.0 + 1.0 / eps_prime) * C_P / (1.0 - s));
}

double ls_lipschitz_alt_bound(double C_LS, double C_P, double s, double eps, double neg_exp_mass) {
  if (!(s < 1.0)) throw PerturbationTooLarge("s = " + num(s) + " is not below 1");
  if (!std::isfinite(neg_exp_mass)) throw IntegralDiverges("int e^{U^-} d nu diverges");
  return neg_exp_mass * (1.0 + 1.0 / eps) / (1.0 - s) * ((2.0 - s) * C_LS + (2.0 + std::log(neg_exp_mass)) * C_P);
}

double ls_generator_bound(double C_LS, double C_P, double s, double beta, double alpha, double exp_moment) {
  if (!(s < 1.0)) throw PerturbationTooLarge("s = " + num(s) + " is not below 1");
  if (!(alpha > 1.0)) throw BadParameter("alpha must exceed 1");
  if (!std::isfinite(exp_moment)) throw IntegralDiverges("int e^{alpha U} d mu diverges");
  return alpha / (alpha - 1.0) * (C_LS + (2.0 + beta + exp_moment / alpha) * C_P / (1.0 - s));
}

namespace {

std::vector<double> candidates(const std::optional<double>& fixed, double lo, double hi) {
  if (fixed) return {*fixed};
  return log_grid(lo, hi);
}

// alpha values with a finite exponential moment.
std::vector<std::pair<double, double>> moments(const LsPerturbParams& p) {
  if (!p.exp_moment) throw BadParameter("exp_moment is required for this case");
  std::vector<std::pair<double, double>> out;
  for (double a : candidates(p.alpha, 1e-3, 1e2)) {
    const double alpha = p.alpha ? a : 1.0 + a;
    const double I = p.exp_moment(alpha);
    if (std::isfinite(I)) out.emplace_back(alpha, I);
  }
  if (out.empty()) throw IntegralDiverges("int e^{alpha U} d mu diverges for every alpha tried");
  return out;
}

}  // namespace

LsPerturbation ls_perturb(const WeightedConstant& c_ls, const WeightedConstant& c_p, LsCase which,
                          const LsPerturbParams& p) {
  require_kind(c_ls, ConstantKind::log_sobolev, "ls_perturb");
  LsPerturbation out;
  if (which == LsCase::bounded) {
    out.exists = true;
    out.constant = perturb_bounded(c_ls, p.U, p.m_U, p.osc_U);
    return out;
  }
  if (which == LsCase::lyapunov) {
    if (!p.check) throw BadParameter("lyapunov case needs a weighted Lyapunov check");
    if (!p.check->verified) throw CertificateInvalid("weighted Lyapunov check failed: " + p.check->reason);
    if (!(p.check->theta_prime < p.check->theta)) throw CertificateInvalid("needs theta' < theta");
    out.exists = true;
    out.note = "weighted log-Sobolev inequality holds given a local super Poincare inequality; no explicit constant";
    return out;
  }
  require_kind(c_p, ConstantKind::direct, "ls_perturb");
  const double G = p.sup_term;
  if (!(G >= 0.0)) throw BadParameter("sup term must be non-negative");
  const double CL = c_ls.value, CP = c_p.value;
  auto params = c_ls.params;
  double best = kInf;
  std::map<std::string, double> arg;

  if (which == LsCase::generator) {
    const double s = 0.5 * CP * G, beta = 0.5 * CL * G;
    if (s >= 1.0) throw PerturbationTooLarge("s = " + num(s) + " is not below 1");
    for (auto [alpha, I] : moments(p)) {
      const double v = ls_generator_bound(CL, CP, s, beta, alpha, I);
      if (v < best) best = v, arg = {{"alpha", alpha}, {"s", s}, {"beta", beta}};
    }
  } else {
    // eps must keep s = C_P (1 + eps) G / 4 below 1
    const double eps_hi = G > 0.0 ? 4.0 / (CP * G) - 1.0 : 1e3;
    if (!(eps_hi > 0.0)) throw PerturbationTooLarge("no eps gives s < 1");
    const auto epss = candidates(p.eps, std::min(1e-3, 1e-3 * eps_hi), (1.0 - 1e-9) * std::min(1e3, eps_hi));
    if (which == LsCase::lipschitz) {
      const auto ms = moments(p);
      const auto eps_ps = candidates(p.eps_prime, 1e-3, 1e3);
      for (double eps : epss) {
        const double s = CP * (1.0 + eps) * G / 4.0;
        if (s >= 1.0) continue;
        for (double ep : eps_ps) {
          const double beta = CL * (1.0 + ep) * G / 4.0;
          for (auto [alpha, I] : ms) {
            const double v = ls_lipschitz_bound(CL, CP, s, beta, eps, ep, alpha, I);
            if (v < best) best = v, arg = {{"eps", eps}, {"eps_prime", ep}, {"alpha", alpha}, {"s", s}, {"beta", beta}};
          }
        }
      }
    } else {
      for (double eps : epss) {
        const double s = CP * (1.0 + eps) * G / 4.0;
        if (s >= 1.0) continue;
        const double v = ls_lipschitz_alt_bound(CL, CP, s, eps, p.neg_exp_mass);
        if (v < best) best = v, arg = {{"eps", eps}, {"s", s}};
      }
    }
    if (!std::isfinite(best)) throw PerturbationTooLarge("s >= 1 for every eps tried");
  }
  params.insert(arg.begin(), arg.end());
  Weight w = c_ls.weight;
  if (which == LsCase::lipschitz_alt) {
    // omega e^{U^+/2} / (int e^{U^-} d nu)^{1/2}
    const Field U = p.U.field();
    const double lnI = std::log(p.neg_exp_mass);
    params["M_U"] = lnI;
    w = w.tilted(Field::values_only([U, lnI](double t) { return std::max(U(t), 0.0) - lnI; }, "U^+ - M_U"));
  }
  out.exists = true;
  out.constant = make(w, best, ConstantKind::log_sobolev, c_ls.provenance + "; " + to_string(which) + " perturbation",
                      params);
  return out;
}

WeightedConstant translate(const WeightedConstant& c, double x) {
  const Field map([x](const Dual& t) { return t - Dual(x); }, "x-" + num(x));
  auto r = c;
  r.weight = composed(c.weight, map, c.weight.tag() + "_translated");
  r.params["shift"] = x;
  return r;
}

WeightedConstant scale(const WeightedConstant& c, double lambda) {
  if (!(lambda != 0.0) || !std::isfinite(lambda)) throw BadParameter("scale factor must be finite and non-zero");
  const Field map([lambda](const Dual& t) { return t / Dual(lambda); }, "x/" + num(lambda));
  auto r = c;
  r.weight = composed(c.weight, map, c.weight.tag() + "_scaled");
  r.value = lambda * lambda * c.value;
  r.params["lambda"] = lambda;
  return r;
}

WeightedConstant lipschitz_map(const WeightedConstant& c, double L, const Field& T_inv) {
  if (!(L > 0.0) || !std::isfinite(L)) throw BadParameter("Lipschitz constant must be positive");
  auto r = c;
  r.weight = composed(c.weight, T_inv, c.weight.tag() + "_mapped");
  r.value = L * L * c.value;
  r.params["lipschitz"] = L;
  return r;
}

TensorDescriptor tensorize(const std::vector<WeightedConstant>& cs) {
  if (cs.empty()) throw BadParameter("tensorize needs at least one factor");
  TensorDescriptor d;
  for (const auto& c : cs) {
    require_kind(c, ConstantKind::direct, "tensorize");
    d.value = std::max(d.value, c.value);
    d.weights.push_back(c.weight);
  }
  return d;
}

ConvolutionDescriptor convolve(const std::vector<WeightedConstant>& cs) {
  if (cs.empty()) throw BadParameter("convolve needs at least one factor");
  ConvolutionDescriptor d;
  for (const auto& c : cs) {
    require_kind(c, ConstantKind::direct, "convolve");
    d.constants.push_back(c.value);
    d.weights.push_back(c.weight);
  }
  return d;
}

double ConvolutionDescriptor::field(const std::vector<double>& z) const {
  if (z.size() != weights.size()) throw BadParameter("convolution field needs one point per factor");
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += constants[i] * weights[i].omega2(z[i]);
  return s;
}

ConvolutionDescriptor::Estimate ConvolutionDescriptor::mean(const std::vector<Measure>& laws, std::size_t n,
                                                            std::uint64_t seed) const {
  if (laws.size() != weights.size()) throw BadParameter("one law per factor");
  if (n < 2) throw BadParameter("need at least two samples");
  std::vector<std::vector<double>> xs;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    if (laws[i].dim() != 1) throw Unsupported("Monte-Carlo field mean is for one-dimensional factors");
    xs.push_back(laws[i].sample_reduced(n, seed + 0x9e3779b97f4a7c15ULL * (i + 1)));
  }
  double sum = 0.0, sum2 = 0.0;
  std::vector<double> z(laws.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = xs[i][k];
    const double v = field(z);
    sum += v;
    sum2 += v * v;
  }
  const double m = sum / n;
  const double var = std::max(0.0, (sum2 - n * m * m) / (n - 1));
  return {m, std::sqrt(var / n)};
}

}  // namespace fiq
