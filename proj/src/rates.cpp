#include <fiq/errors.hpp>
#include <fiq/rates.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace fiq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// sup{y : P(y) <= s} for non-decreasing P, by bisection in ln y on [lo, hi] with P(lo) <= s < P(hi).
double sup_level(const std::function<double(double)>& P, double s, double lo, double hi) {
  for (int it = 0; it < 200 && hi / lo - 1.0 > 1e-14; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (P(mid) <= s) lo = mid;
    else hi = mid;
  }
  return lo;
}

// 1 / sup{y : P(y) <= s} over the standard nodes, for a positive field profiled by P.
std::vector<double> inverse_levels(const std::function<double(double)>& P, double q_min, double q_max) {
  if (!(q_min > 0.0)) throw CertificateInvalid("drift rate phi must be positive");
  std::vector<double> out;
  for (double s : RateFunction::nodes()) {
    const double lo = 0.5 * q_min;
    double hi = q_max;
    if (P(hi) <= s) {
      out.push_back(1.0 / hi);
      continue;
    }
    out.push_back(1.0 / sup_level(P, s, lo, hi));
  }
  return out;
}

}  // namespace

std::string to_string(RateKind k) { return k == RateKind::weak_poincare ? "weak_poincare" : "weak_log_sobolev"; }

struct RateFunction::Rep {
  Representation rep = Representation::composite;
  RateKind kind = RateKind::weak_poincare;
  std::string provenance;
  std::string family;
  std::map<std::string, double> params;
  Fn f;
  std::vector<double> s;
  std::vector<double> beta;
};

std::vector<double> RateFunction::nodes() {
  std::vector<double> v(kNodes);
  const double a = std::log(kSMin), b = std::log(kSMax);
  for (int i = 0; i < kNodes; ++i) v[i] = std::exp(a + (b - a) * i / (kNodes - 1));
  v.back() = kSMax;
  return v;
}

bool non_increasing(const RateFunction::Fn& f, double lo, double hi, int n, double rel_tol) {
  double prev = kInf;
  for (int i = 0; i < n; ++i) {
    const double s = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
    const double v = f(s);
    if (std::isnan(v)) return false;
    if (v > prev * (1.0 + rel_tol) + 1e-300) return false;
    prev = v;
  }
  return true;
}

RateFunction RateFunction::power(double c, double p, RateKind kind) {
  if (!(c >= 0.0) || !(p >= 0.0)) throw BadParameter("power rate needs c >= 0 and p >= 0");
  auto r = std::make_shared<Rep>();
  r->rep = Representation::closed_form;
  r->kind = kind;
  r->family = "power";
  r->params = {{"c", c}, {"p", p}};
  r->f = [c, p](double s) { return c * std::pow(s, -p); };
  r->provenance = num(c) + "*s^-" + num(p);
  return RateFunction(r);
}

RateFunction RateFunction::constant(double c, RateKind kind) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw BadParameter("constant rate must be finite and non-negative");
  auto r = std::make_shared<Rep>();
  r->rep = Representation::closed_form;
  r->kind = kind;
  r->family = "constant";
  r->params = {{"c", c}};
  r->f = [c](double) { return c; };
  r->provenance = "constant " + num(c);
  return RateFunction(r);
}

RateFunction RateFunction::log_power(double c, double q, RateKind kind) {
  if (!(c >= 0.0) || !(q >= 0.0)) throw BadParameter("log-power rate needs c >= 0 and q >= 0");
  auto r = std::make_shared<Rep>();
  r->rep = Representation::closed_form;
  r->kind = kind;
  r->family = "log_power";
  r->params = {{"c", c}, {"q", q}};
  r->f = [c, q](double s) { return s >= 1.0 ? 0.0 : c * std::pow(std::log(1.0 / s), q); };
  r->provenance = num(c) + "*ln(1/s)^" + num(q);
  return RateFunction(r);
}

RateFunction RateFunction::composite(Fn f, RateKind kind, std::string provenance) {
  if (!non_increasing(f)) throw NotMonotone("rate '" + provenance + "' is not non-increasing");
  auto r = std::make_shared<Rep>();
  r->rep = Representation::composite;
  r->kind = kind;
  r->f = std::move(f);
  r->provenance = std::move(provenance);
  return RateFunction(r);
}

RateFunction RateFunction::tabulated(std::vector<double> s, std::vector<double> beta, RateKind kind,
                                     std::string provenance) {
  if (s.size() != beta.size() || s.size() < 2) throw BadParameter("rate table needs at least two (s, beta) pairs");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0) || (i > 0 && !(s[i] > s[i - 1]))) throw BadParameter("rate table s must be positive and increasing");
    if (!(beta[i] >= 0.0) || !std::isfinite(beta[i])) throw BadParameter("rate table values must be finite and >= 0");
    if (i > 0 && beta[i] > beta[i - 1] * (1.0 + 1e-12))
      throw NotMonotone("rate table increases at s = " + num(s[i]) + " (" + provenance + ")");
  }
  auto r = std::make_shared<Rep>();
  r->rep = Representation::tabulated;
  r->kind = kind;
  r->s = std::move(s);
  r->beta = std::move(beta);
  r->provenance = std::move(provenance);
  return RateFunction(r);
}

RateFunction RateFunction::tabulate(const Fn& f, RateKind kind, std::string provenance) {
  const auto s = nodes();
  std::vector<double> b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) b[i] = f(s[i]);
  return tabulated(s, std::move(b), kind, std::move(provenance));
}

double RateFunction::operator()(double s) const {
  if (!(s > 0.0)) throw BadParameter("rate argument must be positive");
  const Rep& r = *rep_;
  if (r.rep != Representation::tabulated) return r.f(s);
  const auto& x = r.s;
  const auto& y = r.beta;
  if (s >= x.back()) return y.back();
  std::size_t i = 0;
  if (s > x.front()) i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), s) - x.begin()) - 1;
  const double ls = std::log(s), la = std::log(x[i]), lb = std::log(x[i + 1]);
  const double w = (ls - la) / (lb - la);
  if (y[i] > 0.0 && y[i + 1] > 0.0) return std::exp(std::log(y[i]) + w * (std::log(y[i + 1]) - std::log(y[i])));
  if (s < x.front()) return y.front();
  return y[i] + w * (y[i + 1] - y[i]);
}

double RateFunction::inverse(double y) const {
  if ((*this)(kSMax) > y) return kInf;
  double lo = 1e-300, hi = kSMax;
  if ((*this)(lo) <= y) return 0.0;
  for (int it = 0; it < 300 && hi / lo - 1.0 > 1e-15; ++it) {
    const double mid = std::sqrt(lo * hi);
    if ((*this)(mid) <= y) hi = mid;
    else lo = mid;
  }
  return hi;
}

RateFunction::Representation RateFunction::representation() const { return rep_->rep; }
RateKind RateFunction::kind() const { return rep_->kind; }
const std::string& RateFunction::provenance() const { return rep_->provenance; }
const std::string& RateFunction::family() const { return rep_->family; }
const std::map<std::string, double>& RateFunction::params() const { return rep_->params; }

std::vector<double> RateFunction::table_s() const {
  return rep_->rep == Representation::tabulated ? rep_->s : nodes();
}

std::vector<double> RateFunction::table_beta() const {
  if (rep_->rep == Representation::tabulated) return rep_->beta;
  std::vector<double> b;
  for (double s : nodes()) b.push_back((*this)(s));
  return b;
}

RateFunction RateFunction::with_provenance(std::string p) const {
  auto r = std::make_shared<Rep>(*rep_);
  r->provenance = std::move(p);
  return RateFunction(r);
}

RateFunction RateFunction::with_kind(RateKind k) const {
  auto r = std::make_shared<Rep>(*rep_);
  r->kind = k;
  return RateFunction(r);
}

double ball_poincare_prefactor(int d) {
  if (d < 1) throw BadParameter("dimension must be positive");
  if (d == 1) return 4.0 / (std::numbers::pi * std::numbers::pi);
  return (d + 2.0) / (d * (d - 1.0));
}

RateFunction builtin_rate(Family family, double alpha, double c) {
  if (!(c > 0.0)) throw BadParameter("rate prefactor must be positive");
  if (family == Family::cauchy) {
    if (!(alpha > 0.0)) throw BadParameter("cauchy rate needs alpha > 0");
    auto r = RateFunction::power(c, 2.0 / alpha);
    return r.with_provenance("cauchy(alpha=" + num(alpha) + ") closed form " + num(c) + "*s^(-2/alpha)");
  }
  if (family == Family::subbotin) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw BadParameter("subbotin rate needs alpha in (0, 1)");
    auto r = RateFunction::log_power(c, 2.0 * (1.0 - alpha) / alpha);
    return r.with_provenance("subbotin(alpha=" + num(alpha) + ") closed form " + num(c) + "*ln(1/s)^(2(1-alpha)/alpha)");
  }
  throw BadParameter("no closed-form rate for family " + to_string(family));
}

RateFunction rate_scale(const RateFunction& beta, double lambda) {
  if (lambda == 0.0 || !std::isfinite(lambda)) throw BadParameter("scale factor must be finite and non-zero");
  const double l2 = lambda * lambda;
  return RateFunction::composite([beta, l2](double s) { return l2 * beta(s); }, beta.kind(),
                                 "scale(" + num(lambda) + ") of " + beta.provenance());
}

RateFunction rate_tensorize(const std::vector<RateFunction>& rates) {
  if (rates.empty()) throw BadParameter("tensorization of no rates");
  if (rates.size() == 1) return rates.front();
  const double n = static_cast<double>(rates.size());
  return RateFunction::composite(
      [rates, n](double s) {
        double m = 0.0;
        for (const auto& b : rates) m = std::max(m, b(s / n));
        return m;
      },
      RateKind::weak_poincare, "tensorize(" + std::to_string(rates.size()) + ")");
}

RateFunction rate_convolve(const RateFunction& b1, const RateFunction& b2) {
  return RateFunction::composite([b1, b2](double s) { return b1(0.5 * s) + b2(0.5 * s); }, RateKind::weak_poincare,
                                 "convolve(" + b1.provenance() + ", " + b2.provenance() + ")");
}

RateFunction wls_tensorize(const std::vector<RateFunction>& rates) {
  if (rates.empty()) throw BadParameter("tensorization of no rates");
  if (rates.size() == 1) return rates.front();
  const double n = static_cast<double>(rates.size());
  return RateFunction::composite(
      [rates, n](double s) {
        double m = 0.0;
        for (const auto& b : rates) m = std::max(m, b(s / n));
        return m;
      },
      RateKind::weak_log_sobolev, "ls-tensorize(" + std::to_string(rates.size()) + ")");
}

RateFunction wls_convolve(const std::vector<RateFunction>& rates) {
  if (rates.empty()) throw BadParameter("convolution of no rates");
  if (rates.size() == 1) return rates.front();
  const double n = static_cast<double>(rates.size());
  return RateFunction::composite(
      [rates, n](double s) {
        double t = 0.0;
        for (const auto& b : rates) t += b(s / n);
        return t;
      },
      RateKind::weak_log_sobolev, "ls-convolve(" + std::to_string(rates.size()) + ")");
}

RateFunction rate_from_local_oscillation(const Measure& m) {
  if (m.family() == Family::product) throw OscillationUnavailable("product measures");
  const Potential V(m.potential());
  const bool radial = m.reduced_radial();
  const double C = ball_poincare_prefactor(m.dim());
  // Tail s(r) = mu{-|x| <= -r}, profiled once; radii by bisection in ln r.
  const LevelProfile prof(m, Field([](const Dual& t) { return -abs(t); }, "-|x|"));
  const double rmax = std::max(std::abs(m.lo()), std::abs(m.hi()));
  auto radius = [&](double sigma) {
    double lo = 1e-300, hi = std::isfinite(rmax) ? rmax : std::exp(41.0);
    if (prof.mass_below(-hi) > sigma) return m.tail_inverse(sigma);
    for (int it = 0; it < 300 && hi / lo - 1.0 > 1e-14; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (prof.mass_below(-mid) <= sigma) hi = mid;
      else lo = mid;
    }
    // Secant polish in ln r on the exact tail.
    double r0 = hi, r1 = hi * 1.001;
    double f0 = std::log(m.tail(r0)) - std::log(sigma), f1 = std::log(m.tail(r1)) - std::log(sigma);
    for (int it = 0; it < 8 && std::isfinite(f0) && std::isfinite(f1) && f1 != f0; ++it) {
      const double r2 = std::exp(std::log(r1) - f1 * (std::log(r1) - std::log(r0)) / (f1 - f0));
      if (!(r2 > 0.0) || !std::isfinite(r2)) break;
      r0 = r1, f0 = f1, r1 = r2;
      f1 = std::log(m.tail(r1)) - std::log(sigma);
      if (std::abs(f1) < 1e-13) break;
    }
    return std::isfinite(f1) && std::abs(f1) < 1e-8 ? r1 : hi;
  };
  std::vector<double> beta;
  for (double s : RateFunction::nodes()) {
    const double R = radius(s / (1.0 + s));
    const double osc = V.osc_ball(R, radial);
    beta.push_back(C * R * R * std::exp(osc));
  }
  return RateFunction::tabulated(RateFunction::nodes(), std::move(beta), RateKind::weak_poincare,
                                 "local oscillation of " + m.describe());
}

double ConcentrationProfile::operator()(double u) const {
  auto g = [this](double s) { return 4.0 * std::sqrt(beta_(s)) * std::log(1.0 / s); };
  const double top = RateFunction::kSMax;
  if (!(g(top) <= u)) return top;
  double lo = 1e-300, hi = top;
  if (g(lo) <= u) return lo;
  for (int it = 0; it < 300 && hi / lo - 1.0 > 1e-15; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (g(mid) <= u) hi = mid;
    else lo = mid;
  }
  return hi;
}

double ConcentrationProfile::tail_bound(double a, double L) const {
  if (!(L > 0.0)) throw BadParameter("Lipschitz constant must be positive");
  return std::min(1.0, 6.0 * (*this)(a / L));
}

ConcentrationProfile concentration_profile(const RateFunction& beta) { return ConcentrationProfile(beta); }

RateFunction perturb_rate_holley_stroock(const RateFunction& beta_nu, double osc_U, double m_U) {
  if (!(osc_U >= 0.0) || !(m_U <= 0.0)) throw BadParameter("bounded perturbation needs Osc U >= 0 and m_U <= 0");
  if (osc_U == 0.0 && m_U == 0.0) return beta_nu;
  const double a = std::exp(osc_U), e = std::exp(m_U);
  return RateFunction::composite([beta_nu, a, e](double s) { return a * beta_nu(e * s); }, beta_nu.kind(),
                                 "bounded perturbation (osc " + num(osc_U) + ", m_U " + num(m_U) + ") of " +
                                     beta_nu.provenance());
}

namespace {

struct PerturbationData {
  double median = 0.0;
  double m_U = 0.0;
};

PerturbationData perturbation_data(const Measure& nu, const Potential& U) {
  PerturbationData d;
  d.median = nu.median_abs();
  if (U.is_constant()) {
    d.m_U = 0.0;
  } else {
    const double lnZ = Measure::perturbed(nu, U).perturbation_log_mass();
    d.m_U = U.lower_bound(nu.reduced_radial()).value + lnZ;
  }
  return d;
}

LowerBoundedTerms terms_at(const RateFunction& beta, const Measure& nu, const Potential& U, const PerturbationData& d,
                           double s) {
  LowerBoundedTerms t;
  t.m_U = d.m_U;
  t.u = s / (1.0 + 2.0 * beta(s));
  t.R = 1.0 + d.median + 4.0 * std::sqrt(beta(t.u)) * std::log(1.0 / t.u);
  t.osc = U.osc_ball(t.R, nu.reduced_radial());
  t.value = 2.0 * std::exp(t.osc) * beta(std::exp(d.m_U) * s / 7.0);
  return t;
}

}  // namespace

LowerBoundedTerms lower_bounded_terms(const RateFunction& beta_nu, const Measure& nu, const Potential& U, double s) {
  return terms_at(beta_nu, nu, U, perturbation_data(nu, U), s);
}

RateFunction perturb_rate_lower_bounded(const RateFunction& beta_nu, const Measure& nu, const Potential& U) {
  if (U.is_constant())
    return RateFunction::composite([beta_nu](double s) { return 2.0 * beta_nu(s / 7.0); }, beta_nu.kind(),
                                   "lower-bounded perturbation (constant U) of " + beta_nu.provenance());
  const auto d = perturbation_data(nu, U);
  const auto s = RateFunction::nodes();
  const std::size_t n = s.size();
  // raw[0] is one node below the table; raw[i + 1] belongs to s[i].
  std::vector<double> raw(n + 1);
  raw[0] = terms_at(beta_nu, nu, U, d, s[0] * s[0] / s[1]).value;
  for (std::size_t i = 0; i < n; ++i) raw[i + 1] = terms_at(beta_nu, nu, U, d, s[i]).value;
  // Non-increasing majorant shifted by one node: the value at s[i] dominates the bound at s[i-1] and
  // beyond, so log-log interpolation between nodes never drops below the bound at the left node.
  std::vector<double> suffix(n + 1);
  suffix[n] = raw[n];
  for (std::size_t j = n; j-- > 0;) suffix[j] = std::max(suffix[j + 1], raw[j]);
  std::vector<double> beta(n);
  for (std::size_t i = 0; i < n; ++i) beta[i] = suffix[i];
  return RateFunction::tabulated(s, std::move(beta), beta_nu.kind(),
                                 "lower-bounded perturbation (m_U " + num(d.m_U) + ", U=" + U.label() + ") of " +
                                     beta_nu.provenance());
}

double lyapunov_prefactor(const LyapunovCertificate& cert, const Measure& m) {
  const double osc = Potential(m.potential()).osc_ball(cert.R, m.reduced_radial());
  return 1.0 + ball_poincare_prefactor(m.dim()) * cert.b * cert.R * cert.R * std::exp(osc);
}

RateFunction rate_from_lyapunov(const LyapunovCertificate& cert, const Measure& m) {
  if (cert.variant != Variant::weak) throw CertificateInvalid("rate from drift needs a weak-variant certificate");
  if (!cert.report.verified) throw CertificateInvalid("certificate is not verified: " + cert.label);
  const double C = lyapunov_prefactor(cert, m);
  const LevelProfile prof(m, cert.phi);
  auto inv = inverse_levels([&](double y) { return prof.mass_below(y); }, prof.q_min(), prof.q_max());
  for (auto& v : inv) v *= C;
  return RateFunction::tabulated(RateFunction::nodes(), std::move(inv), RateKind::weak_poincare,
                                 "drift certificate [" + cert.label + "] on " + m.describe());
}

RateFunction rate_from_perturbed_lyapunov(const LyapunovCertificate& cert, const Potential& U, const Measure& nu) {
  if (U.is_constant()) return rate_from_lyapunov(cert, nu);
  if (!cert.report.verified) throw CertificateInvalid("certificate is not verified: " + cert.label);
  const auto pd = perturbed_drift(cert, U, nu);
  const double K = cert.R;
  Field phi = pd.phi_U;
  if (K > 0.0) {
    double mK = pd.phi_U(K);
    if (!nu.reduced_radial()) mK = std::min(mK, pd.phi_U(-K));
    const Field raw = pd.phi_U;
    phi = Field::values_only([raw, K, mK](double t) { return std::abs(t) < K ? std::max(raw(t), mK) : raw(t); },
                             "phi_U");
  }
  const Measure mu = Measure::perturbed(nu, U);
  const auto c2 = normalize_far_field(cert.F, phi, K, mu);
  if (!c2.report.verified) throw CertificateInvalid("perturbed certificate does not verify");
  const double C = lyapunov_prefactor(c2, mu);
  const double lnZ = mu.perturbation_log_mass();
  const LevelProfile prof(nu, phi);
  const auto u_nodes = prof.at_nodes(U.field());
  auto H = [&](double y) {
    const double p = prof.mass_below(y);
    if (p == 0.0) return 0.0;
    return std::exp(-(prof.min_below(U.field(), u_nodes, y) + lnZ)) * p;
  };
  auto inv = inverse_levels(H, prof.q_min(), prof.q_max());
  for (auto& v : inv) v *= C;
  return RateFunction::tabulated(RateFunction::nodes(), std::move(inv), RateKind::weak_poincare,
                                 "perturbed drift certificate [" + cert.label + ", U=" + U.label() + "] on " +
                                     nu.describe());
}

RateFunction p_weak_rate(const RateFunction& beta, double p) {
  if (!(p > 2.0)) throw BadParameter("p-weak rate needs p > 2");
  if (std::isinf(p))
    return RateFunction::composite([beta](double s) { return beta(s / 8.0); }, beta.kind(),
                                   "p-weak(inf) of " + beta.provenance());
  const double e1 = p / (p - 2.0), e2 = (3.0 * p - 2.0) / (p - 2.0);
  const double k = std::pow(2.0, e2);
  return RateFunction::composite([beta, e1, k](double s) { return beta(std::pow(s, e1) / k); }, beta.kind(),
                                 "p-weak(" + num(p) + ") of " + beta.provenance());
}

RateFunction wls_from_wp(const RateFunction& beta, double c, double c_prime, double s0) {
  if (!(c > 0.0) || !(c_prime > 0.0) || !(s0 > 0.0 && s0 < 1.0))
    throw BadParameter("log-Sobolev conversion needs c, c' > 0 and s0 in (0, 1)");
  return RateFunction::composite(
      [beta, c, c_prime, s0](double s) {
        const double t = std::min(s, s0);
        const double l = std::log(1.0 / t);
        return c_prime * beta(c * t / l) * l;
      },
      RateKind::weak_log_sobolev,
      "log-Sobolev from Poincare (c=" + num(c) + ", c'=" + num(c_prime) + ", s0=" + num(s0) + ") of " +
          beta.provenance());
}

RateFunction wp_from_wls(const RateFunction& beta_ls) {
  auto f = [beta_ls](double s) {
    const double l = std::log1p(1.0 / (2.0 * s));
    return 24.0 * beta_ls(0.5 * s * l) / l;
  };
  try {
    return RateFunction::tabulate(f, RateKind::weak_poincare, "Poincare from log-Sobolev of " + beta_ls.provenance());
  } catch (const NotMonotone&) {
    throw NotApplicable("converted rate is not non-increasing on the table nodes");
  }
}

}  // namespace fiq
