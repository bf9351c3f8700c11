#include <fiq/errors.hpp>
#include <fiq/lyapunov.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace fiq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double laplacian(const Dual& f, double t, int dim) {
  if (dim <= 1) return f.dd;
  if (t == 0.0) return dim * f.dd;
  return f.dd + (dim - 1) * f.d / t;
}

double rel(double lhs, double rhs) { return (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0}); }

}  // namespace

WeightedGenerator::WeightedGenerator(Field V, Weight w, int dim) : V_(std::move(V)), w_(std::move(w)), dim_(dim) {}

WeightedGenerator::WeightedGenerator(const Measure& m, Weight w)
    : V_(m.potential()), w_(std::move(w)), dim_(m.dim()) {}

double WeightedGenerator::apply(const Field& f, double t) const {
  if (f.constant_value()) return 0.0;
  const Dual jf = f.jet(t);
  const Dual jw = w_.omega2_field().jet(t);
  const Dual jV = V_.jet(t);
  return jw.v * laplacian(jf, t, dim_) + (jw.d - jw.v * jV.d) * jf.d;
}

double WeightedGenerator::drift(double t) const {
  const Dual jw = w_.omega2_field().jet(t);
  return jw.d - jw.v * V_.jet(t).d;
}

double WeightedGenerator::diffusion(double t) const { return std::sqrt(2.0 * w_.omega2(t)); }

double apply_generator(const Field& V, const Field& f, double t, int dim) {
  if (f.constant_value()) return 0.0;
  const Dual jf = f.jet(t);
  return laplacian(jf, t, dim) - V.jet(t).d * jf.d;
}

double apply_generator(const WeightedGenerator& gen, const Field& f, double t) { return gen.apply(f, t); }

std::string to_string(Variant v) {
  switch (v) {
    case Variant::weak: return "weak";
    case Variant::phi: return "phi";
    case Variant::weighted: return "weighted";
  }
  return "unknown";
}

std::vector<double> lyapunov_grid(const Measure& m, int n) {
  std::vector<double> g;
  g.reserve(n);
  if (std::isfinite(m.lo()) && std::isfinite(m.hi())) {
    for (int i = 0; i < n; ++i) g.push_back(m.lo() + (m.hi() - m.lo()) * i / (n - 1));
    return g;
  }
  const double R = m.truncation_radius();
  const double L = m.scale();
  const double tmax = std::atan(R / L);
  if (m.reduced_radial()) {
    for (int i = 0; i < n; ++i) g.push_back(L * std::tan(tmax * i / (n - 1)));
  } else {
    for (int i = 0; i < n; ++i) g.push_back(L * std::tan(-tmax + 2.0 * tmax * i / (n - 1)));
  }
  return g;
}

Field drift_ratio(const Field& F, const Measure& m) {
  const Field V = m.potential();
  const int d = m.dim();
  return Field::values_only(
      [F, V, d](double t) {
        const Dual jf = F.jet(t);
        return (laplacian(jf, t, d) - V.jet(t).d * jf.d) / jf.v;
      },
      "L F / F");
}

VerificationReport verify_certificate(const LyapunovCertificate& cert, const Measure& m, const std::vector<double>& grid,
                                      double tol) {
  VerificationReport rep;
  rep.tolerance = tol;
  rep.points = grid.size();
  rep.max_violation = -kInf;
  rep.min_F = kInf;
  bool finite = true;
  const WeightedGenerator gen(m.potential(), cert.weight, m.dim());
  for (double t : grid) {
    const double ball = std::abs(t) <= cert.R ? cert.b : 0.0;
    const Dual jf = cert.F.jet(t);
    double lhs = 0.0, rhs = 0.0;
    switch (cert.variant) {
      case Variant::weak:
        lhs = (laplacian(jf, t, m.dim()) - m.potential().jet(t).d * jf.d) / jf.v;
        rhs = -cert.phi(t) + ball;
        break;
      case Variant::phi:
        lhs = laplacian(jf, t, m.dim()) - m.potential().jet(t).d * jf.d;
        rhs = -cert.phi(jf.v) + ball;
        break;
      case Variant::weighted:
        lhs = gen.apply(cert.F, t);
        rhs = -cert.theta * jf.v + ball;
        break;
    }
    if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
      finite = false;
      rep.witness = t;
      continue;
    }
    const double v = rel(lhs, rhs);
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.witness = t;
    }
    rep.min_F = std::min(rep.min_F, jf.v);
  }
  rep.verified = finite && rep.max_violation <= tol && rep.min_F >= 1.0 - 1e-12;
  return rep;
}

VerificationReport verify_certificate(const LyapunovCertificate& cert, const Measure& m, double tol) {
  return verify_certificate(cert, m, lyapunov_grid(m), tol);
}

LyapunovCertificate normalize_far_field(const Field& F, const Field& phi, double K, const Measure& m) {
  const double Rt = std::isfinite(m.hi()) ? std::max(std::abs(m.lo()), std::abs(m.hi())) : m.truncation_radius();
  if (!(K >= 0.0) || K > Rt) throw FarFieldViolated("far-field radius " + num(K) + " outside [0, " + num(Rt) + "]");
  const Field ratio = drift_ratio(F, m);
  const auto grid = lyapunov_grid(m);
  double M = 0.0;
  for (double t : grid) {
    const double q = ratio(t), p = phi(t);
    if (std::abs(t) >= K) {
      if (q > -p + 1e-9 * std::max({std::abs(q), std::abs(p), 1.0}))
        throw FarFieldViolated("L F / F <= -phi fails at x = " + num(t));
    } else {
      M = std::max({M, std::abs(q), std::abs(p)});
    }
  }
  const int nb = 2049;
  const double lo = m.reduced_radial() ? 0.0 : std::max(-K, m.lo());
  const double hi = std::min(K, m.hi());
  for (int i = 0; i < nb; ++i) {
    const double t = lo + (hi - lo) * i / (nb - 1);
    M = std::max({M, std::abs(ratio(t)), std::abs(phi(t))});
  }
  LyapunovCertificate c;
  c.variant = Variant::weak;
  c.F = F;
  c.phi = phi;
  c.b = 2.0 * M;
  c.R = K;
  c.label = "far-field(" + F.label() + ")";
  c.params = {{"K", K}, {"M", M}};
  c.report = verify_certificate(c, m, grid);
  return c;
}

FarFieldFit fit_far_field(const Field& F, const Field& shape, const Measure& m, double margin) {
  const Field ratio = drift_ratio(F, m);
  auto grid = lyapunov_grid(m);
  std::sort(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  std::vector<double> q(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) q[i] = -ratio(grid[i]) / shape(grid[i]);
  // The far field is the outer half of the truncated range in |x|.
  const double half = 0.5 * std::abs(grid.front());
  double qfar = kInf;
  for (std::size_t i = 0; i < grid.size() && std::abs(grid[i]) >= half; ++i) qfar = std::min(qfar, q[i]);
  const double c = margin * qfar;
  if (!(c > 0.0) || !std::isfinite(c)) throw FarFieldViolated("drift is not dissipative at infinity");
  double K = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(q[i] >= c)) break;
    K = std::abs(grid[i]);
  }
  // K is the innermost point of the outer run; if the run reaches the origin the bound holds everywhere.
  bool all = std::all_of(q.begin(), q.end(), [c](double v) { return v >= c; });
  return {c, all ? 0.0 : K};
}

LyapunovCertificate cauchy_certificate(const Measure& m, double k) {
  const double alpha = m.alpha();
  if (k == 0.0) k = 1.0 + alpha / 4.0;
  if (!(k > 0.0 && k < 1.0 + alpha / 2.0)) throw CertificateInvalid("cauchy certificate needs 0 < k < 1 + alpha/2");
  const Field F([k](const Dual& t) { return pow(Dual(1.0) + t * t, k); }, "(1+x^2)^" + num(k));
  const Field shape([](const Dual& t) { return Dual(1.0) / (Dual(1.0) + t * t); }, "1/(1+x^2)");
  const auto fit = fit_far_field(F, shape, m);
  const double c = fit.c;
  auto cert = normalize_far_field(F, c * shape, fit.K, m);
  cert.log_F = Field([k](const Dual& t) { return Dual(k) * log(Dual(1.0) + t * t); }, "ln F");
  cert.params["k"] = k;
  cert.params["c"] = c;
  cert.label = "cauchy: F=(1+x^2)^" + num(k) + ", phi=" + num(c) + "/(1+x^2)";
  return cert;
}

LyapunovCertificate cauchy_phi_certificate(const Measure& m, double k, double eps) {
  if (m.family() != Family::cauchy) throw CertificateInvalid("cauchy phi certificate needs a cauchy measure");
  const double alpha = m.alpha();
  const int d = m.dim();
  if (!(k > 0.0 && k <= 2.0 && k < alpha)) throw CertificateInvalid("phi certificate needs 0 < k <= 2 and k < alpha");
  if (!(eps > 0.0 && eps < alpha - k)) throw CertificateInvalid("phi certificate needs 0 < eps < alpha - k");
  const double p = 0.5 * k + 1.0;
  const double R2 = (d + eps) / (alpha - k - eps);
  LyapunovCertificate cert;
  cert.variant = Variant::phi;
  cert.F = Field([p](const Dual& t) { return pow(Dual(1.0) + t * t, p); }, "(1+x^2)^" + num(p));
  cert.log_F = Field([p](const Dual& t) { return Dual(p) * log(Dual(1.0) + t * t); }, "ln F");
  const double e = k / (k + 2.0), a = eps * (k + 2.0);
  cert.phi = Field([a, e](const Dual& u) { return Dual(a) * pow(u, e); }, num(a) + "*u^" + num(e));
  cert.R = std::sqrt(R2);
  cert.b = (k + 2.0) * ((d + alpha - k) + eps * std::pow(1.0 + R2, 0.5 * k));
  cert.params = {{"k", k}, {"eps", eps}};
  cert.label = "cauchy phi: F=" + cert.F.label() + ", phi(u)=" + cert.phi.label();
  cert.report = verify_certificate(cert, m);
  return cert;
}

LyapunovCertificate subbotin_certificate(const Measure& m, double gamma) {
  const double alpha = m.alpha();
  if (!(gamma > 0.0 && gamma < 1.0)) throw CertificateInvalid("subbotin certificate needs gamma in (0, 1)");
  const Field F([gamma, alpha](const Dual& t) { return exp(Dual(gamma) * pow(Dual(1.0) + t * t, 0.5 * alpha)); },
                "exp(" + num(gamma) + "(1+x^2)^" + num(0.5 * alpha) + ")");
  const Field shape([alpha](const Dual& t) { return pow(Dual(1.0) + t * t, alpha - 1.0); },
                    "(1+x^2)^" + num(alpha - 1.0));
  const auto fit = fit_far_field(F, shape, m);
  auto cert = normalize_far_field(F, fit.c * shape, fit.K, m);
  cert.log_F = Field([gamma, alpha](const Dual& t) { return Dual(gamma) * pow(Dual(1.0) + t * t, 0.5 * alpha); }, "ln F");
  cert.params["gamma"] = gamma;
  cert.params["c"] = fit.c;
  cert.label = "subbotin: " + F.label() + ", phi=" + num(fit.c) + shape.label();
  return cert;
}

LyapunovCertificate gaussian_certificate(const Measure& m) {
  const Field F([](const Dual& t) { return exp(Dual(0.25) * t * t); }, "exp(x^2/4)");
  const Field shape([](const Dual& t) { return Dual(1.0) + t * t; }, "1+x^2");
  const auto fit = fit_far_field(F, shape, m);
  auto cert = normalize_far_field(F, fit.c * shape, fit.K, m);
  cert.log_F = Field([](const Dual& t) { return Dual(0.25) * t * t; }, "ln F");
  cert.params["c"] = fit.c;
  cert.label = "gaussian: F=exp(x^2/4), phi=" + num(fit.c) + "(1+x^2)";
  return cert;
}

LyapunovCertificate default_certificate(const Measure& m) {
  switch (m.family()) {
    case Family::cauchy: return cauchy_certificate(m);
    case Family::subbotin: return subbotin_certificate(m);
    case Family::gaussian: return gaussian_certificate(m);
    default: throw Unsupported("no default drift certificate for " + m.describe());
  }
}

PerturbedDrift perturbed_drift(const LyapunovCertificate& cert, const Potential& U, const Measure& nu) {
  if (cert.variant != Variant::weak) throw CertificateInvalid("perturbed drift needs a weak-variant certificate");
  PerturbedDrift out;
  if (U.is_constant()) {
    out.phi_U = cert.phi;
  } else {
    const Field phi = cert.phi, F = cert.F, logF = cert.log_F, u = U.field();
    out.phi_U = Field::values_only(
        [phi, F, logF, u](double t) {
          double g = 0.0;
          if (logF.differentiable()) {
            g = logF.derivative(t);
          } else {
            const Dual jf = F.jet(t);
            g = jf.d / jf.v;
          }
          return g == 0.0 ? phi(t) : phi(t) + u.derivative(t) * g;
        },
        "phi + U' F'/F");
  }
  out.min_outside = kInf;
  for (double t : lyapunov_grid(nu)) {
    if (std::abs(t) < cert.R) continue;
    const double v = out.phi_U(t);
    if (v < out.min_outside) {
      out.min_outside = v;
      out.witness = t;
    }
  }
  out.positive_outside = out.min_outside > 0.0;
  if (!out.positive_outside) throw PhiUNotPositive("phi_U = " + num(out.min_outside) + " at x = " + num(out.witness));
  return out;
}

WeightedLyapunovReport weighted_lyapunov_check(const Weight& w, const Measure& W, const Field& F, double theta, double b,
                                               double R, const Potential& U, double theta_prime) {
  WeightedLyapunovReport rep;
  rep.theta = theta;
  rep.theta_prime = theta_prime;
  rep.b = b;
  rep.R = R;
  if (!(theta_prime < theta)) {
    rep.reason = "theta' must be smaller than theta";
    return rep;
  }
  const WeightedGenerator gen(W, w);
  rep.drift_violation = -kInf;
  rep.side_violation = -kInf;
  double worst = -kInf;
  for (double t : lyapunov_grid(W)) {
    const Dual jf = F.jet(t);
    const double lhs = gen.apply(F, t);
    const double rhs = -theta * jf.v + (std::abs(t) <= R ? b : 0.0);
    const double v1 = rel(lhs, rhs);
    const double side = U.is_constant() ? 0.0 : -w.omega2(t) * U.derivative(t) * jf.d;
    const double v2 = rel(side, theta_prime * jf.v);
    rep.drift_violation = std::max(rep.drift_violation, v1);
    rep.side_violation = std::max(rep.side_violation, v2);
    if (std::max(v1, v2) > worst) {
      worst = std::max(v1, v2);
      rep.witness = t;
    }
  }
  rep.verified = rep.drift_violation <= 1e-9 && rep.side_violation <= 1e-9;
  if (!rep.verified) rep.reason = rep.drift_violation > 1e-9 ? "drift inequality fails" : "side condition fails";
  return rep;
}

LyapunovCertificate cauchy_weighted_certificate(const Measure& m, double theta) {
  const double alpha = m.alpha();
  const int d = m.dim();
  const double beta = 0.5 * (alpha + d);
  const double q = (2.0 * d + theta) / (4.0 * (beta - 1.0));
  if (!(beta > 1.0) || !(q < 1.0) || !(theta > 0.0))
    throw CertificateInvalid("weighted drift needs theta > 0 and 2d + theta < 4(beta - 1)");
  LyapunovCertificate c;
  c.variant = Variant::weighted;
  c.weight = Weight::cauchy_optimal();
  c.F = c.weight.omega2_field();
  c.theta = theta;
  c.R = std::sqrt(q / (1.0 - q));
  c.b = (2.0 * d + theta) * (1.0 + c.R * c.R);
  c.label = "cauchy weighted: F=omega^2=1+x^2";
  c.params = {{"beta", beta}, {"theta", theta}};
  c.report = verify_certificate(c, m);
  return c;
}

}  // namespace fiq
