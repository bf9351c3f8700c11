#include <fiq/empirical.hpp>
#include <fiq/errors.hpp>
#include <fiq/parallel.hpp>
#include <fiq/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace fiq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Integral of g over [a, b] by an n-point Gauss rule.
template <class G>
double gauss(const G& g, double a, double b, int n = 4) {
  const auto& rule = gauss_legendre(n);
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += rule.weights[k] * g(c + h * rule.nodes[k]);
  return s * h;
}

double effective_scale(const Measure& m) {
  const double s = m.scale();
  return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

// Symmetric tridiagonal matrix D^{-1/2} K D^{-1/2} of a pencil, without a pinned origin.
struct Tridiagonal {
  std::vector<double> a;  // diagonal
  std::vector<double> b;  // off-diagonal
  std::vector<double> scale;  // D^{-1/2}
  std::size_t offset = 0;
};

Tridiagonal symmetric_form(const DiscretizedForm& f) {
  Tridiagonal T;
  T.offset = f.pinned_origin ? 1 : 0;
  const std::size_t n = f.t.size() - T.offset;
  T.a.resize(n);
  T.b.resize(n > 0 ? n - 1 : 0);
  T.scale.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double M = f.mass[i + T.offset];
    if (!(M > 0.0)) throw GridTooCoarse("non-positive lumped mass at node " + std::to_string(i + T.offset));
    T.scale[i] = 1.0 / std::sqrt(M);
  }
  for (std::size_t i = 0; i < n; ++i) T.a[i] = f.diag[i + T.offset] * T.scale[i] * T.scale[i];
  for (std::size_t i = 0; i + 1 < n; ++i) T.b[i] = f.off[i + T.offset] * T.scale[i] * T.scale[i + 1];
  return T;
}

// Number of eigenvalues below x (Sturm count from the LDL^T pivots).
std::size_t sturm_count(const Tridiagonal& T, double x) {
  const double pivmin = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  std::size_t count = 0;
  double q = T.a[0] - x;
  for (std::size_t i = 0;; ++i) {
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
    if (i + 1 == T.a.size()) break;
    q = T.a[i + 1] - x - T.b[i] * T.b[i] / q;
  }
  return count;
}

double kth_eigenvalue(const Tridiagonal& T, std::size_t k) {
  if (k >= T.a.size()) throw BadParameter("eigenvalue index beyond the matrix size");
  double upper = 0.0;
  for (std::size_t i = 0; i < T.a.size(); ++i) {
    double r = T.a[i];
    if (i > 0) r += std::abs(T.b[i - 1]);
    if (i < T.b.size()) r += std::abs(T.b[i]);
    upper = std::max(upper, r);
  }
  upper = upper * (1.0 + 1e-12) + std::numeric_limits<double>::min();
  // Geometric descent to a bracket, then geometric bisection to full relative precision.
  double lower = upper;
  while (sturm_count(T, lower) > k) {
    upper = lower;
    lower *= 0.5;
    if (lower < 1e-300) return 0.0;
  }
  while (upper / lower - 1.0 > 4e-16) {
    const double mid = std::sqrt(lower * upper);
    if (mid <= lower || mid >= upper) break;
    if (sturm_count(T, mid) > k) upper = mid;
    else lower = mid;
  }
  return std::sqrt(lower * upper);
}

// Solves (T - sigma) y = rhs in place by Gaussian elimination with partial pivoting.
void shifted_solve(const Tridiagonal& T, double sigma, std::vector<double>& rhs) {
  const std::size_t n = T.a.size();
  std::vector<double> d(n), du(T.b), dl(T.b), du2(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i] = T.a[i] - sigma;
  const double tiny = 1e-300;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = tiny;
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      rhs[i + 1] -= fact * rhs[i];
      du2[i] = 0.0;
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du2[i];
      }
      du[i] = temp;
      const double r = rhs[i];
      rhs[i] = rhs[i + 1];
      rhs[i + 1] = r - fact * rhs[i + 1];
    }
  }
  if (d[n - 1] == 0.0) d[n - 1] = tiny;
  rhs[n - 1] /= d[n - 1];
  if (n >= 2) rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
  for (std::size_t i = n - 2; i-- > 0;) rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
}

struct SectorResult {
  double lambda_coarse = 0.0;
  double lambda_fine = 0.0;
  double lambda = 0.0;
  std::string name;
};

SectorResult solve_sector(const Measure& m, std::size_t cells, const std::function<double(double)>& stiff,
                          const std::function<double(double)>& mass, double angular, std::size_t k, std::string name) {
  SectorResult r;
  r.name = std::move(name);
  r.lambda_coarse = kth_eigenvalue(symmetric_form(discretize(spectral_grid(m, cells), stiff, mass, angular)), k);
  r.lambda_fine = kth_eigenvalue(symmetric_form(discretize(spectral_grid(m, 2 * cells), stiff, mass, angular)), k);
  r.lambda = (4.0 * r.lambda_fine - r.lambda_coarse) / 3.0;
  return r;
}

SpectralEstimate pencil_constant(const Measure& m, std::size_t cells, const std::function<double(double)>& stiff,
                                 const std::function<double(double)>& mass) {
  if (cells < 16) throw BadParameter("spectral problems need at least 16 cells");
  std::vector<SectorResult> sectors;
  if (m.reduced_radial()) {
    sectors.push_back(solve_sector(m, cells, stiff, mass, 0.0, 1, "l=0"));
    sectors.push_back(solve_sector(m, cells, stiff, mass, m.dim() - 1.0, 0, "l=1"));
  } else {
    sectors.push_back(solve_sector(m, cells, stiff, mass, 0.0, 1, "line"));
  }
  const auto& best = *std::min_element(sectors.begin(), sectors.end(),
                                       [](const SectorResult& a, const SectorResult& b) { return a.lambda < b.lambda; });
  if (!(best.lambda > 0.0)) throw GridTooCoarse("extrapolated eigenvalue is not positive");
  const double rel = std::abs(best.lambda - best.lambda_fine) / best.lambda;
  if (rel > 0.01)
    throw GridTooCoarse("Richardson extrapolation moves the eigenvalue by " + num(100 * rel) + "% at " +
                        std::to_string(cells) + " cells");
  SpectralEstimate e;
  e.value = 1.0 / best.lambda;
  e.fine = 1.0 / best.lambda_fine;
  e.coarse = 1.0 / best.lambda_coarse;
  e.error = std::abs(e.value - e.fine);
  e.cells = cells;
  e.sector = best.name;
  return e;
}

// Integration of a test-function integrand against the measure, split at the breaks. Dense break
// sets (interpolated eigenvectors) use a Gauss rule per cell; sparse ones use adaptive quadrature.
class Pieces {
 public:
  Pieces(const Measure& m, std::vector<double> breaks) : m_(m) {
    for (double b : breaks)
      if (b > m.lo() && b < m.hi() && std::isfinite(b)) breaks_.push_back(b);
    std::sort(breaks_.begin(), breaks_.end());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
  }

  double integrate(const std::function<double(double)>& g) const {
    if (breaks_.empty()) return m_.integrate(g, m_.lo(), m_.hi());
    double s = m_.integrate(g, m_.lo(), breaks_.front()) + m_.integrate(g, breaks_.back(), m_.hi());
    const bool dense = breaks_.size() > 64;
    for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
      const double a = breaks_[i], b = breaks_[i + 1];
      if (dense) s += gauss([&](double t) { return g(t) * m_.density(t); }, a, b, 10);
      else s += m_.integrate(g, a, b);
    }
    return s;
  }

 private:
  const Measure& m_;
  std::vector<double> breaks_;
};

std::vector<double> osc_nodes(const Measure& m, const std::vector<double>& breaks) {
  auto nodes = spectral_grid(m, 2048);
  nodes.insert(nodes.end(), breaks.begin(), breaks.end());
  const double far = 1e6 * std::max(m.truncation_radius(), effective_scale(m));
  nodes.push_back(std::isfinite(m.lo()) ? m.lo() : -far);
  nodes.push_back(std::isfinite(m.hi()) ? m.hi() : far);
  return nodes;
}

double grid_osc(const Measure& m, const TestFunction& f) {
  double lo = kInf, hi = -kInf;
  for (double t : osc_nodes(m, f.breaks)) {
    if (t < m.lo() || t > m.hi()) continue;
    const double v = f.value(t);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

double xlogx(double y) { return y > 0.0 ? y * std::log(y) : 0.0; }

TestFunction ramp(double a, double b, bool absolute, std::string id) {
  const double w = b - a;
  TestFunction f;
  f.id = std::move(id);
  f.value = [a, w, absolute](double t) { return std::clamp(((absolute ? std::abs(t) : t) - a) / w, 0.0, 1.0); };
  f.grad = [a, b, w, absolute](double t) {
    const double u = absolute ? std::abs(t) : t;
    if (u <= a || u >= b) return 0.0;
    return (absolute && t < 0.0 ? -1.0 : 1.0) / w;
  };
  f.breaks = absolute ? std::vector<double>{-b, -a, a, b} : std::vector<double>{a, b};
  return f;
}

// Same-shaped pieces of a sweep: relative growth in the late part against the early part.
bool keeps_growing(const std::vector<double>& q) {
  const std::size_t n = q.size();
  if (n < 7) return false;
  const double last = q[n - 1];
  if (last < *std::max_element(q.begin(), q.end()) * (1 - 1e-12)) return false;
  const double late = q[n - 1] - q[n - 3], early = q[n - 5] - q[n - 7];
  return late > 1e-3 * last && late > 0.5 * early;
}

}  // namespace

std::vector<double> spectral_grid(const Measure& m, std::size_t cells) {
  std::vector<double> t(cells + 1);
  if (std::isfinite(m.lo()) && std::isfinite(m.hi())) {
    for (std::size_t i = 0; i <= cells; ++i) t[i] = m.lo() + (m.hi() - m.lo()) * double(i) / double(cells);
    return t;
  }
  const double R = m.truncation_radius(), s = effective_scale(m);
  const double a = std::isfinite(m.lo()) ? m.lo() : -R, b = std::isfinite(m.hi()) ? m.hi() : R;
  const double xa = std::asinh(a / s), xb = std::asinh(b / s);
  for (std::size_t i = 0; i <= cells; ++i) t[i] = s * std::sinh(xa + (xb - xa) * double(i) / double(cells));
  t.front() = a;
  t.back() = b;
  return t;
}

DiscretizedForm discretize(const std::vector<double>& t, const std::function<double(double)>& stiff_density,
                           const std::function<double(double)>& mass_density, double angular) {
  const std::size_t n = t.size();
  if (n < 3) throw BadParameter("discretization needs at least two cells");
  DiscretizedForm f;
  f.t = t;
  f.mass.assign(n, 0.0);
  f.diag.assign(n, 0.0);
  f.off.assign(n - 1, 0.0);
  f.pinned_origin = angular > 0.0 && t.front() == 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = t[i], b = t[i + 1], h = b - a;
    if (!(h > 0.0)) throw BadParameter("grid must be strictly increasing");
    const double k = gauss(stiff_density, a, b) / (h * h);
    f.diag[i] += k;
    f.diag[i + 1] += k;
    f.off[i] = -k;
    // Lumped mass and angular term: integrals against the two hat functions of the cell.
    f.mass[i] += gauss([&](double s) { return mass_density(s) * (b - s) / h; }, a, b);
    f.mass[i + 1] += gauss([&](double s) { return mass_density(s) * (s - a) / h; }, a, b);
    if (angular > 0.0) {
      f.diag[i] += angular * gauss([&](double s) { return stiff_density(s) * (b - s) / (h * s * s); }, a, b);
      f.diag[i + 1] += angular * gauss([&](double s) { return stiff_density(s) * (s - a) / (h * s * s); }, a, b);
    }
  }
  return f;
}

double pencil_eigenvalue(const DiscretizedForm& form, std::size_t k) { return kth_eigenvalue(symmetric_form(form), k); }

std::vector<double> pencil_eigenvector(const DiscretizedForm& form, double lambda) {
  const Tridiagonal T = symmetric_form(form);
  const std::size_t n = T.a.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 + 0.5 * std::sin(0.7 * double(i) + 0.3);
  const double sigma = lambda * (1.0 - 1e-10) - 1e-300;
  for (int it = 0; it < 4; ++it) {
    shifted_solve(T, sigma, y);
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : y) v /= norm;
  }
  std::vector<double> v(form.t.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i + T.offset] = y[i] * T.scale[i];
  // Sign convention: increasing at the right end.
  if (v.back() < v[v.size() / 2]) for (double& x : v) x = -x;
  return v;
}

SpectralEstimate spectral_constant(const Measure& m, const Weight& w, std::size_t cells) {
  return pencil_constant(
      m, cells, [&](double t) { return m.density(t) * w.omega2(t); }, [&](double t) { return m.density(t); });
}

SpectralEstimate converse_quotient(const Measure& m, const Weight& w, std::size_t cells) {
  return pencil_constant(
      m, cells, [&](double t) { return m.density(t); }, [&](double t) { return m.density(t) / w.omega2(t); });
}

TestFunction constant_function(double c) {
  return TestFunction{"constant(" + num(c) + ")", [c](double) { return c; }, [](double) { return 0.0; }, {}};
}

std::vector<TestFunction> threshold_family(const Measure& m) {
  std::vector<TestFunction> out;
  const double s = effective_scale(m);
  std::vector<double> radii;
  for (double p : {0.5, 0.3, 0.1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6}) radii.push_back(m.tail_inverse(p));
  if (!m.reduced_radial()) radii.push_back(0.0);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  const bool bounded = std::isfinite(m.lo()) && std::isfinite(m.hi());
  for (double r : radii) {
    for (double rel : {0.05, 0.25, 1.0, 4.0}) {
      const double delta = rel * std::max(r, 0.25 * s);
      const double a = bounded ? m.lo() + r : r;
      if (a >= m.hi()) continue;
      out.push_back(ramp(a, a + delta, false, "threshold(r=" + num(a) + ",delta=" + num(delta) + ")"));
      if (!m.reduced_radial() && !bounded && r > 0.0)
        out.push_back(ramp(r, r + delta, true, "threshold(|x|>" + num(r) + ",delta=" + num(delta) + ")"));
    }
  }
  return out;
}

std::vector<TestFunction> arctan_family(const Measure& m) {
  std::vector<TestFunction> out;
  const double s = effective_scale(m);
  const double c = std::isfinite(m.lo()) && std::isfinite(m.hi()) ? 0.5 * (m.lo() + m.hi()) : 0.0;
  for (double rel : {0.1, 0.3, 1.0, 3.0, 10.0, 100.0, 1e3}) {
    const double lam = rel * s;
    TestFunction f;
    f.id = "arctan(x/" + num(lam) + ")";
    f.value = [c, lam](double t) { return std::atan((t - c) / lam); };
    f.grad = [c, lam](double t) {
      const double u = (t - c) / lam;
      return 1.0 / (lam * (1.0 + u * u));
    };
    f.breaks = {c};
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<TestFunction> eigenvector_family(const Measure& m, const Weight& w, std::size_t count, std::size_t cells) {
  const auto grid = spectral_grid(m, cells);
  const auto form = discretize(
      grid, [&](double t) { return m.density(t) * w.omega2(t); }, [&](double t) { return m.density(t); });
  std::vector<TestFunction> out;
  for (std::size_t k = 1; k <= count; ++k) {
    const double lambda = pencil_eigenvalue(form, k);
    auto v = std::make_shared<const std::vector<double>>(pencil_eigenvector(form, lambda));
    auto t = std::make_shared<const std::vector<double>>(grid);
    TestFunction f;
    f.id = "eigenvector(" + std::to_string(k) + ")";
    f.value = [t, v](double x) {
      if (x <= t->front()) return v->front();
      if (x >= t->back()) return v->back();
      const std::size_t i = std::upper_bound(t->begin(), t->end(), x) - t->begin() - 1;
      const double u = (x - (*t)[i]) / ((*t)[i + 1] - (*t)[i]);
      return (*v)[i] + u * ((*v)[i + 1] - (*v)[i]);
    };
    f.grad = [t, v](double x) {
      if (x <= t->front() || x >= t->back()) return 0.0;
      const std::size_t i = std::upper_bound(t->begin(), t->end(), x) - t->begin() - 1;
      return ((*v)[i + 1] - (*v)[i]) / ((*t)[i + 1] - (*t)[i]);
    };
    f.breaks = grid;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<TestFunction> adversarial_family(const Measure& m) {
  auto out = threshold_family(m);
  for (auto& f : arctan_family(m)) out.push_back(std::move(f));
  for (auto& f : eigenvector_family(m)) out.push_back(std::move(f));
  return out;
}

FunctionStats function_stats(const Measure& m, const TestFunction& f, const Weight& w) {
  FunctionStats st;
  st.osc = grid_osc(m, f);
  const Pieces P(m, f.breaks);
  st.dirichlet = P.integrate([&](double t) {
    const double g = f.grad(t);
    return g * g;
  });
  st.weighted_dirichlet = w.is_unit() ? st.dirichlet : P.integrate([&](double t) {
    const double g = f.grad(t);
    return g * g * w.omega2(t);
  });
  st.mean = P.integrate(f.value);
  st.second_moment = P.integrate([&](double t) {
    const double v = f.value(t);
    return v * v;
  });
  if (st.osc == 0.0) return st;  // constant on the nodes: Var = Ent = 0
  st.var = P.integrate([&](double t) {
    const double v = f.value(t) - st.mean;
    return v * v;
  });
  const double flogf = P.integrate([&](double t) {
    const double v = f.value(t);
    return xlogx(v * v);
  });
  st.entropy = std::max(0.0, flogf - xlogx(st.second_moment));
  return st;
}

double centered_lp_norm(const Measure& m, const TestFunction& f, double p) {
  if (!(p >= 1.0)) throw BadParameter("L^p norm needs p >= 1");
  const Pieces P(m, f.breaks);
  const double mean = P.integrate(f.value);
  if (std::isinf(p)) {
    double s = 0.0;
    for (double t : osc_nodes(m, f.breaks))
      if (t >= m.lo() && t <= m.hi()) s = std::max(s, std::abs(f.value(t) - mean));
    return s;
  }
  return std::pow(P.integrate([&](double t) { return std::pow(std::abs(f.value(t) - mean), p); }), 1.0 / p);
}

double converse_lhs(const Measure& m, const TestFunction& f, const Weight& w) {
  const Pieces P(m, f.breaks);
  const double z = P.integrate([&](double t) { return 1.0 / w.omega2(t); });
  if (!(z > 0.0) || !std::isfinite(z)) throw WeightNotIntegrable("1/omega^2 is not integrable");
  if (grid_osc(m, f) == 0.0) return 0.0;
  const double a = P.integrate([&](double t) { return f.value(t) / w.omega2(t); }) / z;
  return P.integrate([&](double t) {
    const double v = f.value(t) - a;
    return v * v / w.omega2(t);
  });
}

std::string to_string(InequalityKind k) {
  switch (k) {
    case InequalityKind::weak_poincare: return "weak_poincare";
    case InequalityKind::p_weak_poincare: return "p_weak_poincare";
    case InequalityKind::weak_log_sobolev: return "weak_log_sobolev";
    case InequalityKind::weighted_poincare: return "weighted_poincare";
    case InequalityKind::converse_poincare: return "converse_poincare";
    case InequalityKind::weighted_log_sobolev: return "weighted_log_sobolev";
  }
  return "unknown";
}

InequalityKind inequality_kind_from_string(const std::string& s) {
  for (auto k : {InequalityKind::weak_poincare, InequalityKind::p_weak_poincare, InequalityKind::weak_log_sobolev,
                 InequalityKind::weighted_poincare, InequalityKind::converse_poincare,
                 InequalityKind::weighted_log_sobolev})
    if (to_string(k) == s) return k;
  throw BadParameter("unknown inequality '" + s + "'");
}

InequalityReport make_report(InequalityKind kind, std::string id, std::optional<double> s, double lhs, double rhs,
                             double tol) {
  InequalityReport r;
  r.kind = kind;
  r.test_id = std::move(id);
  r.s = s;
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.pass = r.margin >= -tol * std::max(std::abs(lhs), std::abs(rhs));
  return r;
}

std::vector<double> default_s_grid() { return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}; }

namespace {

std::vector<FunctionStats> all_stats(const Measure& m, const std::vector<TestFunction>& family,
                                     const Weight& w = Weight::unit()) {
  std::vector<FunctionStats> st(family.size());
  parallel_for(family.size(), [&](std::size_t i) { st[i] = function_stats(m, family[i], w); });
  return st;
}

}  // namespace

std::vector<InequalityReport> verify_weak_poincare(const Measure& m, const RateFunction& beta,
                                                   const std::vector<double>& s_grid,
                                                   const std::vector<TestFunction>& family) {
  const auto st = all_stats(m, family);
  std::vector<InequalityReport> out;
  for (std::size_t i = 0; i < family.size(); ++i)
    for (double s : s_grid)
      out.push_back(make_report(InequalityKind::weak_poincare, family[i].id, s, st[i].var,
                                beta(s) * st[i].dirichlet + s * st[i].osc * st[i].osc));
  return out;
}

std::vector<InequalityReport> verify_p_weak_poincare(const Measure& m, const RateFunction& beta, double p,
                                                     const std::vector<double>& s_grid,
                                                     const std::vector<TestFunction>& family) {
  const RateFunction beta_p = p_weak_rate(beta, p);
  const auto st = all_stats(m, family);
  std::vector<double> norms(family.size());
  parallel_for(family.size(), [&](std::size_t i) { norms[i] = centered_lp_norm(m, family[i], p); });
  std::vector<InequalityReport> out;
  for (std::size_t i = 0; i < family.size(); ++i)
    for (double s : s_grid)
      out.push_back(make_report(InequalityKind::p_weak_poincare, family[i].id, s, st[i].var,
                                beta_p(s) * st[i].dirichlet + s * norms[i] * norms[i]));
  return out;
}

std::vector<InequalityReport> verify_weak_log_sobolev(const Measure& m, const RateFunction& beta_ls,
                                                      const std::vector<double>& s_grid,
                                                      const std::vector<TestFunction>& family) {
  const auto st = all_stats(m, family);
  std::vector<InequalityReport> out;
  for (std::size_t i = 0; i < family.size(); ++i)
    for (double s : s_grid)
      out.push_back(make_report(InequalityKind::weak_log_sobolev, family[i].id, s, st[i].entropy,
                                beta_ls(s) * st[i].dirichlet + s * st[i].osc * st[i].osc));
  return out;
}

std::vector<InequalityReport> verify_weighted(const Measure& m, const WeightedConstant& c,
                                              const std::vector<TestFunction>& family) {
  std::vector<InequalityReport> out(family.size());
  parallel_for(family.size(), [&](std::size_t i) {
    const auto& f = family[i];
    switch (c.kind) {
      case ConstantKind::direct: {
        const auto st = function_stats(m, f, c.weight);
        out[i] = make_report(InequalityKind::weighted_poincare, f.id, std::nullopt, st.var, c.value * st.weighted_dirichlet);
        break;
      }
      case ConstantKind::converse: {
        const auto st = function_stats(m, f);
        out[i] = make_report(InequalityKind::converse_poincare, f.id, std::nullopt, converse_lhs(m, f, c.weight),
                             c.value * st.dirichlet);
        break;
      }
      case ConstantKind::log_sobolev: {
        const auto st = function_stats(m, f, c.weight);
        out[i] = make_report(InequalityKind::weighted_log_sobolev, f.id, std::nullopt, st.entropy,
                             c.value * st.weighted_dirichlet);
        break;
      }
    }
  });
  return out;
}

std::vector<double> empirical_rate(const Measure& m, const std::vector<double>& s_grid,
                                   const std::vector<TestFunction>& family) {
  const auto st = all_stats(m, family);
  std::vector<double> out;
  for (double s : s_grid) {
    double best = 0.0;
    for (const auto& x : st)
      if (x.dirichlet > 0.0) best = std::max(best, (x.var - s * x.osc * x.osc) / x.dirichlet);
    out.push_back(best);
  }
  return out;
}

double empirical_rate(const Measure& m, double s, const std::vector<TestFunction>& family) {
  return empirical_rate(m, std::vector<double>{s}, family).front();
}

std::vector<ReportSummary> summarize(const std::vector<InequalityReport>& reports) {
  std::map<InequalityKind, ReportSummary> by_kind;
  for (const auto& r : reports) {
    auto [it, fresh] = by_kind.try_emplace(r.kind);
    auto& s = it->second;
    if (fresh) {
      s.kind = r.kind;
      s.worst_margin = kInf;
    }
    (r.pass ? s.passes : s.failures)++;
    const double scale = std::max({std::abs(r.lhs), std::abs(r.rhs), std::numeric_limits<double>::min()});
    s.worst_margin = std::min(s.worst_margin, r.margin / scale);
  }
  std::vector<ReportSummary> out;
  for (auto& [k, s] : by_kind) out.push_back(s);
  return out;
}

CapacitySet CapacitySet::outside(const Measure& m, double r, double x0) {
  if (!(r >= 0.0)) throw BadParameter("capacity radius must be non-negative");
  CapacitySet A;
  A.label = "|x-" + num(x0) + "|>" + num(r);
  if (m.reduced_radial()) {
    if (x0 != 0.0) throw Unsupported("radial capacity sets must be centred at the origin");
    if (r < m.hi()) A.pieces.push_back({r, m.hi()});
    return A;
  }
  if (x0 - r > m.lo()) A.pieces.push_back({m.lo(), x0 - r});
  if (x0 + r < m.hi()) A.pieces.push_back({x0 + r, m.hi()});
  return A;
}

CapacitySet CapacitySet::interval(double a, double b) {
  if (!(a < b)) throw BadParameter("capacity interval needs a < b");
  return CapacitySet{{{a, b}}, "[" + num(a) + "," + num(b) + "]"};
}

namespace {

// Cumulative mass and resistance int dt / rho across one gap of the complement of A.
class GapTable {
 public:
  GapTable(const Measure& m, double lo, double hi, bool left_is_A, bool right_is_A, std::size_t cells)
      : left_is_A_(left_is_A), right_is_A_(right_is_A) {
    const double R = m.truncation_radius(), s = effective_scale(m);
    const double a = std::isfinite(lo) ? lo : std::min(-R, hi - R);
    const double b = std::isfinite(hi) ? hi : std::max(R, lo + R);
    t_.resize(cells + 1);
    if (std::isfinite(m.lo()) && std::isfinite(m.hi())) {
      for (std::size_t i = 0; i <= cells; ++i) t_[i] = a + (b - a) * double(i) / double(cells);
    } else {
      const double xa = std::asinh(a / s), xb = std::asinh(b / s);
      for (std::size_t i = 0; i <= cells; ++i) t_[i] = s * std::sinh(xa + (xb - xa) * double(i) / double(cells));
    }
    t_.front() = a;
    t_.back() = b;
    const std::size_t n = t_.size();
    mass_.assign(n, 0.0);
    res_left_.assign(n, 0.0);
    res_right_.assign(n, 0.0);
    mass_[0] = lo < a ? m.mass(lo, a) : 0.0;
    std::vector<double> cell_res(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      mass_[i + 1] = mass_[i] + gauss([&](double x) { return m.density(x); }, t_[i], t_[i + 1], 10);
      cell_res[i] = gauss([&](double x) { return 1.0 / m.density(x); }, t_[i], t_[i + 1], 10);
    }
    total_mass_ = mass_.back() + (b < hi ? m.mass(b, hi) : 0.0);
    for (std::size_t i = 1; i < n; ++i) res_left_[i] = res_left_[i - 1] + cell_res[i - 1];
    for (std::size_t i = n - 1; i-- > 0;) res_right_[i] = res_right_[i + 1] + cell_res[i];
  }

  double total_mass() const { return total_mass_; }

  // Least energy of a zero set of mass z inside the gap.
  double cost(double z) const {
    if (z <= 0.0) return 0.0;
    if (z > total_mass_ * (1 + 1e-12)) return kInf;
    if (!left_is_A_ && !right_is_A_) return 0.0;
    if (!left_is_A_) return 1.0 / right_resistance(position(z));
    if (!right_is_A_) return 1.0 / left_resistance(position(total_mass_ - z));
    // Zero set [u, v] with mass z: scan u over the nodes, then refine the best bracket.
    auto energy = [&](double u) {
      const double v = position(cumulative(u) + z);
      return 1.0 / left_resistance(u) + 1.0 / right_resistance(v);
    };
    const double u_max = position(total_mass_ - z);
    double best = kInf, arg = t_.front();
    for (double u : t_) {
      if (u > u_max) break;
      const double e = energy(u);
      if (e < best) best = e, arg = u;
    }
    const std::size_t i = std::lower_bound(t_.begin(), t_.end(), arg) - t_.begin();
    double a = t_[i > 0 ? i - 1 : 0], b = std::min(t_[std::min(i + 1, t_.size() - 1)], u_max);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60 && b > a; ++it) {
      const double c = b - g * (b - a), d = a + g * (b - a);
      if (energy(c) < energy(d)) b = d;
      else a = c;
    }
    return std::min(best, energy(0.5 * (a + b)));
  }

 private:
  std::size_t cell(double x) const {
    const std::size_t i = std::upper_bound(t_.begin(), t_.end(), x) - t_.begin();
    return std::min(i > 0 ? i - 1 : 0, t_.size() - 2);
  }
  double interp(const std::vector<double>& y, double x) const {
    x = std::clamp(x, t_.front(), t_.back());
    const std::size_t i = cell(x);
    const double u = (x - t_[i]) / (t_[i + 1] - t_[i]);
    return y[i] + u * (y[i + 1] - y[i]);
  }
  double cumulative(double x) const { return interp(mass_, x); }
  double left_resistance(double x) const { return interp(res_left_, x); }
  double right_resistance(double x) const { return interp(res_right_, x); }
  // Point where the cumulative mass reaches z.
  double position(double z) const {
    if (z <= mass_.front()) return t_.front();
    if (z >= mass_.back()) return t_.back();
    const std::size_t i = std::upper_bound(mass_.begin(), mass_.end(), z) - mass_.begin() - 1;
    const double dm = mass_[i + 1] - mass_[i];
    return dm > 0.0 ? t_[i] + (z - mass_[i]) / dm * (t_[i + 1] - t_[i]) : t_[i];
  }

  bool left_is_A_, right_is_A_;
  std::vector<double> t_, mass_, res_left_, res_right_;
  double total_mass_ = 0.0;
};

double capacity_on_grid(const Measure& m, const std::vector<Interval>& A, std::size_t cells) {
  std::vector<GapTable> gaps;
  double cursor = m.lo();
  bool after_A = false;
  for (const auto& p : A) {
    if (p.lo > cursor) gaps.emplace_back(m, cursor, p.lo, after_A, true, cells);
    cursor = p.hi;
    after_A = true;
  }
  if (cursor < m.hi()) gaps.emplace_back(m, cursor, m.hi(), after_A, false, cells);
  if (gaps.size() == 1) return gaps.front().cost(0.5);
  // Split the half mass of the zero set across the gaps on a uniform mass grid.
  constexpr int K = 400;
  std::vector<double> best(K + 1, kInf);
  best[0] = 0.0;
  for (const auto& g : gaps) {
    std::vector<double> c(K + 1);
    for (int k = 0; k <= K; ++k) c[k] = g.cost(0.5 * k / K);
    std::vector<double> next(K + 1, kInf);
    for (int k = 0; k <= K; ++k)
      for (int j = 0; j <= k; ++j) next[k] = std::min(next[k], best[k - j] + c[j]);
    best = std::move(next);
  }
  return best[K];
}

}  // namespace

CapacityEstimate estimate_capacity(const Measure& m, const CapacitySet& A, std::size_t cells) {
  if (A.pieces.empty()) throw BadParameter("capacity of the empty set");
  std::vector<Interval> pieces = A.pieces;
  std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  CapacityEstimate e;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    pieces[i].lo = std::max(pieces[i].lo, m.lo());
    pieces[i].hi = std::min(pieces[i].hi, m.hi());
    if (!(pieces[i].lo < pieces[i].hi)) throw BadParameter("capacity set piece outside the support");
    if (i > 0 && pieces[i].lo <= pieces[i - 1].hi) throw BadParameter("capacity set pieces must be disjoint");
    e.set_mass += m.mass(pieces[i].lo, pieces[i].hi);
  }
  if (e.set_mass > 0.5 + 1e-12) throw Infeasible("mu(A) = " + num(e.set_mass) + " exceeds 1/2");
  e.value = capacity_on_grid(m, pieces, cells);
  e.refined = capacity_on_grid(m, pieces, 2 * cells);
  e.rel_change = std::abs(e.refined - e.value) / std::max(e.refined, std::numeric_limits<double>::min());
  return e;
}

EntropyQuotient entropy_quotient(const Measure& m, const Weight& w) {
  const double s = effective_scale(m), R = m.truncation_radius();
  const bool radial = m.reduced_radial();
  std::vector<TestFunction> family;

  // Exponential tilts exp(lambda clamp(t) / 2).
  for (double cap : {s, 3 * s, 10 * s, R}) {
    for (double lam : {0.25, 0.5, 1.0, 2.0, -0.5, -1.0}) {
      if (radial && lam < 0) continue;
      if (std::abs(lam) * cap > 100.0) continue;
      const double lo = radial ? 0.0 : -cap;
      TestFunction f;
      f.id = "tilt(lambda=" + num(lam) + ",cap=" + num(cap) + ")";
      f.value = [lam, lo, cap](double t) { return std::exp(0.5 * lam * std::clamp(t, lo, cap)); };
      f.grad = [lam, lo, cap](double t) {
        return t > lo && t < cap ? 0.5 * lam * std::exp(0.5 * lam * t) : 0.0;
      };
      f.breaks = {lo, cap};
      family.push_back(std::move(f));
    }
  }
  // Eigenvector seeds 1 + eps v.
  for (const auto& v : eigenvector_family(m, w, 1)) {
    const double osc = grid_osc(m, v);
    for (double eps : {1e-2, 0.1, 0.5}) {
      TestFunction f;
      f.id = "seed(" + v.id + ",eps=" + num(eps) + ")";
      const double k = eps / osc;
      f.value = [k, g = v.value](double t) { return 1.0 + k * g(t); };
      f.grad = [k, g = v.grad](double t) { return k * g(t); };
      f.breaks = v.breaks;
      family.push_back(std::move(f));
    }
  }
  // Far thresholds clamp((|t| - r)/r, 0, 1), swept outwards.
  EntropyQuotient q;
  std::vector<TestFunction> sweep;
  const double r0 = std::max(m.median_abs(), 1e-3 * s);
  for (int k = 0; k <= 24; ++k) {
    const double r = r0 * std::pow(10.0, 0.25 * k);
    if (std::isfinite(m.hi()) && 2 * r >= m.hi()) break;
    if (m.tail(r) < 1e-40) break;
    q.sweep_r.push_back(r);
    sweep.push_back(ramp(r, 2 * r, !radial, "far_threshold(r=" + num(r) + ")"));
  }

  auto quotient = [&](const TestFunction& f) {
    const auto st = function_stats(m, f, w);
    return st.weighted_dirichlet > 0.0 ? st.entropy / st.weighted_dirichlet : 0.0;
  };
  std::vector<double> qf(family.size()), qs(sweep.size());
  parallel_for(family.size(), [&](std::size_t i) { qf[i] = quotient(family[i]); });
  parallel_for(sweep.size(), [&](std::size_t i) { qs[i] = quotient(sweep[i]); });
  q.sweep = qs;
  for (std::size_t i = 0; i < family.size(); ++i)
    if (qf[i] > q.value) q.value = qf[i], q.argmax = family[i].id;
  for (std::size_t i = 0; i < sweep.size(); ++i)
    if (qs[i] > q.value) q.value = qs[i], q.argmax = sweep[i].id;
  q.unbounded_trend = keeps_growing(qs);
  return q;
}

}  // namespace fiq
