#include <fiq/errors.hpp>
#include <fiq/measures.hpp>
#include <fiq/quadrature.hpp>
#include <fiq/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>

namespace fiq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

struct Measure::Impl {
  Family family = Family::custom;
  int dim = 1;
  bool radial = false;
  bool heavy = false;
  double lo = -kInf;
  double hi = kInf;
  double scale = 1.0;
  std::map<std::string, double> params;
  Field V;
  std::function<double(double)> raw_density;  // overrides exp(-V) when set
  double log_z = 0.0;
  std::vector<Measure> parts;
  Potential U;
  double u_log_mass = 0.0;
  std::string label;

  mutable std::once_flag cdf_once;
  mutable std::vector<double> cdf_theta;
  mutable std::vector<double> cdf_values;
  mutable std::once_flag truncation_once;
  mutable double truncation = 0.0;

  double unnormalized(double t) const {
    double j = 1.0;
    if (dim >= 2) j = sphere_area(dim) * std::pow(t, dim - 1);
    if (raw_density) return j * raw_density(t);
    const double v = V(t);
    return j * std::exp(-v);
  }

  double integrate_raw(const std::function<double(double)>& g, double a, double b) const {
    a = std::max(a, lo);
    b = std::min(b, hi);
    if (!(a < b)) return 0.0;
    auto f = [&](double t) {
      const double w = unnormalized(t);
      return w == 0.0 ? 0.0 : w * g(t);
    };
    return fiq::integrate(f, a, b, scale);
  }

  void finalize() {
    const double z = integrate_raw([](double) { return 1.0; }, lo, hi);
    if (!std::isfinite(z) || !(z > 0.0)) throw NonIntegrable("density of " + label + " is not integrable");
    log_z = std::log(z);
  }

  void build_cdf() const {
    const int m = 8192;
    const double ta = std::atan(lo / scale), tb = std::atan(hi / scale);
    const auto& rule = gauss_legendre(10);
    cdf_theta.resize(m + 1);
    cdf_values.assign(m + 1, 0.0);
    for (int j = 0; j <= m; ++j) cdf_theta[j] = ta + (tb - ta) * j / m;
    for (int j = 0; j < m; ++j) {
      const double a = cdf_theta[j], b = cdf_theta[j + 1];
      const double h = 0.5 * (b - a), c = 0.5 * (a + b);
      double s = 0.0;
      for (int i = 0; i < 10; ++i) {
        const double th = c + h * rule.nodes[i];
        const double cs = std::cos(th);
        s += rule.weights[i] * unnormalized(scale * std::tan(th)) * scale / (cs * cs);
      }
      cdf_values[j + 1] = cdf_values[j] + s * h;
    }
    const double total = cdf_values[m];
    for (auto& v : cdf_values) v /= total;
  }
};

std::string to_string(Family f) {
  switch (f) {
    case Family::cauchy: return "cauchy";
    case Family::subbotin: return "subbotin";
    case Family::gaussian: return "gaussian";
    case Family::uniform: return "uniform";
    case Family::custom: return "custom";
    case Family::perturbed: return "perturbed";
    case Family::convolution: return "convolution";
    case Family::product: return "product";
  }
  return "unknown";
}

double sphere_area(int d) { return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d); }

Measure Measure::cauchy(double alpha, int d) {
  if (d < 1) throw BadParameter("dimension must be positive");
  if (!(alpha > 0.0)) throw NonIntegrable("cauchy requires alpha > 0");
  auto m = std::make_shared<Impl>();
  m->family = Family::cauchy;
  m->dim = d;
  m->radial = true;
  m->heavy = true;
  m->lo = d >= 2 ? 0.0 : -kInf;
  m->params = {{"alpha", alpha}, {"d", double(d)}};
  const double e = 0.5 * (alpha + d);
  m->V = Field([e](const Dual& t) { return Dual(e) * log(Dual(1.0) + t * t); }, num(e) + "*ln(1+x^2)");
  m->label = "cauchy(alpha=" + num(alpha) + ", d=" + std::to_string(d) + ")";
  m->finalize();
  return Measure(m);
}

Measure Measure::subbotin(double alpha, int d) {
  if (d < 1) throw BadParameter("dimension must be positive");
  if (!(alpha > 0.0)) throw NonIntegrable("subbotin requires alpha > 0");
  auto m = std::make_shared<Impl>();
  m->family = Family::subbotin;
  m->dim = d;
  m->radial = true;
  m->lo = d >= 2 ? 0.0 : -kInf;
  m->params = {{"alpha", alpha}, {"d", double(d)}};
  m->V = Field([alpha](const Dual& t) { return pow(abs(t), alpha); }, "|x|^" + num(alpha));
  m->label = "subbotin(alpha=" + num(alpha) + ", d=" + std::to_string(d) + ")";
  m->finalize();
  return Measure(m);
}

Measure Measure::gaussian(int d) {
  if (d < 1) throw BadParameter("dimension must be positive");
  auto m = std::make_shared<Impl>();
  m->family = Family::gaussian;
  m->dim = d;
  m->radial = true;
  m->lo = d >= 2 ? 0.0 : -kInf;
  m->params = {{"d", double(d)}};
  m->V = Field([](const Dual& t) { return Dual(0.5) * t * t; }, "x^2/2");
  m->label = "gaussian(d=" + std::to_string(d) + ")";
  m->finalize();
  return Measure(m);
}

Measure Measure::uniform(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw NonIntegrable("uniform requires a finite interval a < b");
  auto m = std::make_shared<Impl>();
  m->family = Family::uniform;
  m->lo = a;
  m->hi = b;
  m->radial = (a == -b);
  m->scale = std::max(std::abs(a), std::abs(b));
  m->params = {{"a", a}, {"b", b}};
  m->V = Field::constant(0.0);
  m->label = "uniform(" + num(a) + ", " + num(b) + ")";
  m->finalize();
  return Measure(m);
}

Measure Measure::custom(Potential V, int d, bool heavy_tailed) {
  if (d < 1) throw BadParameter("dimension must be positive");
  auto m = std::make_shared<Impl>();
  m->family = Family::custom;
  m->dim = d;
  m->radial = d >= 2;
  m->heavy = heavy_tailed;
  m->lo = d >= 2 ? 0.0 : -kInf;
  m->params = {{"d", double(d)}};
  m->V = V.field();
  m->label = "custom(V=" + V.label() + ")";
  m->finalize();
  return Measure(m);
}

Measure Measure::perturbed(const Measure& base, Potential U) {
  if (base.family() == Family::product) throw Unsupported("perturbation of product measures");
  auto m = std::make_shared<Impl>();
  const auto& b = *base.impl_;
  m->family = Family::perturbed;
  m->dim = b.dim;
  m->radial = false;
  m->heavy = b.heavy;
  m->lo = b.lo;
  m->hi = b.hi;
  m->scale = b.scale;
  m->params = b.params;
  m->parts = {base};
  m->U = U;
  if (b.raw_density) {
    auto raw = b.raw_density;
    auto uf = U.field();
    m->raw_density = [raw, uf](double t) { return raw(t) * std::exp(-uf(t)); };
    m->V = Field::values_only([raw, uf](double t) { return -std::log(raw(t)) + uf(t); }, "convolution+U");
  } else {
    m->V = b.V + U.field();
  }
  m->label = "perturbed(" + b.label + ", U=" + U.label() + ")";
  m->finalize();
  m->u_log_mass = U.is_constant() ? -*U.field().constant_value() : m->log_z - b.log_z;
  return Measure(m);
}

Measure Measure::convolution(const Measure& a, const Measure& b) {
  if (a.dim() != 1 || b.dim() != 1) throw Unsupported("convolution is implemented on the line only");
  auto m = std::make_shared<Impl>();
  m->family = Family::convolution;
  m->heavy = a.heavy_tailed() || b.heavy_tailed();
  m->parts = {a, b};
  m->label = "convolution(" + a.describe() + ", " + b.describe() + ")";
  Measure ma = a, mb = b;
  // Split at x/2 and integrate each half in the variable centred on its own peak (y = 0 or y = x),
  // so both peaks stay resolved however far apart they are.
  m->raw_density = [ma, mb](double x) {
    const double h = 0.5 * x;
    auto g1 = [&](double y) { return ma.density(y) * mb.density(x - y); };
    auto g2 = [&](double z) { return mb.density(z) * ma.density(x - z); };
    if (x >= 0.0) return fiq::integrate(g1, -kInf, h) + fiq::integrate(g2, -kInf, h);
    return fiq::integrate(g1, h, kInf) + fiq::integrate(g2, h, kInf);
  };
  auto raw = m->raw_density;
  m->V = Field::values_only([raw](double x) { return -std::log(raw(x)); }, "-ln(p1*p2)");
  m->finalize();
  return Measure(m);
}

Measure Measure::product(std::vector<Measure> factors) {
  if (factors.empty()) throw BadParameter("product of no factors");
  auto m = std::make_shared<Impl>();
  m->family = Family::product;
  m->dim = 0;
  for (const auto& f : factors) {
    m->dim += f.dim();
    m->heavy = m->heavy || f.heavy_tailed();
  }
  m->label = "product(";
  for (std::size_t i = 0; i < factors.size(); ++i) m->label += (i ? ", " : "") + factors[i].describe();
  m->label += ")";
  m->parts = std::move(factors);
  return Measure(m);
}

Family Measure::family() const { return impl_->family; }
int Measure::dim() const { return impl_->dim; }
bool Measure::radial() const { return impl_->radial; }
const std::map<std::string, double>& Measure::params() const { return impl_->params; }
std::string Measure::describe() const { return impl_->label; }
bool Measure::heavy_tailed() const { return impl_->heavy; }
double Measure::lo() const { return impl_->lo; }
double Measure::hi() const { return impl_->hi; }
double Measure::scale() const { return impl_->scale; }
const Field& Measure::potential() const { return impl_->V; }
const std::vector<Measure>& Measure::factors() const { return impl_->parts; }
const Potential& Measure::perturbation() const { return impl_->U; }
double Measure::perturbation_log_mass() const { return impl_->u_log_mass; }

double Measure::alpha() const {
  auto it = impl_->params.find("alpha");
  if (it == impl_->params.end()) throw BadParameter(describe() + " has no alpha parameter");
  return it->second;
}

const Measure& Measure::base() const {
  if (impl_->family != Family::perturbed) throw BadParameter(describe() + " is not a perturbed measure");
  return impl_->parts.front();
}

namespace {
void require_numeric(const Measure::Impl& m) {
  if (m.family == Family::product) throw Unsupported("numerical services are not available for non-radial product measures");
}
}  // namespace

double Measure::jacobian(double t) const { return impl_->dim >= 2 ? sphere_area(impl_->dim) * std::pow(t, impl_->dim - 1) : 1.0; }

double Measure::normalizer() const {
  require_numeric(*impl_);
  return std::exp(impl_->log_z);
}

double Measure::density(double t) const {
  require_numeric(*impl_);
  if (t < impl_->lo || t > impl_->hi) return 0.0;
  return impl_->unnormalized(t) * std::exp(-impl_->log_z);
}

double Measure::integrate(const std::function<double(double)>& g, double a, double b) const {
  require_numeric(*impl_);
  if (a > b) return -integrate(g, b, a);
  double total = 0.0;
  if (a < 0.0 && b > 0.0) total = impl_->integrate_raw(g, a, 0.0) + impl_->integrate_raw(g, 0.0, b);
  else total = impl_->integrate_raw(g, a, b);
  return total * std::exp(-impl_->log_z);
}

double Measure::expect(const std::function<double(double)>& g) const { return integrate(g, impl_->lo, impl_->hi); }

double Measure::mass(double a, double b) const {
  return integrate([](double) { return 1.0; }, a, b);
}

double Measure::mass_of(const std::vector<Interval>& set) const {
  double s = 0.0;
  for (const auto& iv : set) s += mass(iv.lo, iv.hi);
  return std::clamp(s, 0.0, 1.0);
}

double Measure::level_mass(const Field& q, double y) const {
  require_numeric(*impl_);
  return mass_of(sublevel_set(q, y, reduced_radial(), impl_->lo, impl_->hi));
}

double Measure::tail(double r, double x0) const {
  require_numeric(*impl_);
  if (r < 0.0) throw BadParameter("tail radius must be non-negative");
  if (r == 0.0) return 1.0;
  if (reduced_radial()) {
    if (x0 != 0.0) throw Unsupported("off-center tails of radial measures in d >= 2");
    return std::clamp(mass(r, impl_->hi), 0.0, 1.0);
  }
  double s = 0.0;
  if (x0 - r > impl_->lo) s += mass(impl_->lo, x0 - r);
  if (x0 + r < impl_->hi) s += mass(x0 + r, impl_->hi);
  return std::clamp(s, 0.0, 1.0);
}

double Measure::tail_inverse(double s, double x0) const {
  if (s >= 1.0) return 0.0;
  if (!(s > 0.0)) throw BadParameter("tail level must be positive");
  double a = 0.0, b = 1.0;
  while (tail(b, x0) > s) {
    a = b;
    b *= 2.0;
    if (b > 1e300) throw NonIntegrable("tail does not decay");
  }
  for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
    const double m = 0.5 * (a + b);
    if (tail(m, x0) > s) a = m;
    else b = m;
  }
  return b;
}

double Measure::median_abs() const { return tail_inverse(0.5); }

double Measure::truncation_radius() const {
  require_numeric(*impl_);
  if (std::isfinite(impl_->hi) && std::isfinite(impl_->lo)) return std::max(std::abs(impl_->lo), std::abs(impl_->hi));
  std::call_once(impl_->truncation_once,
                 [this] { impl_->truncation = tail_inverse(impl_->heavy ? 1e-8 : 1e-10); });
  return impl_->truncation;
}

double Measure::cdf(double t) const {
  require_numeric(*impl_);
  if (t <= impl_->lo) return 0.0;
  if (t >= impl_->hi) return 1.0;
  return std::clamp(mass(impl_->lo, t), 0.0, 1.0);
}

std::vector<double> Measure::sample_reduced(std::size_t n, std::uint64_t seed) const {
  require_numeric(*impl_);
  const auto& m = *impl_;
  std::call_once(m.cdf_once, [&] { m.build_cdf(); });
  CounterRng rng(seed, 0);
  std::vector<double> out(n);
  const auto& F = m.cdf_values;
  const auto& th = m.cdf_theta;
  for (auto& x : out) {
    const double u = rng.uniform();
    auto it = std::upper_bound(F.begin(), F.end(), u);
    std::size_t j = std::clamp<std::size_t>(it - F.begin(), 1, F.size() - 1) - 1;
    while (j + 1 < F.size() - 1 && F[j + 1] == F[j]) ++j;
    const double w = F[j + 1] > F[j] ? (u - F[j]) / (F[j + 1] - F[j]) : 0.5;
    const double theta = th[j] + std::clamp(w, 0.0, 1.0) * (th[j + 1] - th[j]);
    x = std::clamp(m.scale * std::tan(theta), m.lo, m.hi);
  }
  return out;
}

std::vector<std::vector<double>> Measure::sample(std::size_t n, std::uint64_t seed) const {
  const auto r = sample_reduced(n, seed);
  std::vector<std::vector<double>> pts(n);
  if (dim() == 1) {
    for (std::size_t i = 0; i < n; ++i) pts[i] = {r[i]};
    return pts;
  }
  CounterRng rng(seed, 1);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim());
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& c : v) {
        c = normal(rng);
        norm += c * c;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& c : v) c *= r[i] / norm;
    pts[i] = std::move(v);
  }
  return pts;
}

DensityRatio convolution_density_ratio(const Measure& m1, const Measure& m2, const std::vector<double>& grid) {
  if (m1.family() != Family::cauchy || m2.family() != Family::cauchy || m1.dim() != 1 || m2.dim() != 1)
    throw Unsupported("density ratio is implemented for two Cauchy factors on the line");
  if (grid.empty()) throw BadParameter("empty grid");
  const Measure& ref = m1.alpha() <= m2.alpha() ? m1 : m2;
  const Measure conv = Measure::convolution(m1, m2);
  DensityRatio out;
  out.sup = 0.0;
  out.inf = kInf;
  std::vector<double> values;
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  for (double x : sorted) {
    const double r = conv.density(x) / ref.density(x);
    values.push_back(r);
    out.sup = std::max(out.sup, r);
    out.inf = std::min(out.inf, r);
  }
  out.ratio_at_zero = conv.density(0.0) / ref.density(0.0);
  // Tail limit by extrapolating the ratio in 1/|x| from the two outermost points.
  const double x1 = std::abs(sorted[sorted.size() - 2]), x2 = std::abs(sorted.back());
  const double r1 = values[values.size() - 2], r2 = values.back();
  out.tail_limit = x2 > x1 ? (r2 * x2 - r1 * x1) / (x2 - x1) : r2;
  const std::size_t k = values.size();
  if (k >= 8) {
    bool growing = true;
    for (std::size_t i = k - 8; i + 1 < k; ++i) growing = growing && values[i + 1] > values[i] * 1.05;
    if (growing) throw RatioUnbounded("density ratio keeps growing towards the end of the grid");
  }
  if (!(out.tail_limit > 0.0)) out.tail_limit = r2;
  out.sup = std::max(out.sup, out.tail_limit);
  out.inf = std::min(out.inf, out.tail_limit);
  return out;
}

}  // namespace fiq

namespace fiq {

LevelProfile::LevelProfile(const Measure& m, const Field& q) {
  t_ = reference_grid(m.reduced_radial(), m.lo(), m.hi());
  const auto& rule = gauss_legendre(10);
  q_.resize(t_.size());
  for (std::size_t i = 0; i < t_.size(); ++i) {
    const double v = q(t_[i]);
    q_[i] = std::isnan(v) ? kInf : v;
  }
  w_.assign(t_.size() - 1, 0.0);
  for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
    const double a = t_[i], b = t_[i + 1];
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    double s = 0.0;
    for (int k = 0; k < 10; ++k) s += rule.weights[k] * m.density(c + h * rule.nodes[k]);
    w_[i] = s * h;
  }
  left_ = t_.front() > m.lo() ? m.mass(m.lo(), t_.front()) : 0.0;
  right_ = t_.back() < m.hi() ? m.mass(t_.back(), m.hi()) : 0.0;
  q_min_ = *std::min_element(q_.begin(), q_.end());
  q_max_ = *std::max_element(q_.begin(), q_.end());
}

double LevelProfile::mass_below(double y) const {
  double s = 0.0;
  if (q_.front() <= y) s += left_;
  if (q_.back() <= y) s += right_;
  for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
    const bool a = q_[i] <= y, b = q_[i + 1] <= y;
    if (a && b) s += w_[i];
    else if (a != b) {
      const double f = (y - q_[i]) / (q_[i + 1] - q_[i]);
      s += w_[i] * (a ? f : 1.0 - f);
    }
  }
  return std::clamp(s, 0.0, 1.0);
}

std::vector<double> LevelProfile::at_nodes(const Field& g) const {
  std::vector<double> v(t_.size());
  for (std::size_t i = 0; i < t_.size(); ++i) v[i] = g(t_[i]);
  return v;
}

double LevelProfile::min_below(const Field& g, const std::vector<double>& g_nodes, double y) const {
  double best = kInf;
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (q_[i] <= y) best = std::min(best, g_nodes[i]);
    if (i + 1 < t_.size() && (q_[i] <= y) != (q_[i + 1] <= y)) {
      const double f = (y - q_[i]) / (q_[i + 1] - q_[i]);
      best = std::min(best, g(t_[i] + f * (t_[i + 1] - t_[i])));
    }
  }
  return best;
}

}  // namespace fiq
