#include <fiq/errors.hpp>
#include <fiq/field.hpp>

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <utility>

namespace fiq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Field::Field() : Field(constant(0.0)) {}

Field::Field(Jet f, std::string label) : jet_(std::move(f)), label_(std::move(label)) {
  auto j = jet_;
  plain_ = [j](double t) { return j(Dual(t)).v; };
}

Field Field::values_only(Plain f, std::string label) {
  Field out = constant(0.0);
  out.jet_ = nullptr;
  out.plain_ = std::move(f);
  out.label_ = std::move(label);
  out.constant_.reset();
  return out;
}

Field Field::constant(double c) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  Field out(Jet([c](const Dual&) { return Dual(c); }), buf);
  out.constant_ = c;
  return out;
}

double Field::operator()(double t) const { return plain_(t); }

Dual Field::apply(const Dual& t) const {
  if (!jet_) throw DifferentiationFailure("field '" + label_ + "' has no derivative information");
  return jet_(t);
}

Dual Field::jet(double t) const { return apply(Dual::variable(t)); }

Field operator+(const Field& a, const Field& b) {
  if (a.constant_value() && b.constant_value()) return Field::constant(*a.constant_value() + *b.constant_value());
  const std::string label = "(" + a.label() + ")+(" + b.label() + ")";
  if (a.differentiable() && b.differentiable())
    return Field([a, b](const Dual& t) { return a.apply(t) + b.apply(t); }, label);
  return Field::values_only([a, b](double t) { return a(t) + b(t); }, label);
}

Field operator-(const Field& a, const Field& b) { return a + (-1.0) * b; }

Field operator*(double c, const Field& a) {
  if (a.constant_value()) return Field::constant(c * *a.constant_value());
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  const std::string label = std::string(buf) + "*(" + a.label() + ")";
  if (a.differentiable()) return Field([c, a](const Dual& t) { return Dual(c) * a.apply(t); }, label);
  return Field::values_only([c, a](double t) { return c * a(t); }, label);
}

Field shifted(const Field& a, double c) { return a + Field::constant(c); }

std::vector<double> reference_grid(bool radial, double lo, double hi, int per_side) {
  std::vector<double> pts;
  pts.reserve(2 * per_side + 3);
  const double umin = -14.0, umax = 41.0;
  for (int i = 0; i < per_side; ++i) {
    const double t = std::exp(umin + (umax - umin) * i / (per_side - 1));
    if (t >= lo && t <= hi) pts.push_back(t);
    if (!radial && -t >= lo && -t <= hi) pts.push_back(-t);
  }
  if (0.0 >= lo && 0.0 <= hi) pts.push_back(0.0);
  if (std::isfinite(lo)) pts.push_back(lo);
  if (std::isfinite(hi)) pts.push_back(hi);
  if (std::isfinite(lo) && std::isfinite(hi)) {
    const int n = 512;
    for (int i = 1; i < n; ++i) pts.push_back(lo + (hi - lo) * i / n);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

std::vector<Interval> sublevel_set(const Field& q, double y, bool radial, double lo, double hi) {
  const auto grid = reference_grid(radial, lo, hi);
  auto inside = [&](double t) {
    const double v = q(t);
    return !std::isnan(v) && v <= y;
  };
  auto crossing = [&](double a, double b, bool a_in) {
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
      const double m = 0.5 * (a + b);
      if (inside(m) == a_in) a = m;
      else b = m;
    }
    return 0.5 * (a + b);
  };
  std::vector<Interval> out;
  bool in = inside(grid.front());
  double start = in ? (std::isfinite(lo) ? grid.front() : -kInf) : 0.0;
  if (in && radial && !std::isfinite(lo)) start = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const bool now = inside(grid[i]);
    if (now == in) continue;
    const double c = crossing(grid[i - 1], grid[i], in);
    if (in) out.push_back({start, c});
    else start = c;
    in = now;
  }
  if (in) out.push_back({start, std::isfinite(hi) ? grid.back() : kInf});
  return out;
}

Potential::Potential(Field f, std::optional<double> exact_min) : field_(std::move(f)), exact_min_(exact_min) {
  if (field_.constant_value()) exact_min_ = *field_.constant_value();
}

Potential Potential::zero() { return Potential(Field::constant(0.0)); }

Potential Potential::constant(double c) { return Potential(Field::constant(c)); }

Potential Potential::log_abs(double c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g*ln(1+|x|)", c);
  Field f([c](const Dual& t) { return Dual(c) * log(Dual(1.0) + abs(t)); }, buf);
  return Potential(f, c >= 0.0 ? std::optional<double>(0.0) : std::nullopt);
}

Potential Potential::log_quadratic(double c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g*ln(1+x^2)", c);
  Field f([c](const Dual& t) { return Dual(c) * log(Dual(1.0) + t * t); }, buf);
  return Potential(f, c >= 0.0 ? std::optional<double>(0.0) : std::nullopt);
}

Potential Potential::power_abs(double c, double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g*|x|^%.17g", c, p);
  Field f([c, p](const Dual& t) { return Dual(c) * pow(abs(t), p); }, buf);
  return Potential(f, c >= 0.0 && p > 0.0 ? std::optional<double>(0.0) : std::nullopt);
}

namespace {

// Golden-section minimum of f on [a, b], starting from a bracketing grid triple.
std::pair<double, double> golden_min(const std::function<double(double)>& f, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 100 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
    if (fc < fd) {
      b = d, d = c, fd = fc;
      c = b - g * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + g * (b - a), fd = f(d);
    }
  }
  const double tm = 0.5 * (a + b);
  return {tm, f(tm)};
}

}  // namespace

MinEstimate Potential::lower_bound(bool radial) const {
  const auto grid = reference_grid(radial, radial ? 0.0 : -kInf, kInf);
  std::size_t best = 0;
  double bv = kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = field_(grid[i]);
    if (v < bv) {
      bv = v;
      best = i;
    }
  }
  if (exact_min_) return {*exact_min_, grid[best], true};
  const auto [tm, vm] = golden_min([this](double t) { return field_(t); }, grid[best > 0 ? best - 1 : 0],
                                   grid[std::min(best + 1, grid.size() - 1)]);
  if (vm < bv) return {vm, tm, false};
  return {bv, grid[best], false};
}

double Potential::osc_ball(double R, bool radial) const {
  if (is_constant()) return 0.0;
  if (!(R >= 0.0)) throw OscillationUnavailable("ball radius must be non-negative");
  const int n = 4096;
  const double lo = radial ? 0.0 : -R;
  auto at = [&](int i) { return lo + (R - lo) * i / n; };
  int imin = 0, imax = 0;
  double mn = kInf, mx = -kInf;
  for (int i = 0; i <= n; ++i) {
    const double v = field_(at(i));
    if (!std::isfinite(v)) throw OscillationUnavailable("potential not finite on the ball");
    if (v < mn) mn = v, imin = i;
    if (v > mx) mx = v, imax = i;
  }
  // Interior extrema are refined between the neighbouring grid points.
  if (imin > 0 && imin < n)
    mn = std::min(mn, golden_min([this](double t) { return field_(t); }, at(imin - 1), at(imin + 1)).second);
  if (imax > 0 && imax < n)
    mx = std::max(mx, -golden_min([this](double t) { return -field_(t); }, at(imax - 1), at(imax + 1)).second);
  return mx - mn;
}

double Potential::min_over(const std::vector<Interval>& set, bool radial) const {
  double mn = kInf;
  for (const auto& iv : set) {
    for (double t : reference_grid(radial, iv.lo, iv.hi, 1024)) mn = std::min(mn, field_(t));
  }
  return mn;
}

}  // namespace fiq
