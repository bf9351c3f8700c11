#include <fiq/quadrature.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace fiq {

namespace {

GaussRule build_rule(int n) {
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

constexpr int kOrder = 10;
constexpr int kLevels = 44;
constexpr int kSplit = 2;

// Graded composite rule on [p, q] in theta, refined towards both ends.
double graded(const std::function<double(double)>& f, double p, double q) {
  const auto& rule = gauss_legendre(kOrder);
  auto panel = [&](double a, double b) {
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    double s = 0.0;
    for (int i = 0; i < kOrder; ++i) s += rule.weights[i] * f(c + h * rule.nodes[i]);
    return s * h;
  };
  auto sub = [&](double a, double b) {
    double s = 0.0;
    for (int k = 0; k < kSplit; ++k) s += panel(a + (b - a) * k / kSplit, a + (b - a) * (k + 1) / kSplit);
    return s;
  };
  const double half = 0.5 * (q - p);
  double total = 0.0;
  double w = half;
  for (int lev = 0; lev < kLevels; ++lev) {
    const double inner = 0.5 * w;
    total += sub(p + inner, p + w);
    total += sub(q - w, q - inner);
    w = inner;
  }
  total += panel(p, p + w);
  total += panel(q - w, q);
  return total;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& g, double a, double b, double scale) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(g, b, a, scale);
  const double ta = std::atan(a / scale);
  const double tb = std::atan(b / scale);
  auto f = [&](double th) {
    const double c = std::cos(th);
    const double v = g(scale * std::tan(th));
    return v == 0.0 ? 0.0 : v * scale / (c * c);
  };
  if (ta < 0.0 && tb > 0.0) return graded(f, ta, 0.0) + graded(f, 0.0, tb);
  return graded(f, ta, tb);
}

}  // namespace fiq
