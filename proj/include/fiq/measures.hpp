#pragma once

#include <fiq/field.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace fiq {

enum class Family { cauchy, subbotin, gaussian, uniform, custom, perturbed, convolution, product };

std::string to_string(Family f);

// Reference probability measure. Numerics run on a reduced coordinate t: t = x on the line (d = 1)
// or t = r = |x| for rotation-invariant measures in d >= 2, with Jacobian |S^{d-1}| r^{d-1}.
// Values are immutable and cheap to copy.
class Measure {
 public:
  static Measure cauchy(double alpha, int d = 1);
  static Measure subbotin(double alpha, int d = 1);
  static Measure gaussian(int d = 1);
  static Measure uniform(double a, double b);
  static Measure custom(Potential V, int d = 1, bool heavy_tailed = false);
  static Measure perturbed(const Measure& base, Potential U);
  static Measure convolution(const Measure& a, const Measure& b);
  static Measure product(std::vector<Measure> factors);

  Family family() const;
  int dim() const;
  // Symmetric family (density depends on |x| only).
  bool radial() const;
  // Reduced coordinate is r = |x| in d >= 2.
  bool reduced_radial() const { return dim() >= 2; }
  double alpha() const;
  const std::map<std::string, double>& params() const;
  std::string describe() const;
  bool heavy_tailed() const;

  double lo() const;
  double hi() const;
  double scale() const;

  // Unnormalized potential V in the reduced coordinate.
  const Field& potential() const;
  // For perturbed measures: the base and the perturbation as supplied (not renormalized).
  const Measure& base() const;
  const Potential& perturbation() const;
  // ln of the integral of exp(-U) d(base); the normalized perturbation is U + this value.
  double perturbation_log_mass() const;
  const std::vector<Measure>& factors() const;

  double jacobian(double t) const;
  double normalizer() const;
  // Normalized density of the reduced coordinate (Jacobian included).
  double density(double t) const;

  // Integral of g over t in [a, b] against the measure.
  double integrate(const std::function<double(double)>& g, double a, double b) const;
  double expect(const std::function<double(double)>& g) const;
  double mass(double a, double b) const;
  // mu{ q <= y } for a field q of the reduced coordinate.
  double level_mass(const Field& q, double y) const;
  double mass_of(const std::vector<Interval>& set) const;

  // s(r) = mu{ |x - x0| > r }.
  double tail(double r, double x0 = 0.0) const;
  // Generalized inverse: smallest r with tail(r) <= s.
  double tail_inverse(double s, double x0 = 0.0) const;
  double median_abs() const;
  // Radius beyond which the tail is below 1e-8 (algebraic tails) or 1e-10 (otherwise).
  double truncation_radius() const;
  // Cumulative distribution of the reduced coordinate.
  double cdf(double t) const;

  std::vector<double> sample_reduced(std::size_t n, std::uint64_t seed) const;
  std::vector<std::vector<double>> sample(std::size_t n, std::uint64_t seed) const;

  struct Impl;

 private:
  explicit Measure(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

// Distribution of a field q under a measure: y -> mu{q <= y}, tabulated once on the logarithmic
// reference grid (cell masses by a 10-point Gauss rule) so that repeated level queries are cheap.
// Within a cell q is taken as linear, and the mass as proportional to length.
class LevelProfile {
 public:
  LevelProfile(const Measure& m, const Field& q);

  double mass_below(double y) const;
  // Values of g at the tabulation nodes, for min_below.
  std::vector<double> at_nodes(const Field& g) const;
  // Minimum of g over {q <= y}, from the grid nodes and the interpolated crossings; +inf if empty.
  double min_below(const Field& g, const std::vector<double>& g_nodes, double y) const;
  double q_min() const { return q_min_; }
  double q_max() const { return q_max_; }

 private:
  std::vector<double> t_;
  std::vector<double> q_;
  std::vector<double> w_;  // mass of [t_i, t_{i+1}]
  double left_ = 0.0;      // mass below t_0
  double right_ = 0.0;     // mass above t_last
  double q_min_ = 0.0;
  double q_max_ = 0.0;
};

struct DensityRatio {
  double sup = 0.0;
  double inf = 0.0;
  double ratio_at_zero = 0.0;
  double tail_limit = 0.0;
};

// sup/inf over the grid of (density of m1 * m2) / (density of the Cauchy factor with the smaller alpha).
DensityRatio convolution_density_ratio(const Measure& m1, const Measure& m2, const std::vector<double>& grid);

double sphere_area(int d);

}  // namespace fiq
