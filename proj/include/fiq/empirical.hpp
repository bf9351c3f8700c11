#pragma once

#include <fiq/measures.hpp>
#include <fiq/rates.hpp>
#include <fiq/weight.hpp>
#include <fiq/weights.hpp>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fiq {

// Nodes of the discretization in the reduced coordinate: uniform on a bounded support, otherwise
// t = scale * sinh(xi) with xi uniform, truncated at the measure's truncation radius.
std::vector<double> spectral_grid(const Measure& m, std::size_t cells);

// Three-point (P1, lumped mass) discretization of the pencil
//   stiffness: int (|f'|^2 + k f^2 / t^2) stiff_density dt,  mass: int f^2 mass_density dt
// with Neumann ends, or a Dirichlet node at t = 0 when k > 0.
struct DiscretizedForm {
  std::vector<double> t;
  std::vector<double> mass;        // lumped diagonal
  std::vector<double> diag;        // stiffness diagonal
  std::vector<double> off;         // stiffness off-diagonal, size t.size() - 1
  bool pinned_origin = false;      // node 0 removed from the pencil
};

DiscretizedForm discretize(const std::vector<double>& t, const std::function<double(double)>& stiff_density,
                           const std::function<double(double)>& mass_density, double angular = 0.0);

// k-th smallest generalized eigenvalue (k = 0 is the smallest) by Sturm-sequence bisection.
double pencil_eigenvalue(const DiscretizedForm& form, std::size_t k);
// The matching eigenvector at the nodes of the form (zero at a pinned origin), unit mass norm.
std::vector<double> pencil_eigenvector(const DiscretizedForm& form, double lambda);

struct SpectralEstimate {
  double value = 0.0;   // Richardson-extrapolated constant 1 / lambda
  double error = 0.0;   // |extrapolated - fine| in the constant
  double coarse = 0.0;  // constants at N and 2N cells
  double fine = 0.0;
  std::size_t cells = 0;
  std::string sector;   // "l=0" or "l=1" for radial problems, "line" otherwise
};

// Best constant in Var(f) <= C int |grad f|^2 omega^2 d mu. GridTooCoarse when the two resolutions
// disagree by more than 1% after extrapolation.
SpectralEstimate spectral_constant(const Measure& m, const Weight& w = Weight::unit(), std::size_t cells = 4096);
// Best constant in inf_a int (f - a)^2 / omega^2 d mu <= C int |grad f|^2 d mu.
SpectralEstimate converse_quotient(const Measure& m, const Weight& w, std::size_t cells = 4096);

// Test function of the reduced coordinate with its derivative and the points where it is not smooth.
struct TestFunction {
  std::string id;
  std::function<double(double)> value;
  std::function<double(double)> grad;
  std::vector<double> breaks;
};

TestFunction constant_function(double c);
// clamp((t - r)/delta, 0, 1) for r on a quantile grid and delta relative to the local scale.
std::vector<TestFunction> threshold_family(const Measure& m);
// arctan((t - c)/lambda) for a few centers and scales.
std::vector<TestFunction> arctan_family(const Measure& m);
// Piecewise-linear interpolants of the leading non-constant discrete eigenvectors.
std::vector<TestFunction> eigenvector_family(const Measure& m, const Weight& w = Weight::unit(), std::size_t count = 2,
                                             std::size_t cells = 512);
// Thresholds, arctan rescalings and eigenvectors.
std::vector<TestFunction> adversarial_family(const Measure& m);

struct FunctionStats {
  double mean = 0.0;
  double var = 0.0;
  double second_moment = 0.0;
  double dirichlet = 0.0;           // int |f'|^2 d mu
  double weighted_dirichlet = 0.0;  // int |f'|^2 omega^2 d mu
  double osc = 0.0;                 // max - min over nodes
  double entropy = 0.0;             // Ent(f^2), 0 ln 0 = 0
};

FunctionStats function_stats(const Measure& m, const TestFunction& f, const Weight& w = Weight::unit());
// (int |f - mu(f)|^p d mu)^{1/p}
double centered_lp_norm(const Measure& m, const TestFunction& f, double p);
// inf_a int (f - a)^2 / omega^2 d mu
double converse_lhs(const Measure& m, const TestFunction& f, const Weight& w);

enum class InequalityKind { weak_poincare, p_weak_poincare, weak_log_sobolev, weighted_poincare, converse_poincare,
                            weighted_log_sobolev };
std::string to_string(InequalityKind k);
InequalityKind inequality_kind_from_string(const std::string& s);

struct InequalityReport {
  InequalityKind kind = InequalityKind::weak_poincare;
  std::string test_id;
  std::optional<double> s;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  bool pass = false;
};

constexpr double kReportTolerance = 1e-9;

// pass iff margin >= -tol * max(|lhs|, |rhs|)
InequalityReport make_report(InequalityKind kind, std::string id, std::optional<double> s, double lhs, double rhs,
                             double tol = kReportTolerance);

// Standard s grid {1e-1, ..., 1e-5}.
std::vector<double> default_s_grid();

std::vector<InequalityReport> verify_weak_poincare(const Measure& m, const RateFunction& beta,
                                                   const std::vector<double>& s_grid,
                                                   const std::vector<TestFunction>& family);
// Var(f) <= beta_p(s) int |grad f|^2 + s ||f - mu(f)||_p^2 with beta_p = p_weak_rate(beta, p).
std::vector<InequalityReport> verify_p_weak_poincare(const Measure& m, const RateFunction& beta, double p,
                                                     const std::vector<double>& s_grid,
                                                     const std::vector<TestFunction>& family);
std::vector<InequalityReport> verify_weak_log_sobolev(const Measure& m, const RateFunction& beta_ls,
                                                      const std::vector<double>& s_grid,
                                                      const std::vector<TestFunction>& family);
// One report per test function for a direct, converse or log-Sobolev weighted constant.
std::vector<InequalityReport> verify_weighted(const Measure& m, const WeightedConstant& c,
                                              const std::vector<TestFunction>& family);

// beta_emp(s) = max_f (Var - s Osc^2)_+ / int |grad f|^2 over the family.
double empirical_rate(const Measure& m, double s, const std::vector<TestFunction>& family);
std::vector<double> empirical_rate(const Measure& m, const std::vector<double>& s_grid,
                                   const std::vector<TestFunction>& family);

struct ReportSummary {
  InequalityKind kind = InequalityKind::weak_poincare;
  std::size_t passes = 0;
  std::size_t failures = 0;
  double worst_margin = 0.0;  // smallest margin relative to max(|lhs|, |rhs|)
};
std::vector<ReportSummary> summarize(const std::vector<InequalityReport>& reports);

// Target set of a capacity problem: a union of disjoint intervals of the reduced coordinate.
struct CapacitySet {
  std::vector<Interval> pieces;
  std::string label;

  // {|x - x0| > r}; radially {r > r0}.
  static CapacitySet outside(const Measure& m, double r, double x0 = 0.0);
  static CapacitySet interval(double a, double b);
};

struct CapacityEstimate {
  double value = 0.0;
  double refined = 0.0;     // rerun on a doubled grid
  double rel_change = 0.0;
  double set_mass = 0.0;
};

// inf int |grad phi|^2 d mu over 1_A <= phi <= 1 with phi = 0 on a set of mass >= 1/2. In one
// dimension the minimizer is harmonic between A and an interval zero set, so the energy is a sum of
// reciprocal resistances int dt / rho, minimized over the position of the zero set.
// Infeasible when mu(A) > 1/2.
CapacityEstimate estimate_capacity(const Measure& m, const CapacitySet& A, std::size_t cells = 4000);

struct EntropyQuotient {
  double value = 0.0;            // max of Ent(f^2) / int |grad f|^2 omega^2 over the family
  std::string argmax;
  bool unbounded_trend = false;  // the far-threshold sweep keeps growing without saturating
  std::vector<double> sweep_r;
  std::vector<double> sweep;
};

EntropyQuotient entropy_quotient(const Measure& m, const Weight& w = Weight::unit());

}  // namespace fiq
