// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <fiq/dynamics.hpp>
#include <fiq/empirical.hpp>
#include <fiq/errors.hpp>
#include <fiq/lyapunov.hpp>
#include <fiq/rates.hpp>
#include <fiq/weights.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace fiq;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kE = std::numbers::e;

// Pinned tolerances.
constexpr double kIntervalGapTol = 1e-4;
constexpr double kIntervalGapSeconds = 5.0;
constexpr double kGaussianGapTol = 1e-3;
constexpr double kGaussianEntropyTol = 1e-2;
constexpr double kDominationSeconds = 120.0;
constexpr double kCauchySlopeTol = 0.1;
constexpr double kSubbotinR2 = 0.99;
constexpr double kPerturbedSlopeTol = 0.15;
constexpr double kCapacityRelTol = 0.02;
constexpr double kSandwichRatio = 1e3;
constexpr double kOuRateRelTol = 0.10;
constexpr double kDecaySeconds = 300.0;
constexpr double kAlgebraTol = 1e-12;
constexpr double kSeamTol = 1e-12;

class Criterion {
 public:
  // Records one sub-check; the criterion passes when all of them do.
  void expect(bool ok, const std::string& what) {
    pass_ = pass_ && ok;
    if (!ok) failed_.push_back(what);
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  bool pass() const { return pass_; }
  std::string detail() const {
    std::string d = notes_;
    for (const auto& f : failed_) d += (d.empty() ? "" : "; ") + std::string("failed: ") + f;
    return d;
  }

 private:
  bool pass_ = true;
  std::vector<std::string> failed_;
  std::string notes_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close(double got, double want, double rel = kAlgebraTol) {
  return std::abs(got - want) <= rel * std::max(1.0, std::abs(want));
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  return v;
}

// Ordinary least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

double loglog_slope(const RateFunction& b, double lo = 1e-6, double hi = 1e-3) {
  std::vector<double> x, y;
  for (double s : log_grid(lo, hi, 40)) x.push_back(std::log(s)), y.push_back(std::log(b(s)));
  return ls_slope(x, y);
}

// R^2 of the one-parameter fit beta = c ln^2(1/s).
double ln2_r2(const RateFunction& b) {
  const auto g = log_grid(RateFunction::kSMin, RateFunction::kSMax, 80);
  double sxx = 0, sxy = 0, my = 0;
  for (double s : g) {
    const double x = std::pow(std::log(1 / s), 2), y = b(s);
    sxx += x * x, sxy += x * y, my += y;
  }
  my /= double(g.size());
  const double c = sxy / sxx;
  double res = 0, tot = 0;
  for (double s : g) {
    const double x = std::pow(std::log(1 / s), 2), y = b(s);
    res += (y - c * x) * (y - c * x), tot += (y - my) * (y - my);
  }
  return 1 - res / tot;
}

RateFunction certified_rate(const Measure& m) { return rate_from_lyapunov(default_certificate(m), m); }

template <class E, class F>
bool throws(F&& f) {
  try {
    f();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

WeightedConstant constant_of(double c, ConstantKind kind = ConstantKind::direct) {
  return WeightedConstant{Weight::cauchy_optimal(), c, kind, "acceptance", {}};
}

double bounded_x(double x) { return x / std::sqrt(1 + x * x); }

void interval_gap(Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto e = spectral_constant(Measure::uniform(-1, 1), Weight::unit(), 8192);
  const double dt = seconds_since(t0);
  c.note("C=" + fmt(e.value) + " target 4/pi^2=" + fmt(4 / (kPi * kPi)) + " tol " + fmt(kIntervalGapTol));
  c.note("time " + fmt(dt) + "s < " + fmt(kIntervalGapSeconds) + "s");
  c.expect(std::abs(e.value - 4 / (kPi * kPi)) <= kIntervalGapTol, "value");
  c.expect(dt < kIntervalGapSeconds, "runtime");
}

void gaussian_gap(Criterion& c) {
  const auto e = spectral_constant(Measure::gaussian(1));
  const auto q = entropy_quotient(Measure::gaussian(1));
  c.note("C=" + fmt(e.value) + " target 1 tol " + fmt(kGaussianGapTol));
  c.note("entropy quotient " + fmt(q.value) + " >= " + fmt(2 - kGaussianEntropyTol));
  c.expect(std::abs(e.value - 1) <= kGaussianGapTol, "spectral constant");
  c.expect(q.value >= 2 - kGaussianEntropyTol, "entropy quotient");
}

void cauchy_domination(Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    double alpha;
    int d;
  };
  double worst = -INFINITY;
  for (auto [a, d] : {Case{1, 1}, Case{2, 1}, Case{3, 1}, Case{4, 1}, Case{8, 1}, Case{3, 3}, Case{5, 3}, Case{7, 3}}) {
    const auto e = spectral_constant(Measure::cauchy(a, d), Weight::cauchy_optimal());
    const double bound = cauchy_weighted_constant(a, d).value;
    worst = std::max(worst, e.value / (bound + e.error));
    c.expect(e.value <= bound + e.error, "alpha=" + fmt(a) + " d=" + std::to_string(d) + " value " + fmt(e.value) +
                                             " > bound " + fmt(bound));
  }
  const double dt = seconds_since(t0);
  c.note("max value/(bound+error)=" + fmt(worst) + " over 8 cases");
  c.note("time " + fmt(dt) + "s < " + fmt(kDominationSeconds) + "s");
  c.expect(dt < kDominationSeconds, "runtime");
}

void converse_domination(Criterion& c) {
  const auto e = converse_quotient(Measure::cauchy(5, 3), Weight::cauchy_optimal());
  c.note("quotient " + fmt(e.value) + " +- " + fmt(e.error) + " <= 1/8");
  c.expect(e.value <= 0.125 + e.error, "converse quotient");
}

void weak_rate_slopes(Criterion& c) {
  for (double a : {1.0, 2.0, 4.0}) {
    const auto m = Measure::cauchy(a);
    const double slope = loglog_slope(rate_from_lyapunov(default_certificate(m), m));
    c.note("alpha=" + fmt(a) + " slope " + fmt(slope) + " vs " + fmt(-2 / a));
    c.expect(std::abs(slope + 2 / a) <= kCauchySlopeTol, "cauchy slope alpha=" + fmt(a));
  }
  const auto sm = Measure::subbotin(0.5);
  const double r2 = ln2_r2(rate_from_lyapunov(default_certificate(sm), sm));
  c.note("subbotin(1/2) ln^2 fit R^2 " + fmt(r2));
  c.expect(r2 >= kSubbotinR2, "subbotin fit");
}

void perturbed_slopes(Criterion& c) {
  for (auto [a, ap] : {std::pair{1.0, 1.0}, std::pair{2.0, 2.0}}) {
    const auto nu = Measure::cauchy(a);
    const auto r = rate_from_perturbed_lyapunov(default_certificate(nu), Potential::log_quadratic(ap / 2), nu);
    const double slope = loglog_slope(r);
    c.note("(" + fmt(a) + "," + fmt(ap) + ") slope " + fmt(slope) + " vs " + fmt(-2 / (a + ap)));
    c.expect(std::abs(slope + 2 / (a + ap)) <= kPerturbedSlopeTol, "slope (" + fmt(a) + "," + fmt(ap) + ")");
  }
}

void weak_poincare_suite(Criterion& c) {
  const auto s_grid = default_s_grid();
  for (const auto& [name, m] : {std::pair{"cauchy(2)", Measure::cauchy(2)}, std::pair{"subbotin(1/2)", Measure::subbotin(0.5)}}) {
    const auto beta = certified_rate(m);
    const auto family = adversarial_family(m);
    const auto reports = verify_weak_poincare(m, beta, s_grid, family);
    std::size_t failures = 0;
    for (const auto& r : reports) failures += !r.pass;
    const auto emp = empirical_rate(m, s_grid, family);
    bool below = true, monotone = true;
    for (std::size_t i = 0; i < s_grid.size(); ++i) {
      below = below && emp[i] <= beta(s_grid[i]);
      if (i > 0) monotone = monotone && emp[i] >= emp[i - 1];  // the grid runs from large to small s
    }
    c.note(std::string(name) + ": " + std::to_string(reports.size()) + " reports, " + std::to_string(failures) +
           " failures");
    c.expect(failures == 0, std::string(name) + " reports");
    c.expect(below, std::string(name) + " beta_emp <= beta");
    c.expect(monotone, std::string(name) + " beta_emp non-increasing");
  }
}

void lower_bounded_perturbation(Criterion& c) {
  const auto nu = Measure::cauchy(2);
  const auto beta_nu = certified_rate(nu);
  const auto U = Potential::log_abs(1.0);
  const auto mu = Measure::perturbed(nu, U);
  const auto beta_mu = perturb_rate_lower_bounded(beta_nu, nu, U);
  const auto reports = verify_weak_poincare(mu, beta_mu, default_s_grid(), adversarial_family(mu));
  std::size_t failures = 0;
  for (const auto& r : reports) failures += !r.pass;
  c.note(std::to_string(reports.size()) + " reports, " + std::to_string(failures) + " failures");
  c.expect(!reports.empty() && failures == 0, "perturbed reports");

  const auto zero = perturb_rate_lower_bounded(beta_nu, nu, Potential::zero());
  bool exact = true;
  for (double s : log_grid(RateFunction::kSMin, RateFunction::kSMax, 64)) exact = exact && zero(s) == 2 * beta_nu(s / 7);
  c.note(std::string("U=0 gives 2 beta(s/7) exactly: ") + (exact ? "yes" : "no"));
  c.expect(exact, "U=0 reduction");
}

void capacity_chain(Criterion& c) {
  const auto e = estimate_capacity(Measure::uniform(0, 1), CapacitySet::interval(0.75, 1));
  c.note("Cap([3/4,1])=" + fmt(e.value) + " target 4 tol " + fmt(kCapacityRelTol * 100) + "%");
  c.expect(std::abs(e.value - 4) <= kCapacityRelTol * 4, "uniform capacity");

  std::mt19937_64 rng(2024);
  double worst = INFINITY;
  int count = 0;
  for (const auto& m : {Measure::cauchy(2), Measure::subbotin(0.5)}) {
    const auto beta = certified_rate(m);
    std::uniform_real_distribution<double> u(std::log(m.tail_inverse(0.5) * 1.01), std::log(m.tail_inverse(1e-6)));
    for (int i = 0; i < 10; ++i, ++count) {
      const auto est = estimate_capacity(m, CapacitySet::outside(m, std::exp(u(rng))));
      const double a = est.set_mass;
      const double lower = a / (4 * beta(a / 4));
      worst = std::min(worst, est.value / lower);
      c.expect(est.value >= lower, "threshold set with mass " + fmt(a));
    }
  }
  c.note(std::to_string(count) + " threshold sets, min Cap/bound " + fmt(worst));
}

void weight_construction(Criterion& c) {
  const auto m = Measure::cauchy(4);
  const auto w = explicit_weight_from_rate(builtin_rate(Family::cauchy, 4), m);
  const auto k = converse_weighted_from_capacity(w, 1.0);
  const auto q = converse_quotient(m, k.weight);
  double c1 = INFINITY, c2 = 0;
  for (int i = 0; i <= 600; ++i) {
    const double x = -30 + 0.1 * i;
    const double r = 1 / w.omega2(x) / (1 + x * x);
    c1 = std::min(c1, r), c2 = std::max(c2, r);
  }
  c.note("constant " + fmt(k.value) + ", quotient " + fmt(q.value) + " +- " + fmt(q.error));
  c.note("c1=" + fmt(c1) + " c2=" + fmt(c2) + " ratio " + fmt(c2 / c1) + " <= " + fmt(kSandwichRatio));
  c.expect(k.value == 16, "constant 16");
  c.expect(q.value <= k.value + q.error, "quotient <= 16");
  c.expect(c1 > 0 && c2 / c1 <= kSandwichRatio, "sandwich");
}

void langevin_decay(Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = Measure::cauchy(4);
  const auto w = Weight::cauchy_optimal();
  const SdeFields fields(m, w);
  double drift_err = 0;
  for (double x = -50; x <= 50; x += 0.25) drift_err = std::max(drift_err, std::abs(fields.drift(x) + 3 * x) / std::max(1.0, 3 * std::abs(x)));
  c.note("max relative drift error vs -3x " + fmt(drift_err));
  c.expect(drift_err <= 1e-10, "drift");

  SdeConfig config;  // outer 4096, inner 64, dt 1e-3, horizon 1
  const auto traj = simulate(m, w, bounded_x, config);
  const auto check = check_decay(traj, 1.0 / 3.0);
  c.note("cauchy(4) fitted rate " + fmt(traj.fitted_rate) + ", worst excess " + fmt(check.worst_excess));
  c.expect(check.pass, "decay against C=1/3");

  const auto ou = simulate(Measure::gaussian(1), Weight::unit(), [](double x) { return x; }, config);
  c.note("OU fitted rate " + fmt(ou.fitted_rate) + " vs 2 tol " + fmt(kOuRateRelTol * 100) + "%");
  c.expect(std::abs(ou.fitted_rate - 2) <= kOuRateRelTol * 2, "OU rate");
  const double dt = seconds_since(t0);
  c.note("time " + fmt(dt) + "s < " + fmt(kDecaySeconds) + "s");
  c.expect(dt < kDecaySeconds, "runtime");
}

void algebra(Criterion& c) {
  const auto inv_s = RateFunction::power(1, 1);
  const auto inv_s2 = RateFunction::power(1, 2);
  int n = 0;
  auto eq = [&](double got, double want, const std::string& what) {
    ++n;
    c.expect(close(got, want), what + " got " + fmt(got) + " want " + fmt(want));
  };
  eq(rate_scale(inv_s, 2)(0.1), 40, "rate_scale");
  eq(rate_scale(inv_s, -1)(0.1), 10, "rate_scale lambda=-1");
  eq(rate_tensorize({inv_s, inv_s, inv_s})(0.1), 30, "rate_tensorize");
  eq(rate_tensorize({inv_s, inv_s2})(0.2), 100, "rate_tensorize max");
  eq(rate_convolve(inv_s, inv_s)(0.1), 40, "rate_convolve");
  eq(rate_convolve(inv_s, inv_s2)(0.1), 420, "rate_convolve mixed");
  eq(wls_convolve({inv_s, inv_s})(0.1), 40, "wls_convolve");
  eq(builtin_rate(Family::cauchy, 2)(0.01), 100, "builtin cauchy(2)");
  eq(builtin_rate(Family::subbotin, 0.5)(std::exp(-1.0)), 1, "builtin subbotin(1/2)");
  eq(builtin_rate(Family::cauchy, 4, 3)(0.25), 6, "builtin cauchy(4) c=3");
  eq(perturb_rate_holley_stroock(inv_s, std::log(2.0), -std::log(2.0))(0.1), 40, "holley_stroock");
  eq(p_weak_rate(inv_s, 4)(0.1), 3200, "p_weak p=4");
  eq(p_weak_rate(inv_s, 3)(0.1), 128 / 1e-3, "p_weak p=3");
  eq(p_weak_rate(inv_s, INFINITY)(0.1), 80, "p_weak p=inf");
  eq(wls_from_wp(inv_s, 1, 1, 0.5)(1 / kE), kE, "wls_from_wp");
  eq(wls_from_wp(RateFunction::constant(3))(1e-3), 3 * std::log(1e3), "wls_from_wp constant");
  eq(capacity_lower_bound(RateFunction::constant(10), 0.5), 1.0 / 80, "capacity_lower_bound");

  eq(converse_from_direct(constant_of(0.25)).value, 1, "converse_from_direct 1/4");
  eq(converse_from_direct(constant_of(1.0 / 9)).value, 0.25, "converse_from_direct 1/9");
  eq(cauchy_converse_constant(5, 3).value, 0.125, "converse (5,3)");
  eq(cauchy_converse_constant(3, 1).value, 0.25, "converse (3,1)");
  eq(cauchy_converse_constant(2.5, 1).value, 10 + 4 * std::sqrt(6.0), "converse (2.5,1)");
  eq(ball_poincare_prefactor(3) * 4, 10.0 / 3, "ball prefactor d=3 R=2");
  eq(ball_poincare_bound(Measure::uniform(-1, 1), 1), 4 / (kPi * kPi), "ball bound d=1");
  eq(perturb_bounded(constant_of(2), Potential::log_quadratic(0.5), -std::log(3.0)).value, 6, "perturb_bounded");
  eq(perturb_bounded(constant_of(1, ConstantKind::log_sobolev), Potential::zero(), 0, std::log(2.0)).value, 2,
     "perturb_bounded log-Sobolev");
  eq(perturb_weighted_lipschitz(constant_of(1), 1, 1).value, 4, "weighted lipschitz");
  eq(perturb_weighted_generator(constant_of(1), 1).value, 2, "weighted generator");
  WeightedLyapunovReport rep;
  rep.verified = true, rep.theta = 2, rep.theta_prime = 1;
  eq(perturb_weighted_lyapunov(rep, 3, Weight::cauchy_optimal()).value, 4, "weighted lyapunov");
  rep.theta_prime = 0;
  eq(perturb_weighted_lyapunov(rep, 3, Weight::cauchy_optimal()).value, 2, "weighted lyapunov theta'=0");
  eq(ls_lipschitz_bound(1, 1, 0.5, 1, 1, 1, 2, kE), 28 + 4 * kE, "log-Sobolev lipschitz");
  eq(converse_weighted_from_capacity(Weight::cauchy_optimal(), 1).value, 16, "converse from capacity C=1");
  eq(converse_weighted_from_capacity(Weight::cauchy_optimal(), 0.5).value, 8, "converse from capacity C=1/2");
  const auto sc = scale(constant_of(2), 3);
  eq(sc.value, 18, "scale");
  eq(sc.weight.omega2(3), Weight::cauchy_optimal().omega2(1), "scaled weight");
  eq(translate(constant_of(2), 1.5).value, 2, "translate");
  eq(tensorize({constant_of(1), constant_of(3)}).value, 3, "tensorize constants");

  ++n;
  c.expect(throws<TrickInapplicable>([] { converse_from_direct(constant_of(1)); }), "C=1 trick must be inapplicable");
  ++n;
  c.expect(throws<NotApplicable>([] { wp_from_wls(RateFunction::constant(1, RateKind::weak_log_sobolev)); }),
           "wp_from_wls constant must raise NotApplicable");
  c.note(std::to_string(n) + " hand values checked to " + fmt(kAlgebraTol));
}

void branch_seams(Criterion& c) {
  struct Seam {
    double alpha;
    int d;
  };
  for (auto [a, d] : {Seam{2, 1}, Seam{5, 3}}) {
    const double lo = cauchy_weighted_constant(a * (1 - 1e-14), d).params.at("piecewise");
    const double hi = cauchy_weighted_constant(a * (1 + 1e-14), d).params.at("piecewise");
    c.note("alpha=" + fmt(a) + " d=" + std::to_string(d) + " jump " + fmt(std::abs(lo - hi)));
    c.expect(std::abs(lo - hi) <= kSeamTol, "seam alpha=" + fmt(a));
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria = {
      {"interval spectral gap", interval_gap},
      {"gaussian gap and entropy quotient", gaussian_gap},
      {"weighted cauchy domination", cauchy_domination},
      {"converse domination", converse_domination},
      {"weak-rate slopes", weak_rate_slopes},
      {"perturbation slope law", perturbed_slopes},
      {"weak Poincare verification suite", weak_poincare_suite},
      {"lower-bounded perturbation", lower_bounded_perturbation},
      {"capacity chain", capacity_chain},
      {"weight construction end-to-end", weight_construction},
      {"Langevin decay", langevin_decay},
      {"algebra exactness", algebra},
      {"branch-seam continuity", branch_seams},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Criterion c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failed += !c.pass();
    std::printf("[%s] %2zu %s: %s\n", c.pass() ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), c.detail().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
