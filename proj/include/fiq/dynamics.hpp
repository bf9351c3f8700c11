#pragma once

#include <fiq/measures.hpp>
#include <fiq/weight.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace fiq {

// Weighted overdamped Langevin dynamics dX = b(X) dt + sqrt(2) omega(X) dW on the line, with
// b = (omega^2)' - omega^2 V', which leaves mu = e^{-V} invariant.
struct SdeConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t outer = 4096;    // starting points drawn from mu
  std::size_t inner = 64;      // noise paths per starting point
  std::uint64_t seed = 1;
  double taming = 1e3;         // |drift| and diffusion are capped at this value
  std::size_t records = 21;    // recorded times, evenly spaced on [0, horizon]
  std::size_t bootstrap = 200;
  bool drop_weight_gradient = false;  // negative control: drift -omega^2 V' only
};

class SdeFields {
 public:
  SdeFields(const Measure& m, const Weight& w, bool drop_weight_gradient = false);
  double drift(double x) const;
  double diffusion(double x) const;

 private:
  Field V_;
  Field w2_;
  bool drop_;
};

struct DecayTrajectory {
  std::vector<double> times;
  std::vector<double> var;  // estimate of Var_mu(P_t f)
  std::vector<double> ci;   // bootstrap 95% half-widths
  double fitted_rate = 0.0; // -d/dt ln var over the fit window
  double fit_t0 = 0.0;
  double fit_t1 = 0.0;
  double taming_fraction = 0.0;
};

// Nested Monte Carlo: for each of the outer starts x_i the inner paths estimate (P_t f)(x_i); the
// variance over i, corrected for the inner sampling noise, estimates Var_mu(P_t f). Tamed
// Euler-Maruyama steps; StepTooLarge when taming acts on more than 1% of the steps.
DecayTrajectory simulate(const Measure& m, const Weight& w, const std::function<double(double)>& f,
                         const SdeConfig& config);

struct DecayCheck {
  bool pass = false;
  double fitted_rate = 0.0;
  double predicted_rate = 0.0;  // 2 / C
  double worst_excess = 0.0;    // max_t var(t) - e^{-2t/C} var(0) - 3 ci(t)
  double worst_time = 0.0;
};

// var(t) <= e^{-2t/C} var(0) + 3 ci(t) at every recorded time; C = +inf passes vacuously.
DecayCheck check_decay(const DecayTrajectory& traj, double C_bound);

struct StationarityReport {
  bool pass = false;
  double ks = 0.0;
  double critical = 0.0;  // 1% level, 1.628 / sqrt(n)
  std::size_t n = 0;
};

// Runs config.outer single paths from mu up to the horizon and compares the time-T marginal with mu.
StationarityReport stationarity_check(const Measure& m, const Weight& w, const SdeConfig& config);

}  // namespace fiq
