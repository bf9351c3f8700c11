#include <fiq/dynamics.hpp>
#include <fiq/errors.hpp>
#include <fiq/parallel.hpp>
#include <fiq/random.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

namespace fiq {

namespace {

struct Stepper {
  const SdeFields& fields;
  double dt;
  double taming;

  // One tamed Euler-Maruyama step; returns true when a cap was active.
  bool step(double& x, double z) const {
    double b = fields.drift(x), s = fields.diffusion(x);
    bool tamed = false;
    if (std::abs(b) > taming) b = std::copysign(taming, b), tamed = true;
    if (s > taming) s = taming, tamed = true;
    x += b * dt + s * std::sqrt(dt) * z;
    return tamed;
  }
};

std::vector<std::size_t> record_steps(const SdeConfig& c) {
  const auto steps = static_cast<std::size_t>(std::llround(c.horizon / c.dt));
  std::vector<std::size_t> at(c.records);
  for (std::size_t k = 0; k < c.records; ++k) at[k] = c.records == 1 ? steps : (k * steps) / (c.records - 1);
  return at;
}

void validate(const Measure& m, const SdeConfig& c) {
  if (m.dim() != 1) throw Unsupported("Langevin simulation is implemented on the line only");
  if (!(c.dt > 0.0) || !(c.horizon > 0.0)) throw BadParameter("dt and horizon must be positive");
  if (c.outer < 2 || c.inner < 1) throw BadParameter("need at least two outer starts and one inner path");
  if (!(c.taming > 0.0)) throw BadParameter("taming threshold must be positive");
  if (c.records < 2) throw BadParameter("need at least two recorded times");
}

// Var over i of the inner means, minus the mean inner-sample variance / inner.
double corrected_variance(const std::vector<double>& mean, const std::vector<double>& within, std::size_t inner,
                          const std::vector<std::size_t>* pick = nullptr) {
  const std::size_t n = pick ? pick->size() : mean.size();
  double mu = 0.0, noise = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = pick ? (*pick)[k] : k;
    mu += mean[i];
    noise += within[i];
  }
  mu /= double(n);
  double v = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = pick ? (*pick)[k] : k;
    v += (mean[i] - mu) * (mean[i] - mu);
  }
  v /= double(n - 1);
  return std::max(0.0, v - noise / double(n) / double(inner));
}

}  // namespace

SdeFields::SdeFields(const Measure& m, const Weight& w, bool drop_weight_gradient)
    : V_(m.potential()), w2_(w.omega2_field()), drop_(drop_weight_gradient) {}

double SdeFields::drift(double x) const {
  const Dual w2 = w2_.jet(x);
  const double b = -w2.v * V_.jet(x).d;
  return drop_ ? b : b + w2.d;
}

double SdeFields::diffusion(double x) const { return std::sqrt(2.0 * w2_(x)); }

DecayTrajectory simulate(const Measure& m, const Weight& w, const std::function<double(double)>& f,
                         const SdeConfig& config) {
  validate(m, config);
  const SdeFields fields(m, w, config.drop_weight_gradient);
  const Stepper stepper{fields, config.dt, config.taming};
  const auto at = record_steps(config);
  const std::size_t R = at.size(), n = config.outer, J = config.inner;
  const auto starts = m.sample_reduced(n, config.seed);

  // Per start and recorded time: mean of f over the inner paths and its unbiased sample variance.
  std::vector<double> mean(n * R, 0.0), within(n * R, 0.0);
  std::atomic<std::size_t> tamed{0};
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> sum(R, 0.0), sq(R, 0.0);
    std::size_t local_tamed = 0;
    for (std::size_t j = 0; j < J; ++j) {
      CounterRng rng(config.seed, i * J + j + 1);
      std::normal_distribution<double> normal;
      double x = starts[i];
      std::size_t step = 0;
      for (std::size_t k = 0; k < R; ++k) {
        for (; step < at[k]; ++step) local_tamed += stepper.step(x, normal(rng));
        const double v = f(x);
        sum[k] += v;
        sq[k] += v * v;
      }
    }
    for (std::size_t k = 0; k < R; ++k) {
      const double mu = sum[k] / double(J);
      mean[k * n + i] = mu;
      within[k * n + i] = J > 1 ? std::max(0.0, (sq[k] - double(J) * mu * mu) / double(J - 1)) : 0.0;
    }
    tamed += local_tamed;
  });

  DecayTrajectory traj;
  const double total_steps = double(n) * double(J) * double(at.back());
  traj.taming_fraction = total_steps > 0 ? double(tamed) / total_steps : 0.0;
  if (traj.taming_fraction > 0.01) throw StepTooLarge("taming active on " + std::to_string(100 * traj.taming_fraction) + "% of steps");

  // Bootstrap over the outer starts with a fixed resampling stream.
  std::vector<std::vector<std::size_t>> picks(config.bootstrap, std::vector<std::size_t>(n));
  CounterRng boot(config.seed, 0);
  for (auto& p : picks)
    for (auto& i : p) i = static_cast<std::size_t>(boot.uniform() * double(n)) % n;

  for (std::size_t k = 0; k < R; ++k) {
    const std::vector<double> mk(mean.begin() + k * n, mean.begin() + (k + 1) * n);
    const std::vector<double> wk(within.begin() + k * n, within.begin() + (k + 1) * n);
    traj.times.push_back(double(at[k]) * config.dt);
    traj.var.push_back(corrected_variance(mk, wk, J));
    double s = 0.0, s2 = 0.0;
    for (const auto& p : picks) {
      const double v = corrected_variance(mk, wk, J, &p);
      s += v;
      s2 += v * v;
    }
    const double B = double(std::max<std::size_t>(config.bootstrap, 2));
    const double sd = config.bootstrap > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / B) / (B - 1))) : 0.0;
    traj.ci.push_back(1.96 * sd);
  }

  // Least-squares slope of ln var over the leading window where var is resolved above 3 CI.
  std::size_t last = 0;
  while (last + 1 < R && traj.var[last + 1] > 3.0 * traj.ci[last + 1]) ++last;
  if (last >= 1) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double cnt = double(last + 1);
    for (std::size_t k = 0; k <= last; ++k) {
      const double t = traj.times[k], y = std::log(traj.var[k]);
      st += t, sy += y, stt += t * t, sty += t * y;
    }
    traj.fitted_rate = -(cnt * sty - st * sy) / (cnt * stt - st * st);
    traj.fit_t0 = traj.times.front();
    traj.fit_t1 = traj.times[last];
  }
  return traj;
}

DecayCheck check_decay(const DecayTrajectory& traj, double C_bound) {
  if (!(C_bound > 0.0)) throw BadParameter("decay bound needs C > 0");
  DecayCheck c;
  c.fitted_rate = traj.fitted_rate;
  c.predicted_rate = std::isinf(C_bound) ? 0.0 : 2.0 / C_bound;
  if (std::isinf(C_bound) || traj.var.empty()) {
    c.pass = true;
    return c;
  }
  c.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.var.size(); ++k) {
    const double excess = traj.var[k] - std::exp(-c.predicted_rate * traj.times[k]) * traj.var[0] - 3.0 * traj.ci[k];
    if (excess > c.worst_excess) c.worst_excess = excess, c.worst_time = traj.times[k];
  }
  c.pass = c.worst_excess <= 0.0;
  return c;
}

StationarityReport stationarity_check(const Measure& m, const Weight& w, const SdeConfig& config) {
  validate(m, config);
  const SdeFields fields(m, w, config.drop_weight_gradient);
  const Stepper stepper{fields, config.dt, config.taming};
  const auto steps = static_cast<std::size_t>(std::llround(config.horizon / config.dt));
  auto x = m.sample_reduced(config.outer, config.seed);
  parallel_for(x.size(), [&](std::size_t i) {
    CounterRng rng(config.seed, i + 1);
    std::normal_distribution<double> normal;
    for (std::size_t s = 0; s < steps; ++s) stepper.step(x[i], normal(rng));
  });
  std::sort(x.begin(), x.end());
  StationarityReport r;
  r.n = x.size();
  const double n = double(r.n);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = m.cdf(x[i]);
    r.ks = std::max({r.ks, F - double(i) / n, double(i + 1) / n - F});
  }
  r.critical = 1.628 / std::sqrt(n);
  r.pass = r.ks <= r.critical;
  return r;
}

}  // namespace fiq
