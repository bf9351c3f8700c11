#pragma once

#include <fiq/lyapunov.hpp>
#include <fiq/measures.hpp>
#include <fiq/rates.hpp>
#include <fiq/weight.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fiq {

// direct:      Var(f) <= C int |grad f|^2 omega^2
// converse:    inf_a int (f - a)^2 / omega^2 <= C int |grad f|^2
// log_sobolev: Ent(f^2) <= C int |grad f|^2 omega^2
enum class ConstantKind { direct, converse, log_sobolev };
std::string to_string(ConstantKind k);

struct WeightedConstant {
  Weight weight;
  double value = 0.0;
  ConstantKind kind = ConstantKind::direct;
  std::string provenance;
  std::map<std::string, double> params;
};

// Best of the closed-form bounds for the generalized Cauchy law with omega^2 = 1 + |x|^2.
WeightedConstant cauchy_weighted_constant(double alpha, int d = 1);
// 1/(alpha + d) when alpha >= d + 2, else the optimized change-of-function bound from the direct constant.
WeightedConstant cauchy_converse_constant(double alpha, int d = 1);
// C / (1 - sqrt(C g^2))^2 for a direct constant C and |grad omega| <= g.
WeightedConstant converse_from_direct(const WeightedConstant& direct, double grad_bound = 1.0);

// Converse bound C/eps from F = (1 + |x|^2)^{k/2 + 1}, phi(u) = eps (k + 2) u^{k/(k+2)}; needs
// 0 < k < min(2, alpha) and 0 < eps < alpha - k.
WeightedConstant cauchy_lyapunov_converse(double alpha, int d, double k, double eps);
// The same, minimized over 32 x 32 grids in (k, eps).
WeightedConstant cauchy_lyapunov_converse(double alpha, int d);

// C(d) R^2 exp(Osc_{B(0,R)} V).
double ball_poincare_bound(const Measure& m, double R);
// sup_{B(0,R)} omega^2 times the ball bound; controls the weighted constant of the restriction.
double weighted_ball_bound(const Measure& m, const Weight& w, double R);

struct LyapunovWeights {
  WeightedConstant direct;     // omega^2 = 1 + 1/phi'(F)
  WeightedConstant converse;   // omega^2 = F / phi(F)
  WeightedConstant alternate;  // omega^2 = 1 + |grad F|^2 / phi^2(F)
};
// From a verified phi-certificate; the ball constant defaults to ball_poincare_bound(m, R).
LyapunovWeights weight_from_phi_lyapunov(const LyapunovCertificate& cert, const Measure& m,
                                         std::optional<double> ball_constant = std::nullopt);

// e^{-m_U} C with omega e^{U/2}; e^{Osc U} C with omega when the oscillation is given.
WeightedConstant perturb_bounded(const WeightedConstant& c, const Potential& U, double m_U,
                                 std::optional<double> osc_U = std::nullopt);

// sup |grad U|^2 omega^2 over the reference grid of nu.
double lipschitz_sup_term(const Weight& w, const Potential& U, const Measure& nu);
// sup (|grad U|^2 omega^2 / 2 + L^omega_{U+W} U)_+ over the reference grid of nu = e^{-W}.
double generator_sup_term(const Weight& w, const Potential& U, const Measure& nu);

// (1 + 1/eps) C / (1 - s) with s = C (1 + eps) sup / 4.
WeightedConstant perturb_weighted_lipschitz(const WeightedConstant& c, double sup_gradU2w2, double eps);
// Best over a 32-point eps grid and the exact optimum eps = 1/sqrt(a) - 1, a = C sup / 4.
WeightedConstant perturb_weighted_lipschitz(const WeightedConstant& c, double sup_gradU2w2);
// C / (1 - s) with s = C sup / 2.
WeightedConstant perturb_weighted_generator(const WeightedConstant& c, double sup_term);
// (1 + C_R) / (theta - theta') from a verified weighted Lyapunov check.
WeightedConstant perturb_weighted_lyapunov(const WeightedLyapunovReport& check, double ball_constant,
                                           const Weight& w);

// beta(s) = C / G(s), G(s) = inf{u : mu(omega^2 >= 1/u) > s}, for a converse constant.
RateFunction weak_rate_from_converse(const WeightedConstant& c, const Measure& m);

// a / (4 beta(a/4)), 0 < a <= 1/2.
double capacity_lower_bound(const RateFunction& beta, double a);
// omega^2(x) = 1 / (4 beta(s(|x - x0|)/4)) with s(r) = mu(|x - x0| > r).
Weight explicit_weight_from_rate(const RateFunction& beta, const Measure& m, double x0 = 0.0);
// int (f - m)^2 omega^2 <= 16 C int |grad f|^2, stored as a converse constant with weight 1/omega.
WeightedConstant converse_weighted_from_capacity(const Weight& w, double C);

enum class LsCase { bounded, lipschitz, lipschitz_alt, generator, lyapunov };
std::string to_string(LsCase c);
LsCase ls_case_from_string(const std::string& s);

struct LsPerturbParams {
  Potential U;
  // bounded case
  double m_U = 0.0;
  std::optional<double> osc_U;
  // lipschitz: sup |grad U|^2 omega^2; generator: sup (|grad U|^2 omega^2 / 2 + L U)_+
  double sup_term = 0.0;
  // alpha -> int e^{alpha U} d mu (may return +inf)
  std::function<double(double)> exp_moment;
  // int e^{U^-} d nu
  double neg_exp_mass = 1.0;
  // Free parameters; unset ones are optimized on 32-point grids.
  std::optional<double> eps, eps_prime, alpha;
  // lyapunov case
  std::optional<WeightedLyapunovReport> check;
};

struct LsPerturbation {
  bool exists = false;
  std::optional<WeightedConstant> constant;  // empty for the qualitative lyapunov case
  std::string note;
};

// alpha/(alpha-1) [(1 + 1/eps) C_LS + (2 + beta + I/alpha) (1 + 1/eps') C_P / (1 - s)]
double ls_lipschitz_bound(double C_LS, double C_P, double s, double beta, double eps, double eps_prime, double alpha,
                          double exp_moment);
// I (1 + 1/eps) / (1 - s) ((2 - s) C_LS + (2 + ln I) C_P), I = int e^{U^-} d nu
double ls_lipschitz_alt_bound(double C_LS, double C_P, double s, double eps, double neg_exp_mass);
// alpha/(alpha-1) [C_LS + (2 + beta + I/alpha) C_P / (1 - s)]
double ls_generator_bound(double C_LS, double C_P, double s, double beta, double alpha, double exp_moment);

LsPerturbation ls_perturb(const WeightedConstant& c_ls, const WeightedConstant& c_p, LsCase which,
                          const LsPerturbParams& p);

// Weight algebra. Translation and maps act on the reduced coordinate.
WeightedConstant translate(const WeightedConstant& c, double x);
WeightedConstant scale(const WeightedConstant& c, double lambda);
// T L-Lipschitz with inverse T_inv: L^2 C, omega(T^{-1}(z)).
WeightedConstant lipschitz_map(const WeightedConstant& c, double L, const Field& T_inv);

// Product law: constant max_i C_i with omega_i acting on coordinate i.
struct TensorDescriptor {
  double value = 0.0;
  std::vector<Weight> weights;
  double weight2(const std::vector<double>& z, std::size_t i) const { return weights.at(i).omega2(z.at(i)); }
};
TensorDescriptor tensorize(const std::vector<WeightedConstant>& cs);

// Law of Z_1 + ... + Z_n: constant 1 with the field sum_i C_i omega_i^2(Z_i).
struct ConvolutionDescriptor {
  std::vector<double> constants;
  std::vector<Weight> weights;
  double field(const std::vector<double>& z) const;
  // Monte-Carlo mean of the field under independent Z_i ~ laws[i].
  struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
  };
  Estimate mean(const std::vector<Measure>& laws, std::size_t n, std::uint64_t seed) const;
};
ConvolutionDescriptor convolve(const std::vector<WeightedConstant>& cs);

}  // namespace fiq
