#pragma once

#include <fiq/field.hpp>
#include <fiq/measures.hpp>
#include <fiq/weight.hpp>

#include <map>
#include <string>
#include <vector>

namespace fiq {

// L^omega f = omega^2 Lap f + (grad omega^2 - omega^2 grad V) . grad f, evaluated in the reduced
// coordinate (radial Laplacian f'' + (d - 1) f' / r when d >= 2).
class WeightedGenerator {
 public:
  WeightedGenerator(Field V, Weight w, int dim = 1);
  WeightedGenerator(const Measure& m, Weight w = Weight::unit());

  double apply(const Field& f, double t) const;
  double drift(double t) const;
  double diffusion(double t) const;
  const Field& potential() const { return V_; }
  const Weight& weight() const { return w_; }
  int dim() const { return dim_; }

 private:
  Field V_;
  Weight w_;
  int dim_ = 1;
};

// Plain L_V f = Lap f - grad V . grad f.
double apply_generator(const Field& V, const Field& f, double t, int dim = 1);
double apply_generator(const WeightedGenerator& gen, const Field& f, double t);

enum class Variant { weak, phi, weighted };
std::string to_string(Variant v);

struct VerificationReport {
  bool verified = false;
  double max_violation = 0.0;  // relative to max(|LHS|, |RHS|, 1)
  double witness = 0.0;        // grid point of the worst violation
  double min_F = 0.0;
  double tolerance = 1e-9;
  std::size_t points = 0;
};

// Drift certificate. weak:     L_V F / F <= -phi(x) + b 1_{|x| <= R}
//                   phi:      L_V F <= -phi(F) + b 1_{|x| <= R}   (phi is a field of u = F)
//                   weighted: L^omega F <= -theta F + b 1_{|x| <= R}
struct LyapunovCertificate {
  Variant variant = Variant::weak;
  Field F;
  // ln F when known in closed form; keeps F'/F finite where F overflows.
  Field log_F;
  Field phi;
  double b = 0.0;
  double R = 0.0;
  double theta = 0.0;
  Weight weight;
  std::map<std::string, double> params;
  std::string label;
  VerificationReport report;
};

// Tan-spaced grid on [-R_trunc, R_trunc] (line) or [0, R_trunc] (radial).
std::vector<double> lyapunov_grid(const Measure& m, int n = 4096);

VerificationReport verify_certificate(const LyapunovCertificate& cert, const Measure& m, const std::vector<double>& grid,
                                      double tol = 1e-9);
VerificationReport verify_certificate(const LyapunovCertificate& cert, const Measure& m, double tol = 1e-9);

// L_V F / F as a field.
Field drift_ratio(const Field& F, const Measure& m);

// Global weak certificate from the far-field inequality L_V F / F <= -phi on |x| >= K:
// b = 2M with M = max(|L_V F / F|, |phi|) over the ball, R = K.
LyapunovCertificate normalize_far_field(const Field& F, const Field& phi, double K, const Measure& m);

struct FarFieldFit {
  double c = 0.0;  // phi = c * shape
  double K = 0.0;
};
// Largest admissible prefactor for phi = c * shape at infinity, reduced by the safety margin, and the
// radius beyond which the inequality holds on the grid.
FarFieldFit fit_far_field(const Field& F, const Field& shape, const Measure& m, double margin = 0.9);

// F = (1 + |x|^2)^k with k = 1 + alpha/4 (or the supplied k), phi = c / (1 + |x|^2).
LyapunovCertificate cauchy_certificate(const Measure& m, double k = 0.0);
// phi-variant: F = (1 + |x|^2)^{k/2 + 1}, phi(u) = eps (k + 2) u^{k/(k+2)}, R^2 = (d + eps)/(alpha - k - eps),
// b = (k + 2)((d + alpha - k) + eps (1 + R^2)^{k/2}); needs 0 < k <= 2, k < alpha, 0 < eps < alpha - k.
LyapunovCertificate cauchy_phi_certificate(const Measure& m, double k, double eps);
// F = exp(gamma (1 + |x|^2)^{alpha/2}), phi = c (1 + |x|^2)^{alpha - 1}.
LyapunovCertificate subbotin_certificate(const Measure& m, double gamma = 0.5);
// F = exp(|x|^2 / 4), phi = c (1 + |x|^2).
LyapunovCertificate gaussian_certificate(const Measure& m);
// Dispatch on the family of m.
LyapunovCertificate default_certificate(const Measure& m);

struct PerturbedDrift {
  Field phi_U;
  bool positive_outside = true;
  double min_outside = 0.0;
  double witness = 0.0;
};

// phi_U = phi + <grad U, grad F> / F; positivity checked outside the certificate ball.
PerturbedDrift perturbed_drift(const LyapunovCertificate& cert, const Potential& U, const Measure& nu);

struct WeightedLyapunovReport {
  bool verified = false;
  double drift_violation = 0.0;
  double side_violation = 0.0;
  double witness = 0.0;
  double theta = 0.0;
  double theta_prime = 0.0;
  double b = 0.0;
  double R = 0.0;
  std::string reason;
};

// Checks L_W^omega F <= -theta F + b 1_{|x| <= R} and -omega^2 grad U . grad F <= theta' F on the grid.
WeightedLyapunovReport weighted_lyapunov_check(const Weight& w, const Measure& W, const Field& F, double theta, double b,
                                               double R, const Potential& U, double theta_prime);

// Data for F = omega^2 = 1 + |x|^2 on a Cauchy base: R solves |x|^2/(1+|x|^2) = (2 + theta)/(4(beta - 1))
// with beta = (alpha + d)/2 (d = 1), and b = (2 + theta) omega^2(R). Radial d >= 2 uses the grid.
LyapunovCertificate cauchy_weighted_certificate(const Measure& m, double theta);

}  // namespace fiq
