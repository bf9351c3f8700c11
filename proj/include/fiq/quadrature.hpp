#pragma once

#include <functional>
#include <vector>

namespace fiq {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [-1, 1].
const GaussRule& gauss_legendre(int n);

// Integral of g over [a, b] (either end may be infinite). The variable t = scale * tan(theta) turns
// algebraic tails into bounded integrands; panels are refined geometrically towards both ends and
// towards t = 0, where potentials such as |x|^alpha have a cusp.
double integrate(const std::function<double(double)>& g, double a, double b, double scale = 1.0);

}  // namespace fiq
