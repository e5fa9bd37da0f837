#pragma once

#include <vector>

namespace advsmooth {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
QuadratureRule gauss_legendre(int n);

/// `panels` equal panels over [a, b], each with an `order`-point rule.
QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order);

}  // namespace advsmooth
