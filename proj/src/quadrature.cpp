#include "advsmooth/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "advsmooth/types.hpp"

namespace advsmooth {

namespace {

// Returns P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("Gauss-Legendre order must be >= 1");
  if (n == 1) return {{0.0}, {2.0}};
  QuadratureRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    r.nodes[lo] = -x;
    r.nodes[hi] = x;
    r.weights[lo] = r.weights[hi] = w;
  }
  if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

QuadratureRule composite_gauss_legendre(double a, double b, int panels, int order) {
  if (!(b > a)) throw ConfigError("quadrature interval needs a < b");
  if (panels < 1) throw ConfigError("quadrature needs at least one panel");
  const QuadratureRule base = gauss_legendre(order);
  const double h = (b - a) / panels;
  QuadratureRule r;
  r.nodes.reserve(static_cast<std::size_t>(panels * order));
  r.weights.reserve(r.nodes.capacity());
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (std::size_t k = 0; k < base.nodes.size(); ++k) {
      r.nodes.push_back(mid + 0.5 * h * base.nodes[k]);
      r.weights.push_back(0.5 * h * base.weights[k]);
    }
  }
  return r;
}

}  // namespace advsmooth
