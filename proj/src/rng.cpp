#include "advsmooth/rng.hpp"

#include <cmath>

namespace advsmooth {

Vector uniform_in_box(Rng& rng, const Vector& lo, const Vector& hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
  return v;
}

Vector standard_normal(Rng& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& c : v) c = g(rng);
  return v;
}

Vector uniform_in_ball(Rng& rng, std::size_t dim, const NormBall& ball) {
  const auto n = static_cast<Eigen::Index>(dim);
  const Vector lo = Vector::Constant(n, -ball.epsilon);
  const Vector hi = Vector::Constant(n, ball.epsilon);
  if (ball.p == Norm::LInf || ball.epsilon == 0.0) return uniform_in_box(rng, lo, hi);
  if (dim > 4) {
    // Rejection is hopeless in high dimension; direction times radius U^(1/d).
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector v = standard_normal(rng, dim);
    const double r = ball.epsilon * std::pow(u(rng), 1.0 / static_cast<double>(dim));
    return v * (r / v.norm());
  }
  for (;;) {
    Vector v = uniform_in_box(rng, lo, hi);
    if (v.norm() <= ball.epsilon) return v;
  }
}

}  // namespace advsmooth
