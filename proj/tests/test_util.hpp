#pragma once

#include <functional>

#include "advsmooth/types.hpp"

namespace test {

using advsmooth::Matrix;
using advsmooth::Vector;

inline Vector fd_grad(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
  Matrix J;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector p = x, m = x;
    p[i] += h;
    m[i] -= h;
    const Vector c = (f(p) - f(m)) / (2 * h);
    if (i == 0) J.resize(c.size(), x.size());
    J.col(i) = c;
  }
  return J;
}

template <class T>
double max_abs(const T& m) {
  return m.cwiseAbs().maxCoeff();
}

}  // namespace test
