#include "advsmooth/probes.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "advsmooth/rng.hpp"

namespace advsmooth {

// ---------------------------------------------------------------------------
// Regions and pair sampling

Region Region::box(const Vector& lo, const Vector& hi) {
  Region r;
  r.lo = lo;
  r.hi = hi;
  return r;
}

Region Region::square(std::size_t dim, double half_width) {
  const auto n = static_cast<Eigen::Index>(dim);
  return box(Vector::Constant(n, -half_width), Vector::Constant(n, half_width));
}

void Region::validate() const {
  if (lo.size() == 0 || lo.size() != hi.size()) throw ConfigError("region box bounds must share a dimension");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw ConfigError("region box needs lo <= hi per coordinate");
  if (predicate == RegionPredicate::NormAtLeast && !(theta_min > 0.0))
    throw ConfigError("norm_at_least region needs theta_min > 0");
  if (predicate == RegionPredicate::FixedOrthant) {
    if (orthant.size() != static_cast<std::size_t>(lo.size()))
      throw ConfigError("orthant sign pattern must match the region dimension");
    for (int s : orthant)
      if (s != 1 && s != -1) throw ConfigError("orthant signs must be +1 or -1");
  }
}

bool Region::contains(const Vector& theta) const {
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (theta[i] < lo[i] || theta[i] > hi[i]) return false;
  switch (predicate) {
    case RegionPredicate::None: return true;
    case RegionPredicate::NormAtLeast: return theta.norm() >= theta_min;
    case RegionPredicate::FixedOrthant:
      for (Eigen::Index i = 0; i < theta.size(); ++i)
        if (orthant[static_cast<std::size_t>(i)] * theta[i] <= 0.0) return false;
      return true;
  }
  return true;
}

std::string Region::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "box[";
  for (Eigen::Index i = 0; i < lo.size(); ++i) os << (i ? ", " : "") << "[" << lo[i] << ", " << hi[i] << "]";
  os << "]";
  if (predicate == RegionPredicate::NormAtLeast) os << " & ||theta|| >= " << theta_min;
  if (predicate == RegionPredicate::FixedOrthant) {
    os << " & orthant(";
    for (std::size_t i = 0; i < orthant.size(); ++i) os << (orthant[i] > 0 ? "+" : "-");
    os << ")";
  }
  return os.str();
}

namespace {

constexpr int kMaxRejections = 100000;

Vector draw_in_region(const Region& region, Rng& rng) {
  for (int k = 0; k < kMaxRejections; ++k) {
    Vector v = uniform_in_box(rng, region.lo, region.hi);
    if (region.contains(v)) return v;
  }
  throw EmptyRegionError("region predicate rejected every sample: " + region.describe());
}

}  // namespace

Vector sample_region(const Region& region, std::uint64_t seed) {
  region.validate();
  Rng rng(seed);
  return draw_in_region(region, rng);
}

std::vector<PairSample> sample_pairs(const Region& region, std::size_t n_pairs, double min_sep,
                                     std::uint64_t seed) {
  region.validate();
  if (n_pairs < 1) throw ConfigError("n_pairs must be >= 1");
  if (!(min_sep > 0.0)) throw ConfigError("min_separation must be > 0");
  if (min_sep > region.diameter())
    throw EmptyRegionError("min_separation exceeds the region diameter: " + region.describe());

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r_hi = std::max(min_sep, region.diameter() / 4.0);
  const auto dim = static_cast<std::size_t>(region.lo.size());

  std::vector<PairSample> pairs;
  pairs.reserve(n_pairs);
  int misses = 0;
  while (pairs.size() < n_pairs) {
    Vector a = draw_in_region(region, rng);
    Vector b;
    if (pairs.size() % 2 == 0) {
      b = draw_in_region(region, rng);
    } else {
      const double r = min_sep * std::pow(r_hi / min_sep, unit(rng));
      Vector u = standard_normal(rng, dim);
      b = a + r * u / u.norm();
    }
    if (!region.contains(b) || (a - b).norm() < min_sep) {
      if (++misses > kMaxRejections)
        throw EmptyRegionError("no admissible pair with separation >= min_separation in " + region.describe());
      continue;
    }
    misses = 0;
    pairs.push_back({std::move(a), std::move(b)});
  }
  return pairs;
}

double pair_ratio(const VectorFn& map, const Vector& a, const Vector& b) {
  return (map(a) - map(b)).norm() / (a - b).norm();
}

LipschitzEstimate lipschitz_ratio_estimate(const VectorFn& map, const Region& region, std::size_t n_pairs,
                                           double min_sep, std::uint64_t seed) {
  LipschitzEstimate est;
  est.min_separation = min_sep;
  for (const auto& p : sample_pairs(region, n_pairs, min_sep, seed)) {
    const double r = pair_ratio(map, p.a, p.b);
    if (!std::isfinite(r)) throw NumericError("non-finite Lipschitz ratio");
    if (est.pair_count == 0 || r > est.sup_ratio) {
      est.sup_ratio = r;
      est.argmax_a = p.a;
      est.argmax_b = p.b;
    }
    ++est.pair_count;
  }
  return est;
}

// ---------------------------------------------------------------------------
// smoothness constants: sups of the derivative ratios over sampled pairs

std::string ProbeReport::to_json() const {
  nlohmann::json j;
  j["estimator"] = "empirical supremum over sampled pairs";
  j["C_theta"] = c_theta;
  j["C_theta_theta"] = c_theta_theta;
  j["C_theta_x"] = c_theta_x;
  j["curvature_c"] = curvature_c ? nlohmann::json(*curvature_c) : nlohmann::json(nullptr);
  j["spectral_norm"] = spectral_norm ? nlohmann::json(*spectral_norm) : nlohmann::json(nullptr);
  j["epsilon_sharpness"] = epsilon_sharpness ? nlohmann::json(*epsilon_sharpness) : nlohmann::json(nullptr);
  j["region"] = region;
  j["x_radius"] = x_radius;
  j["seed"] = seed;
  j["n_pairs"] = n_pairs;
  j["min_separation"] = min_separation;
  return j.dump(2);
}

namespace {

InputPoint draw_near(const InputPoint& center, double radius, Rng& rng) {
  const auto d = center.size();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double pick = unit(rng);
  Vector off(d);
  if (pick < 0.25) {
    for (Eigen::Index i = 0; i < d; ++i) off[i] = unit(rng) < 0.5 ? -radius : radius;
  } else if (pick < 0.5) {
    Vector u = standard_normal(rng, static_cast<std::size_t>(d));
    off = radius * u / u.norm();
  } else {
    off = uniform_in_box(rng, Vector::Constant(d, -radius), Vector::Constant(d, radius));
  }
  return center + off;
}

}  // namespace

ProbeReport estimate_assumption1_constants(const Model& model, const Region& region, const LabeledDataset& data,
                                           double x_radius, std::size_t n_pairs, std::uint64_t seed,
                                           double min_sep) {
  if (data.empty()) throw ConfigError("dataset must be non-empty");
  if (!(x_radius >= 0.0)) throw ConfigError("x_radius must be >= 0");
  ProbeReport rep;
  rep.region = region.describe();
  rep.x_radius = x_radius;
  rep.seed = seed;
  rep.n_pairs = n_pairs;
  rep.min_separation = min_sep;

  const auto theta_pairs = sample_pairs(region, n_pairs, min_sep, mix_seed(seed, 0));
  Rng rng(mix_seed(seed, 1));
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  for (const auto& p : theta_pairs) {
    const Example& ex = data[pick(rng)];
    const InputPoint x = draw_near(ex.x, x_radius, rng);
    const auto g1 = model.loss_and_grads(p.a, x, ex.y);
    const auto g2 = model.loss_and_grads(p.b, x, ex.y);
    const double sep = (p.a - p.b).norm();
    rep.c_theta = std::max(rep.c_theta, std::abs(g1.loss - g2.loss) / sep);
    rep.c_theta_theta = std::max(rep.c_theta_theta, (g1.grad_theta - g2.grad_theta).norm() / sep);
  }

  if (x_radius > 0.0) {
    Rng rt(mix_seed(seed, 2));
    std::size_t done = 0;
    int misses = 0;
    while (done < n_pairs) {
      const Vector theta = draw_in_region(region, rt);
      const Example& ex = data[pick(rt)];
      const InputPoint x1 = draw_near(ex.x, x_radius, rt);
      const InputPoint x2 = draw_near(ex.x, x_radius, rt);
      const double sep = (x1 - x2).norm();
      if (sep < min_sep) {
        if (++misses > kMaxRejections) throw EmptyRegionError("x-box too small for min_separation");
        continue;
      }
      const auto g1 = model.loss_and_grads(theta, x1, ex.y);
      const auto g2 = model.loss_and_grads(theta, x2, ex.y);
      rep.c_theta_x = std::max(rep.c_theta_x, (g1.grad_theta - g2.grad_theta).norm() / sep);
      ++done;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Finite differences and spectral norms

Vector fd_gradient(const ScalarFn& f, const Vector& theta, double h) {
  Vector g(theta.size());
  Vector tp = theta, tm = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    tp[j] = theta[j] + h;
    tm[j] = theta[j] - h;
    g[j] = (f(tp) - f(tm)) / (2.0 * h);
    tp[j] = tm[j] = theta[j];
  }
  return g;
}

Matrix fd_jacobian(const VectorFn& f, const Vector& theta, double h) {
  Vector tp = theta, tm = theta;
  Matrix J;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    tp[j] = theta[j] + h;
    tm[j] = theta[j] - h;
    const Vector col = (f(tp) - f(tm)) / (2.0 * h);
    if (j == 0) J.resize(col.size(), theta.size());
    J.col(j) = col;
    tp[j] = tm[j] = theta[j];
  }
  return J;
}

Matrix fd_hessian(const ScalarFn& f, const Vector& theta, double h) {
  const auto n = theta.size();
  Matrix H(n, n);
  const double f0 = f(theta);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    H(i, i) = (f(tp) - 2.0 * f0 + f(tm)) / (h * h);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Vector pp = theta, pm = theta, mp = theta, mm = theta;
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      H(i, j) = H(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
    }
  }
  return H;
}

SpectralEstimate hessian_spectral_norm(const VectorFn& grad, const Vector& theta, double tol, int max_iter,
                                       double h, std::uint64_t seed) {
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  Rng rng(seed);
  Vector v = standard_normal(rng, static_cast<std::size_t>(theta.size()));
  v.normalize();
  SpectralEstimate est;
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector w = (grad(theta + h * v) - grad(theta - h * v)) / (2.0 * h);
    const double lambda = w.norm();
    est.value = lambda;
    est.iterations = it;
    if (!std::isfinite(lambda)) throw NumericError("non-finite Hessian-vector product");
    if (lambda == 0.0) {
      est.converged = true;
      return est;
    }
    if (it > 1 && std::abs(lambda - prev) <= tol * lambda) {
      est.converged = true;
      return est;
    }
    prev = lambda;
    v = w / lambda;
  }
  return est;
}

SpectralEstimate hessian_spectral_norm(const ScalarFn& lossfn, const Vector& theta, double tol, int max_iter,
                                       double h, std::uint64_t seed) {
  VectorFn grad = [&lossfn](const Vector& t) { return fd_gradient(lossfn, t, 1e-5); };
  return hessian_spectral_norm(grad, theta, tol, max_iter, h, seed);
}

// ---------------------------------------------------------------------------
// Optimum characterization

InteriorCheck interior_optimum_check(const Model& model, const ParamVector& theta, const InputPoint& x,
                                     const InputPoint& x_prime, Label y, const NormBall& ball, double tol_grad,
                                     double tol_eig) {
  InteriorCheck c;
  c.grad_norm = model.loss_and_grads(theta, x_prime, y).grad_x.norm();
  c.is_stationary = c.grad_norm < tol_grad;
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.hess_x(theta, x_prime, y));
  c.max_eig = es.eigenvalues().maxCoeff();
  c.c = c.max_eig < 0.0 ? -c.max_eig : 0.0;
  c.negative_definite = c.max_eig < -tol_eig;
  c.strictly_interior = norm_of(x_prime - x, ball.p) < ball.epsilon - 1e-6;
  return c;
}

BorderedHessianCheck bordered_hessian_check(const Model& model, const ParamVector& theta, const InputPoint& x,
                                            const InputPoint& x_prime, Label y) {
  const Vector diff = x_prime - x;
  const double r = diff.norm();
  if (r == 0.0) throw NumericError("bordered Hessian undefined: x' == x has no constraint normal");
  const auto d = x.size();
  const Vector n = diff / r;
  const Vector g = model.loss_and_grads(theta, x_prime, y).grad_x;

  BorderedHessianCheck out;
  out.mu = n.dot(g);
  out.stationarity_residual = (g - out.mu * n).norm();
  const Matrix norm_hess = Matrix::Identity(d, d) / r - diff * diff.transpose() / (r * r * r);
  out.matrix = Matrix::Zero(d + 1, d + 1);
  out.matrix.block(0, 1, 1, d) = n.transpose();
  out.matrix.block(1, 0, d, 1) = n;
  out.matrix.block(1, 1, d, d) = model.hess_x(theta, x_prime, y) - out.mu * norm_hess;
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  out.determinant = out.matrix.determinant();
  Eigen::JacobiSVD<Matrix> svd(out.matrix);
  out.min_singular_value = svd.singularValues().minCoeff();
  return out;
}

ImplicitJacobian implicit_jacobian(const Model& model, const ParamVector& theta, const InputPoint& x,
                                   const InputPoint& x_prime, Label y, OptimumCase which, double tol) {
  const auto d = x.size();
  const Matrix C = model.cross_hess(theta, x_prime, y);
  ImplicitJacobian out;
  if (which == OptimumCase::BoundaryL2) {
    const auto bh = bordered_hessian_check(model, theta, x, x_prime, y);
    if (std::abs(bh.determinant) <= tol)
      throw SingularSystemError("bordered Hessian is singular (|det| = " + std::to_string(bh.determinant) + ")");
    Matrix rhs = Matrix::Zero(d + 1, C.cols());
    rhs.bottomRows(d) = -C;
    const Matrix sol = bh.matrix.fullPivLu().solve(rhs);
    out.jacobian = sol.bottomRows(d);
    out.range_projector = Matrix::Identity(d, d);
  } else {
    const Matrix H = model.hess_x(theta, x_prime, y);
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    const Vector& lam = es.eigenvalues();
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    Matrix pinv = Matrix::Zero(d, d);
    out.range_projector = Matrix::Zero(d, d);
    int rank = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(lam[i]) > tol * scale) {
        const Vector u = es.eigenvectors().col(i);
        pinv += u * u.transpose() / lam[i];
        out.range_projector += u * u.transpose();
        ++rank;
      }
    }
    if (rank == 0) throw SingularSystemError("Hessian in x vanishes at the optimum");
    out.rank_deficient = rank < d;
    if (out.rank_deficient) {
      // Consistent only if the cross term lies in range(H).
      const Matrix resid = C - out.range_projector * C;
      if (resid.norm() > 1e-6 * std::max(1.0, C.norm()))
        throw SingularSystemError("singular Hessian in x with an inconsistent sensitivity system");
    }
    out.jacobian = -pinv * C;
  }
  Eigen::JacobiSVD<Matrix> svd(out.jacobian);
  out.spectral_norm = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force maximization

namespace {

struct AscentResult {
  Vector v;
  double f = 0.0;
  int iterations = 0;
};

/// Projected gradient ascent with adaptive step. Step vectors are capped at
/// length ball.epsilon / 50 so that iterates follow the ascent path instead of
/// jumping across the feasible set.
AscentResult projected_ascent(const ScalarFn& f, const VectorFn& g, Vector v, const NormBall& ball,
                              int max_iter = 20000, double tol = 1e-10) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  const double cap = ball.epsilon / 50.0;
  AscentResult out;
  v = project(v, ball);
  double fv = f(v);
  Vector gv = g(v);
  double s = 0.0;
  int it = 0;
  for (; it < max_iter; ++it) {
    if ((project(v + gv, ball) - v).norm() < tol) break;
    const double gn = gv.norm();
    if (gn == 0.0) break;
    if (s == 0.0) s = cap / gn;
    const double len = std::min(s * gn, cap);
    if (len < 1e-16 * (1.0 + v.norm())) break;
    const Vector cand = project(v + (len / gn) * gv, ball);
    const double fc = f(cand);
    const Vector gc = g(cand);
    const double slack = 4.0 * kEps * std::max(1.0, std::abs(fv));
    const bool accept = fc > fv + slack || (fc >= fv - slack && gc.dot(cand - v) >= 0.0);
    if (accept && cand != v) {
      v = cand;
      fv = fc;
      gv = gc;
      s = len / gn * 2.0;
    } else {
      s = len / gn * 0.5;
    }
  }
  out.v = std::move(v);
  out.f = fv;
  out.iterations = it;
  return out;
}

}  // namespace

AttackResult argmax_oracle(const Model& model, const ParamVector& theta, const InputPoint& x, Label y,
                           const NormBall& ball, int resolution, int restarts, std::uint64_t seed) {
  ball.validate();
  const auto d = x.size();
  if (d > 3) throw UnsupportedError("argmax_oracle supports input dimension <= 3, got " + std::to_string(d));
  if (resolution < 2) throw ConfigError("oracle resolution must be >= 2");
  if (restarts < 1) throw ConfigError("oracle restarts must be >= 1");

  AttackResult r;
  if (ball.epsilon == 0.0) {
    r.delta = Vector::Zero(d);
    r.x_prime = x;
    r.achieved_loss = model.loss(theta, x, y);
    return r;
  }

  ScalarFn f = [&](const Vector& dl) { return model.loss(theta, x + dl, y); };
  VectorFn g = [&](const Vector& dl) { return model.loss_and_grads(theta, x + dl, y).grad_x; };

  // Grid over the bounding box, restricted to the ball.
  Vector grid_best;
  double grid_best_f = -std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  const double step = 2.0 * ball.epsilon / (resolution - 1);
  for (;;) {
    Vector dl(d);
    for (Eigen::Index i = 0; i < d; ++i) dl[i] = -ball.epsilon + step * idx[static_cast<std::size_t>(i)];
    if (norm_of(dl, ball.p) <= ball.epsilon) {
      const double fv = f(dl);
      if (fv > grid_best_f) {
        grid_best_f = fv;
        grid_best = dl;
      }
    }
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == resolution) idx[k++] = 0;
    if (k == idx.size()) break;
  }

  Rng rng(seed);
  Vector best;
  double best_f = -std::numeric_limits<double>::infinity();
  int total_iters = 0;
  auto consider = [&](const Vector& start) {
    const auto a = projected_ascent(f, g, start, ball);
    total_iters += a.iterations;
    if (best.size() == 0 || a.f > best_f + 1e-12) {
      best = a.v;
      best_f = a.f;
    }
  };
  consider(Vector::Zero(d));
  for (int k = 1; k < restarts; ++k) consider(uniform_in_ball(rng, static_cast<std::size_t>(d), ball));
  if (grid_best.size()) consider(grid_best);
  if (grid_best_f > best_f + 1e-12) {
    best = grid_best;
    best_f = grid_best_f;
  }

  r.x_prime = x + best;
  r.achieved_loss = best_f;
  r.on_boundary = on_ball_boundary(best, ball);
  r.iterations = total_iters;
  r.delta = std::move(best);
  return r;
}

SharpnessResult epsilon_sharpness(const ScalarFn& lossfn, const VectorFn& grad, const Vector& theta, double eps_s,
                                  int restarts, std::uint64_t seed) {
  if (!(eps_s > 0.0)) throw ConfigError("epsilon_sharpness needs eps_s > 0");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  const double l0 = lossfn(theta);
  const NormBall ball{Norm::L2, eps_s};
  ScalarFn f = [&](const Vector& v) { return lossfn(theta + v); };
  VectorFn g = [&](const Vector& v) { return grad(theta + v); };

  Rng rng(seed);
  double best = l0;
  for (int k = 0; k < restarts; ++k) {
    const Vector start = k == 0 ? Vector::Zero(theta.size())
                                : uniform_in_ball(rng, static_cast<std::size_t>(theta.size()), ball);
    best = std::max(best, projected_ascent(f, g, start, ball).f);
  }
  SharpnessResult out;
  out.value = (best - l0) / (1.0 + l0);
  out.spectral_norm = hessian_spectral_norm(grad, theta, 1e-10, 2000, 1e-4, seed).value;
  out.approximation = out.spectral_norm * eps_s * eps_s / (2.0 * (1.0 + l0));
  return out;
}

}  // namespace advsmooth
