#include "advsmooth/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "advsmooth/adversarial_loss.hpp"
#include "advsmooth/attacks.hpp"
#include "advsmooth/entropy.hpp"
#include "advsmooth/probes.hpp"
#include "advsmooth/rng.hpp"

namespace advsmooth {

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

// The single training point of the 2-D surface figures.
const Vector kX = v2(-1.0, 1.0);
constexpr Label kY = Label::Positive;
constexpr double kEps = 0.6;

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Collects sub-results; the check passes only if every sub-result holds.
struct Report {
  bool ok = true;
  std::ostringstream text;

  void expect(bool cond, const std::string& what) {
    if (!text.str().empty()) text << "; ";
    text << what << (cond ? "" : " [violated]");
    ok = ok && cond;
  }
};

double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

VectorFn closed_form_grad(const Model& m, const LabeledDataset& data, const NormBall& ball) {
  return [&m, &data, ball](const Vector& t) {
    return adversarial_batch_loss(m, t, data, {ball, AttackMethod::ClosedForm, {}}).grad;
  };
}

Region orthant_region(int s1, int s2) {
  Region r = Region::square(2, 2.0);
  r.predicate = RegionPredicate::FixedOrthant;
  r.orthant = {s1, s2};
  return r;
}

Region norm_region(double half, double theta_min) {
  Region r = Region::square(2, half);
  r.predicate = RegionPredicate::NormAtLeast;
  r.theta_min = theta_min;
  return r;
}

const int kOrthants[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
const double kTheta1[] = {-1.7, -0.6, 0.45, 1.3};
const double kSeps[] = {1e-1, 1e-2, 1e-3};

// Local-entropy quadrature with nodes fixed around the surface square.
QuadratureSpec anchored(int points) {
  QuadratureSpec q;
  q.points_per_axis = points;
  q.anchor = v2(0.0, 0.0);
  q.margin = 2.0;
  return q;
}

Matrix fd_hessian_of_value(const ScalarFn& f, const Vector& t, double h) {
  const double f0 = f(t);
  Matrix H(2, 2);
  for (int i = 0; i < 2; ++i) {
    Vector p = t, m = t;
    p[i] += h;
    m[i] -= h;
    H(i, i) = (f(p) - 2.0 * f0 + f(m)) / (h * h);
  }
  auto at = [&](double a, double b) { return f(v2(t[0] + a, t[1] + b)); };
  H(0, 1) = H(1, 0) = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
  return H;
}

// ---------------------------------------------------------------------------

CheckResult attack_optimality(std::uint64_t seed) {
  const auto m = make_model(ModelSpec::linear(2), 0);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double eps[] = {0.3, 0.6, 1.0};
  double worst_gap = -1e300, worst_dual = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Vector th = v2(u(rng), u(rng)), x = v2(u(rng), u(rng));
    const Label y = rng() % 2 ? Label::Positive : Label::Negative;
    for (Norm p : {Norm::L2, Norm::LInf}) {
      const NormBall ball{p, eps[k % 3]};
      const auto a = exact_attack(th, x, y, ball);
      const auto o = argmax_oracle(m, th, x, y, ball, 41, 2, mix_seed(seed, static_cast<std::uint64_t>(k)));
      worst_gap = std::max(worst_gap, o.achieved_loss - a.achieved_loss);
      worst_dual = std::max(worst_dual, std::abs(a.achieved_loss - dual_norm_adv_loss(th, x, y, ball)));
    }
  }
  Report r;
  r.expect(worst_gap <= 1e-3, "max(oracle - exact) = " + fmt("%.3g", worst_gap) + " <= 1e-3");
  r.expect(worst_dual < 1e-9, "max |exact - dual-norm| = " + fmt("%.3g", worst_dual) + " < 1e-9");
  return {"", r.ok, r.text.str()};
}

CheckResult attack_lipschitz_l2(std::uint64_t seed) {
  Report r;
  const std::pair<double, double> cases[] = {{0.6, 1.0}, {1.0, 2.0}};
  for (auto [eps, tmin] : cases) {
    VectorFn attack = [eps](const Vector& t) { return exact_l2_attack(t, kX, kY, eps).x_prime; };
    const auto est = lipschitz_ratio_estimate(attack, norm_region(tmin + 1.0, tmin), 20000, 1e-4, seed);
    const double bound = eps / tmin * 1.01;
    r.expect(est.sup_ratio <= bound, "eps=" + fmt("%g", eps) + ", theta_min=" + fmt("%g", tmin) +
                                         ": sup ratio " + fmt("%.6f", est.sup_ratio) + " <= " + fmt("%.4g", bound));
  }
  const auto m = make_model(ModelSpec::linear(2), 0);
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double a = 0.3 + k * std::numbers::pi / 4.0;
    const Vector th = v2(2.0 * std::cos(a), 2.0 * std::sin(a));
    const auto att = exact_l2_attack(th, kX, kY, kEps);
    const auto J = implicit_jacobian(m, th, kX, att.x_prime, kY, OptimumCase::BoundaryL2);
    worst = std::max(worst, std::abs(J.spectral_norm - 0.3));
  }
  r.expect(worst <= 1e-6, "||theta||=2: max |sigma1(D) - 0.3| = " + fmt("%.3g", worst) + " <= 1e-6");
  return {"", r.ok, r.text.str()};
}

CheckResult attack_linf_witness(std::uint64_t seed) {
  Report r;
  double worst_disp = 0.0, min_growth = 1e300;
  for (double t1 : kTheta1) {
    double prev = 0.0;
    for (double s : kSeps) {
      const Vector a = exact_linf_attack(v2(t1, s / 2), kX, kY, kEps).x_prime;
      const Vector b = exact_linf_attack(v2(t1, -s / 2), kX, kY, kEps).x_prime;
      const double disp = (a - b).norm();
      worst_disp = std::max(worst_disp, std::abs(disp - 2.0 * kEps));
      const double ratio = disp / s;
      if (prev > 0.0) min_growth = std::min(min_growth, ratio / prev);
      prev = ratio;
    }
  }
  r.expect(worst_disp <= 1e-9, "max |displacement - 1.2| = " + fmt("%.3g", worst_disp) + " <= 1e-9");
  r.expect(min_growth >= 9.0, "min ratio growth per decade = " + fmt("%.6g", min_growth) + " >= 9");
  double in_orthant = 0.0;
  VectorFn attack = [](const Vector& t) { return exact_linf_attack(t, kX, kY, kEps).x_prime; };
  for (const auto& o : kOrthants)
    in_orthant = std::max(in_orthant, lipschitz_ratio_estimate(attack, orthant_region(o[0], o[1]), 2000, 1e-4,
                                                               mix_seed(seed, static_cast<std::uint64_t>(o[0] + 3 * o[1])))
                                          .sup_ratio);
  r.expect(in_orthant == 0.0, "in-orthant sup ratio = " + fmt("%g", in_orthant) + " == 0");
  return {"", r.ok, r.text.str()};
}

struct Constants {
  double tt, tx;
};

Constants assumption1(const Model& m, const LabeledDataset& data, std::uint64_t seed) {
  const auto rep = estimate_assumption1_constants(m, Region::square(2, 2.0), data, kEps, 40000, seed);
  return {rep.c_theta_theta, rep.c_theta_x};
}

CheckResult gradient_smoothness_regions(std::uint64_t seed) {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const LabeledDataset data({{kX, kY}});
  const auto c = assumption1(m, data, seed);
  Report r;
  r.text << "C_tt=" << fmt("%.5f", c.tt) << ", C_tx=" << fmt("%.5f", c.tx);

  const VectorFn g2 = closed_form_grad(m, data, {Norm::L2, kEps});
  const auto l2 = lipschitz_ratio_estimate(g2, norm_region(2.0, 1.0), 20000, 1e-4, mix_seed(seed, 1));
  const double b2 = (c.tt + kEps * c.tx) * 1.05;
  r.expect(l2.sup_ratio <= b2, "L2 sup ratio " + fmt("%.5f", l2.sup_ratio) + " <= " + fmt("%.5f", b2));

  const VectorFn gi = closed_form_grad(m, data, {Norm::LInf, kEps});
  double li = 0.0;
  for (const auto& o : kOrthants)
    li = std::max(li, lipschitz_ratio_estimate(gi, orthant_region(o[0], o[1]), 5000, 1e-4, mix_seed(seed, 2)).sup_ratio);
  r.expect(li <= c.tt * 1.05, "Linf in-orthant sup ratio " + fmt("%.5f", li) + " <= " + fmt("%.5f", c.tt * 1.05));

  // bounded-gradient-difference bound on every sampled pair of the full square
  std::size_t violations = 0, total = 0;
  for (const auto* g : {&g2, &gi}) {
    for (const auto& p : sample_pairs(Region::square(2, 2.0), 5000, 1e-4, mix_seed(seed, 3))) {
      const double lhs = ((*g)(p.a) - (*g)(p.b)).norm();
      const double rhs = c.tt * (p.a - p.b).norm() + 2.0 * kEps * c.tx;
      violations += lhs > rhs;
      ++total;
    }
  }
  r.expect(violations == 0, "gradient-difference bound violated on " + std::to_string(violations) + "/" +
                                std::to_string(total) + " pairs");
  return {"", r.ok, r.text.str()};
}

CheckResult implicit_jacobians(std::uint64_t seed) {
  Report r;
  const auto sw = make_model(ModelSpec::swish(2), 0);
  const NormBall linf{Norm::LInf, kEps};
  double worst_sw = 0.0;
  bool interior = true;
  for (const Vector& th : {v2(1.5, -1.5), v2(1.4, -1.5), v2(1.5, -1.4), v2(1.2, -1.2)}) {
    VectorFn oracle = [&](const Vector& t) { return argmax_oracle(sw, t, kX, kY, linf, 61, 3, seed).x_prime; };
    const Vector xp = oracle(th);
    const auto ic = interior_optimum_check(sw, th, kX, xp, kY, linf);
    interior = interior && ic.strictly_interior && ic.is_stationary;
    const auto J = implicit_jacobian(sw, th, kX, xp, kY, OptimumCase::Interior);
    Matrix ref = fd_jacobian(oracle, th, 1e-4);
    if (J.rank_deficient) ref = J.range_projector * ref;
    worst_sw = std::max(worst_sw, rel_err(J.jacobian, ref));
  }
  r.expect(interior, std::string("swish optima strictly interior and stationary: ") + (interior ? "yes" : "no"));
  r.expect(worst_sw < 1e-3, "swish interior rel err " + fmt("%.3g", worst_sw) + " < 1e-3");

  const auto lin = make_model(ModelSpec::linear(2), 0);
  const NormBall l2{Norm::L2, kEps};
  double worst_lin = 0.0;
  for (const Vector& th : {v2(1.0, 1.0), v2(-1.3, 0.4), v2(0.6, -1.8), v2(2.0, 0.0)}) {
    VectorFn oracle = [&](const Vector& t) { return argmax_oracle(lin, t, kX, kY, l2, 61, 3, seed).x_prime; };
    const Vector xp = oracle(th);
    const auto J = implicit_jacobian(lin, th, kX, xp, kY, OptimumCase::BoundaryL2);
    worst_lin = std::max(worst_lin, rel_err(J.jacobian, fd_jacobian(oracle, th, 1e-4)));
  }
  r.expect(worst_lin < 1e-3, "linear L2 boundary rel err " + fmt("%.3g", worst_lin) + " < 1e-3");
  return {"", r.ok, r.text.str()};
}

CheckResult entropy_hessian_identity(std::uint64_t seed) {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const LabeledDataset data({{kX, kY}});
  const ScalarFn loss = [&](const Vector& t) { return dual_norm_adv_loss(t, kX, kY, {Norm::LInf, kEps}); };
  (void)m;
  (void)data;
  Report r;
  for (double gamma : {0.03, 0.5}) {
    const QuadratureSpec q = anchored(256);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(gamma * 1000)));
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double worst = 0.0, worst_sigma = -1e300;
    for (int k = 0; k < 20; ++k) {
      const Vector th = v2(u(rng), u(rng));
      const auto le = local_entropy_exact(loss, th, gamma, q);
      const ScalarFn val = [&](const Vector& t) { return local_entropy_exact(loss, t, gamma, q).value; };
      const Matrix H = fd_hessian_of_value(val, th, 1e-3);
      worst = std::max(worst, rel_err(H, le.hessian));
      Eigen::SelfAdjointEigenSolver<Matrix> es(H);
      const double s1 = es.eigenvalues().cwiseAbs().maxCoeff();
      worst_sigma = std::max(worst_sigma, s1 - (le.smoothness_bound + 1e-6));
    }
    r.expect(worst < 1e-3, "gamma=" + fmt("%g", gamma) + ": max rel err " + fmt("%.3g", worst) + " < 1e-3");
    r.expect(worst_sigma <= 0.0, "gamma=" + fmt("%g", gamma) + ": max sigma1 - bound = " + fmt("%.3g", worst_sigma) +
                                     " <= 0");
  }
  return {"", r.ok, r.text.str()};
}

CheckResult entropy_smoothing_witness(std::uint64_t) {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const LabeledDataset data({{kX, kY}});
  const VectorFn raw = closed_form_grad(m, data, {Norm::LInf, kEps});
  const ScalarFn loss = [](const Vector& t) { return dual_norm_adv_loss(t, kX, kY, {Norm::LInf, kEps}); };
  const double gamma = 0.03;
  const QuadratureSpec q = anchored(256);
  const VectorFn smooth = [&](const Vector& t) { return local_entropy_exact(loss, t, gamma, q).gradient; };

  std::vector<double> raw_sup, ent_sup;
  for (double s : kSeps) {
    double a = 0.0, b = 0.0;
    for (double t1 : kTheta1) {
      const Vector p = v2(t1, s / 2), n = v2(t1, -s / 2);
      a = std::max(a, (raw(p) - raw(n)).norm() / s);
      b = std::max(b, (smooth(p) - smooth(n)).norm() / s);
    }
    raw_sup.push_back(a);
    ent_sup.push_back(b);
  }
  Report r;
  double min_growth = 1e300;
  for (std::size_t k = 1; k < raw_sup.size(); ++k) min_growth = std::min(min_growth, raw_sup[k] / raw_sup[k - 1]);
  r.expect(min_growth >= 10.0, "raw ratio sups " + fmt("%.6g", raw_sup[0]) + ", " + fmt("%.6g", raw_sup[1]) + ", " +
                                   fmt("%.6g", raw_sup[2]) + "; min growth per decade " + fmt("%.6g", min_growth) +
                                   " >= 10");
  const double spread = *std::max_element(ent_sup.begin(), ent_sup.end()) /
                        *std::min_element(ent_sup.begin(), ent_sup.end());
  r.expect(spread < 2.0, "-F ratio sups " + fmt("%.6g", ent_sup[0]) + ", " + fmt("%.6g", ent_sup[1]) + ", " +
                             fmt("%.6g", ent_sup[2]) + "; max/min " + fmt("%.6g", spread) + " < 2");
  return {"", r.ok, r.text.str()};
}

CheckResult gaussian_closed_form(std::uint64_t) {
  const ScalarFn f = [](const Vector& t) { return 0.5 * t.squaredNorm(); };
  QuadratureSpec q;
  q.points_per_axis = 256;
  const auto le = local_entropy_exact(f, v2(1.0, 0.0), 0.03, q);
  const double err = (le.gradient - v2(0.03 / 1.03, 0.0)).cwiseAbs().maxCoeff();
  Report r;
  r.expect(err <= 1e-6, "max |grad - (0.03/1.03, 0)| = " + fmt("%.3g", err) + " <= 1e-6");
  return {"", r.ok, r.text.str()};
}

CheckResult sgld_consistency(std::uint64_t seed) {
  const ScalarFn f = [](const Vector& t) { return 0.5 * t.squaredNorm(); };
  const MinibatchGradient g = [](const Vector& t, int) { return t; };
  const Vector th = v2(1.0, 0.0);
  EnsgdConfig c;
  c.gamma = 0.03;
  c.eta_prime = 0.1;
  c.eps_langevin = std::sqrt(2.0);  // unit temperature, so the chain targets p_theta itself
  c.langevin_iters = 500;
  c.alpha = 0.75;
  QuadratureSpec q;
  q.points_per_axis = 256;
  const Vector mean = local_entropy_exact(f, th, c.gamma, q).mean;
  const int runs = 50;
  std::vector<Vector> bars;
  Vector avg = Vector::Zero(2);
  for (int k = 0; k < runs; ++k) {
    bars.push_back(sgld_estimate(th, g, c, mix_seed(seed, static_cast<std::uint64_t>(k))).theta_bar);
    avg += bars.back() / runs;
  }
  Report r;
  for (int i = 0; i < 2; ++i) {
    double ss = 0.0;
    for (const auto& b : bars) ss += (b[i] - avg[i]) * (b[i] - avg[i]);
    const double se = std::sqrt(ss / (runs - 1) / runs);
    const double z = std::abs(avg[i] - mean[i]) / se;
    r.expect(z <= 3.0, "coord " + std::to_string(i + 1) + ": |mean - E| = " + fmt("%.4g", std::abs(avg[i] - mean[i])) +
                           " = " + fmt("%.3g", z) + " SE <= 3");
  }
  return {"", r.ok, r.text.str()};
}

CheckResult pgd_properties(std::uint64_t seed) {
  const auto m = make_model(ModelSpec::linear(2), 0);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::size_t infeasible = 0, drops = 0, far = 0;
  for (int k = 0; k < 50; ++k) {
    const Vector th = v2(u(rng), u(rng)), x = v2(u(rng), u(rng));
    const Label y = k % 2 ? Label::Positive : Label::Negative;
    for (Norm p : {Norm::L2, Norm::LInf}) {
      const NormBall ball{p, kEps};
      double prev = -1.0;
      for (int steps = 1; steps <= 20; ++steps) {
        const auto a = pgd_attack(m, th, x, y, ball, {steps, kEps / 4, false, 0});
        infeasible += norm_of(a.delta, p) > kEps * (1 + 1e-12);
        drops += a.achieved_loss < prev;
        prev = a.achieved_loss;
      }
      far += prev > dual_norm_adv_loss(th, x, y, ball) + 1e-6 || prev < dual_norm_adv_loss(th, x, y, ball) - 1e-3;
    }
  }
  Report r;
  r.expect(infeasible == 0, std::to_string(infeasible) + " infeasible iterates");
  r.expect(drops == 0, std::to_string(drops) + " decreases in steps");
  r.expect(far == 0, std::to_string(far) + " 20-step results outside [optimum - 1e-3, optimum + 1e-6]");
  return {"", r.ok, r.text.str()};
}

CheckResult l2_scale_covariance(std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0), c(0.01, 100.0);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Vector th = v2(u(rng), u(rng)), x = v2(u(rng), u(rng));
    const double s = c(rng);
    worst = std::max(worst, (exact_l2_attack(s * th, x, kY, kEps).delta - exact_l2_attack(th, x, kY, kEps).delta)
                                .cwiseAbs()
                                .maxCoeff());
  }
  Report r;
  r.expect(worst < 1e-12, "max |delta(c theta) - delta(theta)| = " + fmt("%.3g", worst) + " < 1e-12");
  return {"", r.ok, r.text.str()};
}

CheckResult lemma1_composition(std::uint64_t seed) {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const LabeledDataset data({{kX, kY}});
  const auto c = assumption1(m, data, seed);
  const Region reg = norm_region(2.0, 1.0);
  VectorFn attack = [](const Vector& t) { return exact_l2_attack(t, kX, kY, kEps).x_prime; };
  const double ca = lipschitz_ratio_estimate(attack, reg, 20000, 1e-4, mix_seed(seed, 4)).sup_ratio;
  const double cg =
      lipschitz_ratio_estimate(closed_form_grad(m, data, {Norm::L2, kEps}), reg, 20000, 1e-4, mix_seed(seed, 5))
          .sup_ratio;
  const double bound = (c.tt + ca * c.tx) * 1.05;
  Report r;
  r.expect(cg <= bound, "gradient sup " + fmt("%.5f", cg) + " <= (C_tt + C_attack C_tx) * 1.05 = " + fmt("%.5f", bound));
  return {"", r.ok, r.text.str()};
}

CheckResult sharpness_approximation(std::uint64_t seed) {
  const auto m = make_model(ModelSpec::linear(2), 0);
  Rng rng(seed);
  std::vector<Example> ex;
  for (int i = 0; i < 40; ++i) {
    const Vector x = standard_normal(rng, 2);
    ex.push_back({x, x[0] > 0 ? Label::Positive : Label::Negative});
  }
  const LabeledDataset data(std::move(ex));
  const NormBall ball{Norm::LInf, 0.1};
  const AttackSpec spec{ball, AttackMethod::ClosedForm, {}};
  const ScalarFn L = [&](const Vector& t) { return adversarial_batch_loss(m, t, data, spec, {}, false).loss; };
  const VectorFn G = [&](const Vector& t) { return adversarial_batch_loss(m, t, data, spec).grad; };
  // a few hundred gradient steps stand in for a trained theta
  Vector th = v2(0.5, 0.5);
  for (int k = 0; k < 300; ++k) th -= 0.5 * G(th);
  const auto s = epsilon_sharpness(L, G, th, 0.05, 5, seed);
  Report r;
  r.expect(s.value >= s.approximation - 1e-2,
           "exact " + fmt("%.4g", s.value) + " >= approximation " + fmt("%.4g", s.approximation) + " - 1e-2");
  return {"", r.ok, r.text.str()};
}

CheckResult ensgd_fixed_point(std::uint64_t) {
  const ScalarFn f = [](const Vector& t) { return 0.5 * t.squaredNorm(); };
  EnsgdConfig c;
  c.gamma = 0.5;
  c.eta = 1.0;
  Vector th = v2(1.5, -0.8);
  const QuadratureSpec q;
  for (int k = 0; k < 200; ++k) {
    const auto le = local_entropy_exact(f, th, c.gamma, q);
    th = ensgd_step(th, {le.mean, le.mean.cwiseProduct(le.mean), 1}, c);
  }
  // second order with the exact Gaussian variance is one Newton step
  c.order = EnsgdOrder::Second;
  const Vector t0 = v2(0.7, -1.1);
  const auto le = local_entropy_exact(f, t0, c.gamma, q);
  const Vector xi = le.covariance.diagonal() + le.mean.cwiseProduct(le.mean);
  const Vector newton = t0 - le.hessian.ldlt().solve(le.gradient);
  const double nerr = (ensgd_step(t0, {le.mean, xi, 1}, c) - newton).cwiseAbs().maxCoeff();
  Report r;
  r.expect(th.norm() < 1e-6, "first-order iterate after 200 steps at distance " + fmt("%.3g", th.norm()) +
                                 " from the minimizer < 1e-6");
  r.expect(nerr < 1e-8, "second-order step vs Newton step " + fmt("%.3g", nerr) + " < 1e-8");
  return {"", r.ok, r.text.str()};
}

}  // namespace

const std::vector<CheckInfo>& lemma_checks() {
  static const std::vector<CheckInfo> checks = {
      {"attack_optimality", "closed-form attacks against the argmax oracle and the dual-norm loss", 10.0,
       attack_optimality},
      {"attack_lipschitz_l2", "L2 attack map Lipschitz bound and boundary Jacobian norm", 5.0, attack_lipschitz_l2},
      {"attack_linf_witness", "Linf attack jumps across an axis and is constant inside orthants", 5.0,
       attack_linf_witness},
      {"gradient_smoothness_regions", "adversarial-loss gradient ratios against Assumption-1 constants", 30.0,
       gradient_smoothness_regions},
      {"implicit_jacobians", "implicit attack Jacobians against oracle differences", 60.0, implicit_jacobians},
      {"entropy_hessian_identity", "Hessian of -F equals gamma I - gamma^2 Sigma", 120.0, entropy_hessian_identity},
      {"entropy_smoothing_witness", "raw gradient jump versus bounded -F gradient ratio across an axis", 120.0,
       entropy_smoothing_witness},
      {"gaussian_closed_form", "-F gradient of a quadratic in closed form", 5.0, gaussian_closed_form},
      {"sgld_consistency", "SGLD averages against quadrature moments", 60.0, sgld_consistency},
      {"pgd_properties", "PGD feasibility, monotonicity and convergence on the linear model", 10.0, pgd_properties},
      {"l2_scale_covariance", "L2 attack invariant to positive scaling of theta", 5.0, l2_scale_covariance},
      {"lemma1_composition", "gradient ratio bounded through the attack ratio", 30.0, lemma1_composition},
      {"sharpness_approximation", "epsilon-sharpness against its spectral approximation", 10.0,
       sharpness_approximation},
      {"ensgd_fixed_point", "EnSGD fixed point and second-order Newton step on a quadratic", 10.0, ensgd_fixed_point},
  };
  return checks;
}

std::vector<CheckResult> run_lemma_checks(const std::vector<std::string>& names, std::uint64_t seed,
                                          std::ostream* progress) {
  const auto& all = lemma_checks();
  for (const auto& n : names)
    if (std::none_of(all.begin(), all.end(), [&](const CheckInfo& c) { return c.name == n; }))
      throw ConfigError("unknown check '" + n + "'");
  std::vector<CheckResult> out;
  for (const auto& c : all) {
    if (!names.empty() && std::find(names.begin(), names.end(), c.name) == names.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r = c.run(seed);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.name = c.name;
    r.time_limit = c.time_limit;
    if (!r.within_time()) {
      r.passed = false;
      r.detail += "; exceeded time limit " + fmt("%g", c.time_limit) + " s";
    }
    if (progress) *progress << format_check(r) << std::endl;
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_check(const CheckResult& r) {
  return std::string(r.passed ? "[PASS] " : "[FAIL] ") + r.name + " (" + fmt("%.2f", r.seconds) + " s): " + r.detail;
}

}  // namespace advsmooth
