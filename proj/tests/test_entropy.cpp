#include <doctest.h>

#include <cmath>
#include <numbers>

#include "advsmooth/entropy.hpp"
#include "advsmooth/quadrature.hpp"
#include "advsmooth/rng.hpp"
#include "test_util.hpp"

using namespace advsmooth;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

// -F for f = a/2 ||t||^2 in closed form (Gaussian integral)
double quad_neg_f(double a, double gamma, const Vector& th) {
  const double p = a + gamma;
  return a * gamma / (2 * p) * th.squaredNorm() - 0.5 * static_cast<double>(th.size()) * std::log(2 * std::numbers::pi / p);
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
  for (int n : {1, 2, 5, 8, 12}) {
    const auto r = gauss_legendre(n);
    double s = 0;
    for (double w : r.weights) s += w;
    CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double q = 0;
      for (int i = 0; i < n; ++i) q += r.weights[i] * std::pow(r.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      CHECK(std::abs(q - exact) < 1e-13);
    }
  }
  const auto c = composite_gauss_legendre(-1.0, 3.0, 4, 8);
  CHECK(c.nodes.size() == 32);
  double q = 0;
  for (std::size_t i = 0; i < c.nodes.size(); ++i) q += c.weights[i] * std::exp(c.nodes[i]);
  CHECK(q == doctest::Approx(std::exp(3.0) - std::exp(-1.0)).epsilon(1e-13));
}

TEST_CASE("local entropy of a quadratic matches the Gaussian closed form") {
  const double a = 1.3;
  ScalarFn f = [a](const Vector& t) { return 0.5 * a * t.squaredNorm(); };
  for (double gamma : {0.03, 0.5, 2.0}) {
    for (const Vector& th : {v2(0, 0), v2(0.4, -1.2)}) {
      QuadratureSpec q;
      q.points_per_axis = 256;  // the density is much narrower than the box at small gamma
      const auto le = local_entropy_exact(f, th, gamma, q);
      const double p = a + gamma;
      CHECK(le.value == doctest::Approx(quad_neg_f(a, gamma, th)).epsilon(1e-10));
      CHECK(test::max_abs(le.mean - gamma / p * th) < 1e-9);
      CHECK(test::max_abs(le.covariance - Matrix::Identity(2, 2) / p) < 1e-9);
      CHECK(test::max_abs(le.gradient - a * gamma / p * th) < 1e-9);
      CHECK(test::max_abs(le.hessian - a * gamma / p * Matrix::Identity(2, 2)) < 1e-9);
      CHECK(le.smoothness_bound == doctest::Approx(gamma + gamma * gamma * std::sqrt(2.0) / p).epsilon(1e-9));
    }
  }
  // one and three dimensions
  const Vector t1 = Vector::Constant(1, 0.7);
  CHECK(local_entropy_exact(f, t1, 0.5, {}).value == doctest::Approx(quad_neg_f(a, 0.5, t1)).epsilon(1e-8));
  const Vector t3 = Vector::Constant(3, -0.2);
  QuadratureSpec q3;
  q3.points_per_axis = 64;
  CHECK(local_entropy_exact(f, t3, 0.5, q3).value == doctest::Approx(quad_neg_f(a, 0.5, t3)).epsilon(1e-9));
  CHECK_THROWS_AS(local_entropy_exact(f, Vector::Zero(4), 0.5, {}), UnsupportedError);
}

TEST_CASE("anchored quadrature: derivatives equal differences of the value") {
  ScalarFn f = [](const Vector& t) { return softplus(-t[0] + 0.5 * t[1]) + softplus(t[0] * t[1] - 1.0); };
  QuadratureSpec q;
  q.anchor = v2(0, 0);
  q.margin = 1.0;
  const double gamma = 0.5;
  const Vector th = v2(0.3, -0.4);
  const auto le = local_entropy_exact(f, th, gamma, q);
  auto val = [&](const Vector& t) { return local_entropy_exact(f, t, gamma, q).value; };
  auto grad = [&](const Vector& t) { return local_entropy_exact(f, t, gamma, q).gradient; };
  CHECK(test::max_abs(le.gradient - test::fd_grad(val, th, 1e-5)) < 1e-8);
  CHECK(test::max_abs(le.hessian - test::fd_jacobian(grad, th, 1e-5)) < 1e-8);
  // hessian is bounded by gamma in every direction
  Eigen::SelfAdjointEigenSolver<Matrix> es(le.hessian);
  CHECK(es.eigenvalues().maxCoeff() <= gamma + 1e-12);
  q.margin = 0.1;
  CHECK_THROWS_AS(local_entropy_exact(f, th, gamma, q), ConfigError);
}

TEST_CASE("quadrature errors") {
  ScalarFn f = [](const Vector& t) { return 0.5 * t.squaredNorm(); };
  QuadratureSpec q;
  q.half_width = 1.0;
  CHECK_THROWS_AS(local_entropy_exact(f, v2(0, 0), 1.0, q), NumericError);
  q = {};
  q.points_per_axis = 20;
  CHECK_THROWS_AS(local_entropy_exact(f, v2(0, 0), 1.0, q), ConfigError);
  CHECK_THROWS_AS(local_entropy_exact(f, v2(0, 0), 0.0, {}), ConfigError);
  ScalarFn nan = [](const Vector&) { return std::nan(""); };
  CHECK_THROWS_AS(local_entropy_exact(nan, v2(0, 0), 1.0, {}), NumericError);
}

TEST_CASE("SGLD recurrence without noise") {
  EnsgdConfig c;
  c.gamma = 0.7;
  c.eta_prime = 0.2;
  c.eps_langevin = 0.0;
  c.langevin_iters = 3;
  c.alpha = 0.75;
  const Vector th = v2(1, -2);
  MinibatchGradient g = [](const Vector& t, int) { return Vector(2.0 * t); };
  const auto st = sgld_estimate(th, g, c, 1);
  Vector tp = th, mu = th, xi = th.cwiseProduct(th);
  for (int l = 0; l < 3; ++l) {
    tp = tp - 0.2 * (2.0 * tp + 0.7 * (tp - th));
    mu = 0.25 * mu + 0.75 * tp;
    xi = 0.25 * xi + 0.75 * tp.cwiseProduct(tp);
  }
  CHECK(st.steps_taken == 3);
  CHECK(test::max_abs(st.theta_bar - mu) < 1e-15);
  CHECK(test::max_abs(st.xi_bar - xi) < 1e-15);
  // same seed, same chain
  c.eps_langevin = 0.1;
  CHECK(sgld_estimate(th, g, c, 5).theta_bar == sgld_estimate(th, g, c, 5).theta_bar);
  CHECK(sgld_estimate(th, g, c, 5).theta_bar != sgld_estimate(th, g, c, 6).theta_bar);
}

TEST_CASE("SGLD chains sample the local-entropy density") {
  // unit temperature: eps_langevin = sqrt(2)
  ScalarFn f = [](const Vector& t) { return softplus(-2.0 * t[0]) + 0.1 * t[0] * t[0]; };
  MinibatchGradient g = [](const Vector& t, int) {
    return Vector::Constant(1, -2.0 * sigmoid(-2.0 * t[0]) + 0.2 * t[0]);
  };
  const double gamma = 0.5;
  const Vector th = Vector::Constant(1, -0.5);
  const auto le = local_entropy_exact(f, th, gamma, {});
  EnsgdConfig c;
  c.gamma = gamma;
  c.eta_prime = 0.005;
  c.eps_langevin = std::sqrt(2.0);
  c.langevin_iters = 3000;
  c.alpha = 1.0;
  const int chains = 400;
  double m1 = 0, m2 = 0;
  for (int k = 0; k < chains; ++k) {
    const auto st = sgld_estimate(th, g, c, mix_seed(99, k));
    m1 += st.theta_bar[0];
    m2 += st.xi_bar[0];
  }
  m1 /= chains;
  m2 /= chains;
  const double var = le.covariance(0, 0);
  const double se = std::sqrt(var / chains);
  CHECK(std::abs(m1 - le.mean[0]) < 4 * se + 0.02);
  CHECK(std::abs(m2 - m1 * m1 - var) < 0.15 * var + 0.02);
}

TEST_CASE("EnSGD step") {
  EnsgdConfig c;
  c.gamma = 0.5;
  c.eta = 0.4;
  const Vector th = v2(1, 2);
  EnsgdState st{v2(0.5, 1.0), v2(0.5, 1.5), 1};
  CHECK(test::max_abs(ensgd_step(th, st, c) - (th - 0.2 * (th - st.theta_bar))) < 1e-15);
  c.order = EnsgdOrder::Second;
  // var = (0.25, 0.5); h_j = 1 / (gamma - gamma^2 var_j)
  const Vector h = v2(1.0 / (0.5 - 0.25 * 0.25), 1.0 / (0.5 - 0.25 * 0.5));
  CHECK(test::max_abs(ensgd_step(th, st, c) - (th - 0.2 * h.cwiseProduct(th - st.theta_bar))) < 1e-14);
  // huge variance is clamped so the step stays finite
  st.xi_bar = v2(1e6, 1e6);
  const Vector n = ensgd_step(th, st, c);
  CHECK(n.allFinite());
  const double hmax = 1.0 / (0.5 - 0.25 * (1 - c.variance_floor) / 0.5);
  CHECK(test::max_abs(n - (th - 0.2 * hmax * (th - st.theta_bar))) < 1e-9);
  st.theta_bar = Vector::Zero(3);
  CHECK_THROWS_AS(ensgd_step(th, st, c), ConfigError);
}

TEST_CASE("EnSGD with one noiseless Langevin step reduces to SGD") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const LabeledDataset data({{v2(-1, 1), Label::Positive}, {v2(0.5, 0.2), Label::Negative}});
  const AttackSpec atk{{Norm::LInf, 0.1}, AttackMethod::ClosedForm, {}};
  EnsgdConfig c;
  c.gamma = 0.5;
  c.eta = 2.0;
  c.eta_prime = 0.1;
  c.eps_langevin = 0.0;
  c.langevin_iters = 1;
  c.alpha = 1.0;
  const Vector th = v2(0.3, -0.8);
  BatchSampler all = [] { return std::vector<std::size_t>{0, 1}; };
  const auto st = sgld_estimate(m, th, data, all, atk, c, std::nullopt, 3);
  const Vector g = adversarial_batch_loss(m, th, data, atk).grad;
  const auto [sgd, buf] = sgd_step(th, g, Vector::Zero(2), c.eta * c.gamma * c.eta_prime, 0.0, 0.0);
  CHECK(test::max_abs(ensgd_step(th, st, c) - sgd) < 1e-15);
}

TEST_CASE("SGD recurrence") {
  const Vector th = v2(1, -1), g = v2(0.5, 0.25);
  auto [t1, b1] = sgd_step(th, g, Vector::Zero(2), 0.1, 0.9, 0.01);
  CHECK(test::max_abs(b1 - (g + 0.01 * th)) < 1e-15);
  CHECK(test::max_abs(t1 - (th - 0.1 * b1)) < 1e-15);
  auto [t2, b2] = sgd_step(t1, g, b1, 0.1, 0.9, 0.01);
  CHECK(test::max_abs(b2 - (0.9 * b1 + g + 0.01 * t1)) < 1e-15);
  CHECK(test::max_abs(t2 - (t1 - 0.1 * b2)) < 1e-15);
}

TEST_CASE("AWP perturbation") {
  const auto m = make_model(ModelSpec::mlp(2, {4}, Activation::Swish), 3);
  Rng rng(2);
  std::vector<Example> ex;
  for (int i = 0; i < 8; ++i) {
    const Vector x = standard_normal(rng, 2);
    ex.push_back({x, x[0] > 0 ? Label::Positive : Label::Negative});
  }
  const LabeledDataset data(std::move(ex));
  const std::vector<std::size_t> batch{0, 1, 2, 3, 4, 5, 6, 7};
  const AttackSpec atk{{Norm::LInf, 0.1}, AttackMethod::Pgd, {5, 0.025, false, 1}};
  Vector th = m.initial_params();
  const AwpConfig awp{0.05, 1};
  const Vector v = awp_perturbation(m, th, data, batch, atk, awp, 7);
  const Vector g = adversarial_batch_loss(m, th, data, [&] {
    AttackSpec a = atk;
    a.pgd.seed = mix_seed(7, 0);
    return a;
  }(), batch).grad;
  for (const auto& b : m.layer_blocks()) {
    const auto vb = v.segment(b.offset, b.size);
    const auto tb = th.segment(b.offset, b.size);
    const auto gb = g.segment(b.offset, b.size);
    CHECK(vb.norm() == doctest::Approx(0.05 * tb.norm()).epsilon(1e-12));
    CHECK(vb.dot(gb) / (vb.norm() * gb.norm()) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto m3 = awp_perturbation(m, th, data, batch, atk, {0.05, 3}, 7);
  for (const auto& b : m.layer_blocks())
    CHECK(m3.segment(b.offset, b.size).norm() ==
          doctest::Approx(0.05 * th.segment(b.offset, b.size).norm()).epsilon(1e-12));

  // zero block stays zero; gamma_a = 0 disables
  const auto blocks = m.layer_blocks();
  th.segment(blocks[1].offset, blocks[1].size).setZero();
  const Vector vz = awp_perturbation(m, th, data, batch, atk, awp, 7);
  CHECK(vz.segment(blocks[1].offset, blocks[1].size).isZero(0));
  CHECK(awp_perturbation(m, th, data, batch, atk, {0.0, 1}, 7).isZero(0));

  // robust gradient equals the batch-loss gradient at theta + v
  double loss = 0;
  const Vector rg = robust_batch_gradient(m, th, data, batch, atk, awp, 11, &loss);
  const Vector vv = awp_perturbation(m, th, data, batch, atk, awp, mix_seed(11, 1));
  const auto bl = adversarial_batch_loss(m, th + vv, data, atk, batch);
  CHECK(rg == bl.grad);
  CHECK(loss == bl.loss);
  CHECK(robust_batch_gradient(m, th, data, batch, atk, std::nullopt, 11) ==
        adversarial_batch_loss(m, th, data, atk, batch).grad);
}
