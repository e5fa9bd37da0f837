#include <doctest.h>

#include <cmath>

#include "advsmooth/attacks.hpp"
#include "advsmooth/probes.hpp"
#include "advsmooth/rng.hpp"
#include "test_util.hpp"

using namespace advsmooth;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

const Vector kX = v2(-1, 1);

}  // namespace

TEST_CASE("regions") {
  Region r = Region::square(2, 2.0);
  r.predicate = RegionPredicate::NormAtLeast;
  r.theta_min = 1.0;
  CHECK(r.contains(v2(1.5, 0)));
  CHECK_FALSE(r.contains(v2(0.5, 0.5)));
  Region o = Region::square(2, 2.0);
  o.predicate = RegionPredicate::FixedOrthant;
  o.orthant = {1, -1};
  CHECK(o.contains(v2(0.1, -0.1)));
  CHECK_FALSE(o.contains(v2(0.1, 0.0)));
  Region bad = Region::square(2, 1.0);
  bad.predicate = RegionPredicate::NormAtLeast;
  bad.theta_min = 5.0;
  CHECK_THROWS_AS(sample_region(bad, 1), EmptyRegionError);
}

TEST_CASE("Lipschitz ratio of simple maps") {
  const Region r = Region::square(2, 2.0);
  const auto id = lipschitz_ratio_estimate([](const Vector& t) { return t; }, r, 500, 1e-4, 3);
  CHECK(std::abs(id.sup_ratio - 1.0) < 1e-12);
  CHECK(id.pair_count == 500);
  const auto c = lipschitz_ratio_estimate([](const Vector&) { return v2(1, 2); }, r, 100, 1e-4, 3);
  CHECK(c.sup_ratio == 0.0);
  // deterministic in the seed
  const auto a = lipschitz_ratio_estimate([](const Vector& t) { return Vector(t.array().sin()); }, r, 300, 1e-4, 8);
  const auto b = lipschitz_ratio_estimate([](const Vector& t) { return Vector(t.array().sin()); }, r, 300, 1e-4, 8);
  CHECK(a.sup_ratio == b.sup_ratio);
  CHECK(a.sup_ratio <= 1.0 + 1e-12);
  for (const auto& p : sample_pairs(r, 200, 0.01, 5)) {
    CHECK((p.a - p.b).norm() >= 0.01);
    CHECK(r.contains(p.a));
    CHECK(r.contains(p.b));
  }
  Region tiny = Region::box(v2(0, 0), v2(1e-3, 1e-3));
  CHECK_THROWS_AS(lipschitz_ratio_estimate([](const Vector& t) { return t; }, tiny, 10, 1.0, 1), EmptyRegionError);
}

TEST_CASE("attack maps: L2 bound and Linf orthant constancy") {
  Region r = Region::square(2, 2.0);
  r.predicate = RegionPredicate::NormAtLeast;
  r.theta_min = 1.0;
  const auto l2 = lipschitz_ratio_estimate(
      [](const Vector& t) { return exact_l2_attack(t, kX, Label::Positive, 0.6).x_prime; }, r, 5000, 1e-4, 1);
  CHECK(l2.sup_ratio <= 0.6 * 1.01);
  CHECK(l2.sup_ratio > 0.3);

  Region o = Region::square(2, 2.0);
  o.predicate = RegionPredicate::FixedOrthant;
  o.orthant = {1, 1};
  const auto li = lipschitz_ratio_estimate(
      [](const Vector& t) { return exact_linf_attack(t, kX, Label::Positive, 0.6).x_prime; }, o, 2000, 1e-4, 1);
  CHECK(li.sup_ratio == 0.0);
}

TEST_CASE("loss smoothness constants") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const LabeledDataset data({{kX, Label::Positive}});
  const auto rep = estimate_assumption1_constants(m, Region::square(2, 2.0), data, 0.6, 4000, 11);
  CHECK(std::isfinite(rep.c_theta));
  CHECK(rep.c_theta > 0);
  // sigma(1 - sigma) ||x||^2 <= 0.25 * (1.6^2 + 1.6^2) over the input box
  CHECK(rep.c_theta_theta <= 0.25 * 5.12 + 1e-9);
  CHECK(rep.c_theta_theta > 0.5);
  CHECK(rep.c_theta_x > 0.5);
  const std::string js = rep.to_json();
  CHECK(js.find("C_theta_theta") != std::string::npos);
  CHECK_THROWS_AS(estimate_assumption1_constants(m, Region::box(v2(0, 0), v2(1e-3, 1e-3)), data, 0.6, 10, 1, 1.0),
                  EmptyRegionError);
}

TEST_CASE("spectral norm by power iteration") {
  const Vector t = v2(0.3, -0.2);
  auto q1 = [](const Vector& v) { return 0.5 * v.squaredNorm(); };
  CHECK(hessian_spectral_norm(ScalarFn(q1), t, 1e-10).value == doctest::Approx(1.0).epsilon(1e-6));
  auto q3 = [](const Vector& v) { return 0.5 * (3 * v[0] * v[0] + v[1] * v[1]); };
  const auto e = hessian_spectral_norm(ScalarFn(q3), t, 1e-12, 500);
  CHECK(e.converged);
  CHECK(e.value == doctest::Approx(3.0).epsilon(1e-6));
  const auto nc = hessian_spectral_norm(ScalarFn(q3), t, 1e-16, 2);
  CHECK_FALSE(nc.converged);
}

TEST_CASE("interior optimum check and eigen oracle") {
  const auto lin = make_model(ModelSpec::linear(2), 0);
  const auto a = exact_l2_attack(v2(1, 2), kX, Label::Positive, 0.6);
  const auto c = interior_optimum_check(lin, v2(1, 2), kX, a.x_prime, Label::Positive, {Norm::L2, 0.6});
  CHECK_FALSE(c.is_stationary);
  CHECK_FALSE(c.strictly_interior);

  const auto sw = make_model(ModelSpec::swish(2), 0);
  const NormBall ball{Norm::LInf, 0.6};
  const auto o = argmax_oracle(sw, v2(1.5, -1.5), kX, Label::Positive, ball, 101, 4, 3);
  const auto ic = interior_optimum_check(sw, v2(1.5, -1.5), kX, o.x_prime, Label::Positive, ball);
  CHECK(ic.is_stationary);
  CHECK(ic.strictly_interior);
  // dense eigen oracle: eigenvalues of a 2x2 symmetric matrix in closed form
  const Matrix H = sw.hess_x(v2(1.5, -1.5), o.x_prime, Label::Positive);
  const double tr = H.trace(), det = H.determinant();
  const double lmax = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
  CHECK(std::abs(ic.max_eig - lmax) < 1e-6);
}

TEST_CASE("bordered Hessian at the linear L2 attack") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const Vector th = v2(3, 4), x = v2(0, 0);
  const auto a = exact_l2_attack(th, x, Label::Positive, 1.0);
  const auto bh = bordered_hessian_check(m, th, x, a.x_prime, Label::Positive);
  CHECK(bh.stationarity_residual < 1e-9);
  CHECK(bh.matrix(0, 0) == 0.0);
  CHECK(test::max_abs(bh.matrix - bh.matrix.transpose()) < 1e-8);
  CHECK(bh.mu == doctest::Approx(sigmoid(-th.dot(a.x_prime)) * 5.0).epsilon(1e-12));
  CHECK_THROWS_AS(bordered_hessian_check(m, th, x, x, Label::Positive), NumericError);

  Rng rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  const auto mlp = make_model(ModelSpec::mlp(2, {5}, Activation::Swish), 2);
  for (int k = 0; k < 20; ++k) {
    Vector t = mlp.initial_params();
    for (auto& v : t) v = u(rng);
    const auto b = bordered_hessian_check(mlp, t, v2(u(rng), u(rng)), v2(u(rng), u(rng)), Label::Negative);
    CHECK(test::max_abs(b.matrix - b.matrix.transpose()) < 1e-8);
    CHECK(b.matrix(0, 0) == 0.0);
  }
}

TEST_CASE("implicit Jacobian: linear boundary case against the closed form") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  for (const Vector& th : {v2(2, 0), v2(1.2, -1.6), v2(-0.6, 0.9)}) {
    for (Label y : {Label::Positive, Label::Negative}) {
      const double eps = 0.6, n = th.norm();
      const auto a = exact_l2_attack(th, kX, y, eps);
      const auto J = implicit_jacobian(m, th, kX, a.x_prime, y, OptimumCase::BoundaryL2);
      const Matrix D = -sign_of(y) * eps / n * (Matrix::Identity(2, 2) - th * th.transpose() / (n * n));
      CHECK(test::max_abs(J.jacobian - D) < 1e-6);
      CHECK(std::abs(J.spectral_norm - eps / n) < 1e-6);
      // finite differences of the closed-form attack
      const Matrix fd = fd_jacobian([&](const Vector& t) { return exact_l2_attack(t, kX, y, eps).x_prime; }, th, 1e-6);
      CHECK(test::max_abs(J.jacobian - fd) < 1e-6);
    }
  }
}

TEST_CASE("implicit Jacobian: swish interior case against oracle differences") {
  const auto m = make_model(ModelSpec::swish(2), 0);
  const NormBall ball{Norm::LInf, 0.6};
  const Vector th = v2(1.5, -1.5);
  auto oracle = [&](const Vector& t) { return argmax_oracle(m, t, kX, Label::Positive, ball, 61, 3, 5).x_prime; };
  const Vector xp = oracle(th);
  const auto J = implicit_jacobian(m, th, kX, xp, Label::Positive, OptimumCase::Interior);
  CHECK(J.rank_deficient);
  const Matrix fd = fd_jacobian(oracle, th, 1e-4);
  const Matrix ref = J.range_projector * fd;
  CHECK((J.jacobian - ref).norm() / ref.norm() < 1e-3);
}

TEST_CASE("argmax oracle") {
  const auto lin = make_model(ModelSpec::linear(2), 0);
  Rng rng(6);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 20; ++k) {
    const Vector th = v2(u(rng), u(rng)), x = v2(u(rng), u(rng));
    for (Norm p : {Norm::L2, Norm::LInf}) {
      const NormBall ball{p, 0.6};
      const auto o = argmax_oracle(lin, th, x, Label::Negative, ball, 41, 3, 9);
      CHECK(std::abs(o.achieved_loss - dual_norm_adv_loss(th, x, Label::Negative, ball)) < 1e-6);
    }
  }
  const auto z = argmax_oracle(lin, v2(1, 1), kX, Label::Positive, {Norm::L2, 0.0}, 11, 2, 0);
  CHECK(z.x_prime == kX);
  const auto a = argmax_oracle(lin, v2(1, -1), kX, Label::Positive, {Norm::LInf, 0.6}, 21, 3, 4);
  const auto b = argmax_oracle(lin, v2(1, -1), kX, Label::Positive, {Norm::LInf, 0.6}, 21, 3, 4);
  CHECK(a.delta == b.delta);
  const auto m4 = make_model(ModelSpec::linear(4), 0);
  CHECK_THROWS_AS(argmax_oracle(m4, Vector::Ones(4), Vector::Zero(4), Label::Positive, {Norm::L2, 1}, 5, 1, 0),
                  UnsupportedError);
}

TEST_CASE("epsilon sharpness") {
  ScalarFn q = [](const Vector& v) { return 0.5 * v.squaredNorm(); };
  VectorFn g = [](const Vector& v) { return v; };
  const auto s = epsilon_sharpness(q, g, v2(0, 0), 1.0, 4, 1);
  CHECK(s.value == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(s.approximation == doctest::Approx(0.5).epsilon(1e-6));
  ScalarFn c = [](const Vector&) { return 2.0; };
  VectorFn cz = [](const Vector& v) { return Vector::Zero(v.size()); };
  CHECK(epsilon_sharpness(c, cz, v2(1, 1), 0.3, 3, 1).value == 0.0);

  // adversarial linear loss near a minimizer of a small dataset
  const LabeledDataset data({{v2(1, 0.2), Label::Positive}, {v2(-0.8, 0.5), Label::Negative}});
  const NormBall ball{Norm::LInf, 0.1};
  ScalarFn L = [&](const Vector& t) {
    double s = 0;
    for (const auto& e : data) s += dual_norm_adv_loss(t, e.x, e.y, ball);
    return s / 2;
  };
  VectorFn G = [&](const Vector& t) { return fd_gradient(L, t, 1e-6); };
  const auto r = epsilon_sharpness(L, G, v2(1.5, 0.4), 0.05, 5, 2);
  CHECK(r.value >= r.approximation - 1e-2);
}
