#include <doctest.h>

#include <cmath>

#include "advsmooth/model.hpp"
#include "advsmooth/rng.hpp"
#include "test_util.hpp"

using namespace advsmooth;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

const ModelSpec kSpecs[] = {ModelSpec::linear(3), ModelSpec::swish(3), ModelSpec::mlp(3, {5, 4}, Activation::Swish),
                            ModelSpec::mlp(2, {6}, Activation::Relu)};

}  // namespace

TEST_CASE("parameter counts") {
  CHECK(make_model(ModelSpec::linear(2), 1).param_count() == 2);
  CHECK(make_model(ModelSpec::swish(4), 1).param_count() == 4);
  CHECK(make_model(ModelSpec::mlp(2, {16, 16}, Activation::Swish), 7).param_count() == 337);
  CHECK_THROWS_AS(make_model(ModelSpec::mlp(2, {16, 0}, Activation::Swish), 7), ConfigError);
  CHECK_THROWS_AS(make_model(ModelSpec::mlp(2, {-3}, Activation::Relu), 7), ConfigError);
  CHECK_THROWS_AS(make_model(ModelSpec::linear(0), 7), ConfigError);
}

TEST_CASE("initialization is seeded and scaled by fan-in") {
  const auto a = make_model(ModelSpec::mlp(2, {16, 16}, Activation::Swish), 7);
  const auto b = make_model(ModelSpec::mlp(2, {16, 16}, Activation::Swish), 7);
  const auto c = make_model(ModelSpec::mlp(2, {16, 16}, Activation::Swish), 8);
  CHECK(a.initial_params() == b.initial_params());
  CHECK(a.initial_params() != c.initial_params());
  // first layer fan-in 2, second 16
  CHECK(a.initial_params().head(48).cwiseAbs().maxCoeff() <= 0.5 / std::sqrt(2.0));
  CHECK(a.initial_params().segment(48, 272).cwiseAbs().maxCoeff() <= 0.5 / 4.0);
}

TEST_CASE("linear logistic worked example") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const Vector th = v2(1, 1), x = v2(-1, 1);
  const auto lg = m.loss_and_grads(th, x, Label::Positive);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // oracle: central differences, step 1e-6
  const Vector fd = test::fd_grad([&](const Vector& t) { return m.loss(t, x, Label::Positive); }, th, 1e-6);
  CHECK(test::max_abs(lg.grad_theta - fd) < 1e-8);
  CHECK(lg.grad_theta[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lg.grad_theta[1] == doctest::Approx(-0.5).epsilon(1e-12));

  const Matrix H = m.hess_x(th, x, Label::Positive);
  const Matrix Hfd = test::fd_jacobian([&](const Vector& z) { return m.loss_and_grads(th, z, Label::Positive).grad_x; },
                                       x, 1e-5);
  CHECK(test::max_abs(H - Hfd) < 1e-8);
  CHECK(test::max_abs(H - 0.25 * Matrix::Ones(2, 2)) < 1e-15);

  const Matrix C = m.cross_hess(th, x, Label::Positive);
  const Matrix Cfd = test::fd_jacobian([&](const Vector& t) { return m.loss_and_grads(t, x, Label::Positive).grad_x; },
                                       th, 1e-5);
  CHECK(test::max_abs(C - Cfd) < 1e-8);
  Matrix expect(2, 2);
  expect << -0.75, 0.25, -0.25, -0.25;
  CHECK(test::max_abs(C - expect) < 1e-15);

  const Matrix C0 = m.cross_hess(Vector::Zero(2), Vector::Zero(2), Label::Positive);
  CHECK(test::max_abs(C0 + 0.5 * Matrix::Identity(2, 2)) < 1e-15);
}

TEST_CASE("swish logistic at the origin") {
  const auto m = make_model(ModelSpec::swish(2), 0);
  CHECK(m.loss(v2(1, 1), v2(0, 0), Label::Positive) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("gradients match central differences on random instances") {
  Rng rng(42);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& spec : kSpecs) {
    const auto m = make_model(spec, 3);
    for (int k = 0; k < 100; ++k) {
      Vector th = m.initial_params();
      for (auto& v : th) v = u(rng);
      Vector x(spec.input_dim);
      for (auto& v : x) v = u(rng);
      const Label y = k % 2 ? Label::Positive : Label::Negative;
      const auto lg = m.loss_and_grads(th, x, y);
      CHECK(lg.loss >= 0.0);
      const Vector gt = test::fd_grad([&](const Vector& t) { return m.loss(t, x, y); }, th, 1e-6);
      const Vector gx = test::fd_grad([&](const Vector& z) { return m.loss(th, z, y); }, x, 1e-6);
      CHECK((lg.grad_theta - gt).norm() <= 1e-4 * (lg.grad_theta.norm() + 1e-8) + 1e-9);
      CHECK((lg.grad_x - gx).norm() <= 1e-4 * (lg.grad_x.norm() + 1e-8) + 1e-9);
    }
  }
}

TEST_CASE("second derivatives: symmetry and agreement with differences") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const auto& spec : kSpecs) {
    if (spec.kind == ModelKind::Mlp && spec.activation == Activation::Relu) continue;  // kinks
    const auto m = make_model(spec, 11);
    for (int k = 0; k < 20; ++k) {
      Vector th = m.initial_params();
      for (auto& v : th) v = u(rng);
      Vector x(spec.input_dim);
      for (auto& v : x) v = u(rng);
      const Label y = k % 2 ? Label::Positive : Label::Negative;
      const Matrix H = m.hess_x(th, x, y);
      CHECK(test::max_abs(H - H.transpose()) < 1e-8);
      const Matrix Hfd = test::fd_jacobian([&](const Vector& z) { return m.loss_and_grads(th, z, y).grad_x; }, x, 1e-5);
      CHECK(test::max_abs(H - Hfd) < 1e-4);
      const Matrix C = m.cross_hess(th, x, y);
      const Matrix Cfd = test::fd_jacobian([&](const Vector& t) { return m.loss_and_grads(t, x, y).grad_x; }, th, 1e-5);
      CHECK(test::max_abs(C - Cfd) < 1e-4);
      // mixed partials in the other order: d/dx of grad_theta
      const Matrix Ct = test::fd_jacobian([&](const Vector& z) { return m.loss_and_grads(th, z, y).grad_theta; }, x, 1e-5);
      CHECK(test::max_abs(C - Ct.transpose()) < 1e-6);
    }
  }
}

TEST_CASE("stable loss for large logits") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const auto lg = m.loss_and_grads(v2(800, 0), v2(1, 0), Label::Negative);
  CHECK(lg.loss == doctest::Approx(800.0));
  CHECK(lg.grad_theta.allFinite());
  CHECK(m.loss(v2(800, 0), v2(1, 0), Label::Positive) == doctest::Approx(0.0));
}

TEST_CASE("swish derivative root lies in [-2, -1]") {
  // bisection on swish' which changes sign once on [-5, 0]
  double lo = -5.0, hi = 0.0;
  REQUIRE(swish_prime(lo) < 0.0);
  REQUIRE(swish_prime(hi) > 0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (swish_prime(mid) < 0.0 ? lo : hi) = mid;
  }
  CHECK(lo >= -2.0);
  CHECK(lo <= -1.0);
  // swish' and swish'' agree with differences of swish
  for (double t : {-3.0, -1.2, 0.0, 0.7, 4.0}) {
    CHECK(swish_prime(t) == doctest::Approx((swish(t + 1e-6) - swish(t - 1e-6)) / 2e-6).epsilon(1e-7));
    CHECK(swish_second(t) ==
          doctest::Approx((swish_prime(t + 1e-6) - swish_prime(t - 1e-6)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("block partitions cover the parameter vector") {
  const auto m = make_model(ModelSpec::mlp(3, {4, 2}, Activation::Swish), 1);
  for (const auto& blocks : {m.layer_blocks(), m.filter_blocks()}) {
    std::vector<int> hits(m.param_count(), 0);
    for (const auto& b : blocks)
      for (std::size_t i = b.offset; i < b.offset + b.size; ++i) ++hits[i];
    for (int h : hits) CHECK(h == 1);
  }
  CHECK(m.layer_blocks().size() == 6);
  CHECK(m.filter_blocks().size() == 4 + 2 + 1 + 3);
  CHECK(make_model(ModelSpec::linear(2), 0).layer_blocks().size() == 1);
}

TEST_CASE("dimension mismatch is reported") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  CHECK_THROWS_AS(m.loss(Vector::Zero(3), Vector::Zero(2), Label::Positive), ConfigError);
  CHECK_THROWS_AS(label_from_int(0), ConfigError);
}
