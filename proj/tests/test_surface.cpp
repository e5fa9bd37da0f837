#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "advsmooth/surface.hpp"
#include "test_util.hpp"

using namespace advsmooth;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

const LabeledDataset kData({{v2(-1, 1), Label::Positive}, {v2(0.5, 0.3), Label::Negative}});

bool crosses(double a, double b, double c) { return std::min(a, b) <= c && c <= std::max(a, b); }

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("advsmooth_test_" + name)).string();
}

}  // namespace

TEST_CASE("grid spec") {
  GridSpec s;
  CHECK(s.theta1(0) == -2.0);
  CHECK(s.theta1(80) == 2.0);
  CHECK(s.theta2(40) == 0.0);
  CHECK(s.variant_name() == "clean");
  s.variant = LossVariant::AdvLinf;
  s.entropy = true;
  CHECK(s.variant_name() == "entropy_of(adv_linf)");
  for (auto v : {LossVariant::Clean, LossVariant::AdvL2, LossVariant::AdvLinf, LossVariant::AdvL2Pgd,
                 LossVariant::AdvLinfPgd})
    CHECK(loss_variant_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(loss_variant_from_string("adv_l3"), ConfigError);
  s.resolution = 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = {};
  s.hi1 = s.lo1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("smooth surfaces have no flagged edges") {
  GridSpec s;
  s.resolution = 41;
  const auto g = sample_surface([](const Vector& t) { return t[0] * t[0] + 0.3 * t[1] * t[1] + t[0] * t[1]; }, s);
  CHECK(g.flagged.empty());
  CHECK(g.value(20, 20) == 0.0);
  CHECK(g.grad_norms.size() == 41 * 41);
  const auto m = make_model(ModelSpec::linear(2), 0);
  CHECK(sample_surface(m, kData, s, 0.6, {}).flagged.empty());
  // a steep but smooth ridge
  const auto r = sample_surface([](const Vector& t) { return std::exp(2.0 * t[0]) + t[1]; }, s);
  CHECK(r.flagged.empty());
}

TEST_CASE("kinks are flagged where they are") {
  GridSpec s;
  s.resolution = 41;
  const auto g = sample_surface([](const Vector& t) { return std::abs(t[0] - 0.013) + 0.1 * t[1] * t[1]; }, s);
  REQUIRE(!g.flagged.empty());
  for (const auto& e : g.flagged) CHECK(crosses(s.theta1(e.i1), s.theta1(e.i2), 0.013));

  const auto m = make_model(ModelSpec::linear(2), 0);
  s.variant = LossVariant::AdvLinf;
  const auto li = sample_surface(m, kData, s, 0.6, {});
  REQUIRE(!li.flagged.empty());
  bool both_axes[2] = {false, false};
  for (const auto& e : li.flagged) {
    const bool a1 = crosses(s.theta1(e.i1), s.theta1(e.i2), 0.0);
    const bool a2 = crosses(s.theta2(e.j1), s.theta2(e.j2), 0.0);
    CHECK((a1 || a2));
    both_axes[0] |= a1 && e.i1 != e.i2;
    both_axes[1] |= a2 && e.j1 != e.j2;
  }
  CHECK(both_axes[0]);
  CHECK(both_axes[1]);

  s.variant = LossVariant::AdvL2;
  const auto l2 = sample_surface(m, kData, s, 0.6, {});
  for (const auto& e : l2.flagged) CHECK(std::hypot(s.theta1(e.i1), s.theta2(e.j1)) < 0.25);
}

TEST_CASE("variant losses") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const Vector th = v2(0.7, -0.4);
  const double clean = make_variant_loss(m, kData, LossVariant::Clean, 0.6, {})(th);
  CHECK(clean == doctest::Approx(0.5 * (m.loss(th, kData[0].x, kData[0].y) + m.loss(th, kData[1].x, kData[1].y))));
  const double li = make_variant_loss(m, kData, LossVariant::AdvLinf, 0.6, {})(th);
  CHECK(li == doctest::Approx(0.5 * (dual_norm_adv_loss(th, kData[0].x, kData[0].y, {Norm::LInf, 0.6}) +
                                     dual_norm_adv_loss(th, kData[1].x, kData[1].y, {Norm::LInf, 0.6}))));
  const double pg = make_variant_loss(m, kData, LossVariant::AdvLinfPgd, 0.6, {20, 0.15, false, 0})(th);
  CHECK(pg <= li + 1e-12);
  CHECK(pg >= li - 1e-6);
  const auto sw = make_model(ModelSpec::swish(2), 0);
  CHECK_THROWS_AS(make_variant_loss(sw, kData, LossVariant::AdvL2, 0.6, {}), UnsupportedError);
  const auto big = make_model(ModelSpec::linear(3), 0);
  CHECK_THROWS_AS(sample_surface(big, kData, GridSpec{}, 0.6, {}), ConfigError);
}

TEST_CASE("entropy surface matches pointwise local entropy") {
  const auto m = make_model(ModelSpec::linear(2), 0);
  const ScalarFn loss = make_variant_loss(m, kData, LossVariant::AdvLinf, 0.6, {});
  GridSpec s;
  s.resolution = 5;
  s.variant = LossVariant::AdvLinf;
  QuadratureSpec q;
  q.points_per_axis = 64;
  const auto g = sample_entropy_surface(loss, s, 0.5, q);
  CHECK(g.spec.entropy);
  QuadratureSpec a = q;
  a.anchor = v2(0, 0);
  a.margin = 2.0;
  CHECK(g.value(1, 3) == doctest::Approx(local_entropy_exact(loss, v2(s.theta1(1), s.theta2(3)), 0.5, a).value)
                             .epsilon(1e-14));
  CHECK(g.flagged.empty());
}

TEST_CASE("filter-normalized slices") {
  const auto m = make_model(ModelSpec::mlp(2, {3}, Activation::Swish), 1);
  const ParamVector th = m.initial_params();
  int calls = 0;
  Vector last;
  const ScalarFn f = [&](const Vector& t) {
    ++calls;
    last = t;
    return t.squaredNorm();
  };
  const auto c = filter_normalized_slice(m, th, f, 2, {-1.0, 0.0, 1.0}, 4);
  REQUIRE(c.size() == 2);
  CHECK(c[0].losses[1] == doctest::Approx(th.squaredNorm()));
  // alpha = 1: theta + d with every filter block of d matching theta's block norm
  const Vector d = last - th;
  for (const auto& b : m.filter_blocks())
    CHECK(d.segment(b.offset, b.size).norm() == doctest::Approx(th.segment(b.offset, b.size).norm()).epsilon(1e-12));
  CHECK(calls == 6);
  CHECK(c[0].losses != c[1].losses);
}

TEST_CASE("export round trip") {
  GridSpec s;
  s.resolution = 7;
  s.variant = LossVariant::AdvL2Pgd;
  auto g = sample_surface([](const Vector& t) { return std::abs(t[0]) / 3.0 + std::sin(t[1]); }, s);
  g.metadata.emplace_back("note", "x");
  const auto jp = tmp_path("grid.json");
  export_grid(g, jp, ExportFormat::Json);
  const auto r = import_grid_json(jp);
  CHECK(r.values == g.values);
  CHECK(r.grad_norms == g.grad_norms);
  CHECK(r.spec.variant == s.variant);
  CHECK(r.spec.resolution == 7);
  CHECK(r.metadata == g.metadata);
  REQUIRE(r.flagged.size() == g.flagged.size());
  for (std::size_t k = 0; k < r.flagged.size(); ++k) CHECK(r.flagged[k].jump == g.flagged[k].jump);

  const auto cp = tmp_path("grid.csv");
  export_grid(g, cp, ExportFormat::Csv);
  CHECK(std::filesystem::exists(cp + ".meta.json"));
  const auto rc = import_grid_csv(cp, s);
  CHECK(rc.values == g.values);
  CHECK(rc.grad_norms == g.grad_norms);
  std::filesystem::remove(jp);
  std::filesystem::remove(cp);
  std::filesystem::remove(cp + ".meta.json");
  CHECK_THROWS_AS(import_grid_json(jp), IoError);
  CHECK_THROWS_AS(export_grid(g, "/nonexistent_dir/x.csv", ExportFormat::Csv), IoError);
}
