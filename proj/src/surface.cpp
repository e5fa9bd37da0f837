#include "advsmooth/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "advsmooth/rng.hpp"

namespace advsmooth {

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::Clean: return "clean";
    case LossVariant::AdvL2: return "adv_l2";
    case LossVariant::AdvLinf: return "adv_linf";
    case LossVariant::AdvL2Pgd: return "adv_l2_pgd";
    case LossVariant::AdvLinfPgd: return "adv_linf_pgd";
  }
  return "?";
}

LossVariant loss_variant_from_string(const std::string& s) {
  for (auto v : {LossVariant::Clean, LossVariant::AdvL2, LossVariant::AdvLinf, LossVariant::AdvL2Pgd,
                 LossVariant::AdvLinfPgd})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown loss variant '" + s +
                    "' (expected clean, adv_l2, adv_linf, adv_l2_pgd or adv_linf_pgd)");
}

void GridSpec::validate() const {
  if (!(lo1 < hi1) || !(lo2 < hi2)) throw ConfigError("grid axis ranges need lo < hi");
  if (resolution < 2) throw ConfigError("grid resolution must be >= 2");
}

double GridSpec::theta1(int i) const { return lo1 + (hi1 - lo1) * i / (resolution - 1); }
double GridSpec::theta2(int j) const { return lo2 + (hi2 - lo2) * j / (resolution - 1); }

std::string GridSpec::variant_name() const {
  return entropy ? "entropy_of(" + to_string(variant) + ")" : to_string(variant);
}

ScalarFn make_variant_loss(const Model& model, const LabeledDataset& data, LossVariant variant, double epsilon,
                           const PgdConfig& pgd) {
  if (data.empty()) throw ConfigError("surface dataset must be non-empty");
  AttackSpec spec;
  spec.pgd = pgd;
  switch (variant) {
    case LossVariant::Clean: spec.ball = {Norm::L2, 0.0}; break;
    case LossVariant::AdvL2: spec.ball = {Norm::L2, epsilon}; break;
    case LossVariant::AdvLinf: spec.ball = {Norm::LInf, epsilon}; break;
    case LossVariant::AdvL2Pgd: spec.ball = {Norm::L2, epsilon}; spec.method = AttackMethod::Pgd; break;
    case LossVariant::AdvLinfPgd: spec.ball = {Norm::LInf, epsilon}; spec.method = AttackMethod::Pgd; break;
  }
  spec.ball.validate();
  const bool closed = variant == LossVariant::AdvL2 || variant == LossVariant::AdvLinf;
  if (closed && model.kind() != ModelKind::LinearLogistic)
    throw UnsupportedError("closed-form surface variant " + to_string(variant) + " requires the linear model");
  if (spec.method == AttackMethod::Pgd) pgd.validate();

  if (variant == LossVariant::Clean) {
    return [&model, &data](const Vector& th) {
      double s = 0.0;
      for (const auto& ex : data) s += model.loss(th, ex.x, ex.y);
      return s / static_cast<double>(data.size());
    };
  }
  if (closed) {
    return [&data, ball = spec.ball](const Vector& th) {
      double s = 0.0;
      for (const auto& ex : data) s += dual_norm_adv_loss(th, ex.x, ex.y, ball);
      return s / static_cast<double>(data.size());
    };
  }
  return [&model, &data, spec](const Vector& th) {
    return adversarial_batch_loss(model, th, data, spec, {}, false).loss;
  };
}

namespace {

using ValueGrad = std::function<std::pair<double, Vector>(const Vector&)>;

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

SurfaceGrid sample_with(const ValueGrad& vg, const GridSpec& spec) {
  spec.validate();
  const int n = spec.resolution;
  SurfaceGrid g;
  g.spec = spec;
  g.values.resize(static_cast<std::size_t>(n * n));
  g.grad_norms.resize(g.values.size());
  std::vector<Vector> grads(g.values.size());
  auto at = [&](int i, int j) { return Vector((Vector(2) << spec.theta1(i), spec.theta2(j)).finished()); };

  double gmax = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(i * n + j);
      auto [v, gr] = vg(at(i, j));
      if (!std::isfinite(v)) throw NumericError("non-finite surface value at node (" + std::to_string(i) + ", " +
                                                std::to_string(j) + ")");
      g.values[k] = v;
      g.grad_norms[k] = gr.norm();
      gmax = std::max(gmax, g.grad_norms[k]);
      grads[k] = std::move(gr);
    }
  }

  std::vector<FlaggedEdge> edges;
  std::vector<double> jumps;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(i * n + j);
      if (i + 1 < n) edges.push_back({i, j, i + 1, j, (grads[k] - grads[k + static_cast<std::size_t>(n)]).norm()});
      if (j + 1 < n) edges.push_back({i, j, i, j + 1, (grads[k] - grads[k + 1]).norm()});
    }
  }
  for (const auto& e : edges) jumps.push_back(e.jump);
  const double threshold = 5.0 * median(jumps);
  const double floor = 1e-6 * (1.0 + gmax);

  for (const auto& e : edges) {
    if (!(e.jump > threshold && e.jump > floor)) continue;
    Vector a = at(e.i1, e.j1), b = at(e.i2, e.j2);
    Vector ga = grads[static_cast<std::size_t>(e.i1 * n + e.j1)];
    Vector gb = grads[static_cast<std::size_t>(e.i2 * n + e.j2)];
    double sub = e.jump;
    for (int level = 0; level < 3; ++level) {
      const Vector m = 0.5 * (a + b);
      const Vector gm = vg(m).second;
      const double left = (ga - gm).norm(), right = (gm - gb).norm();
      if (left >= right) {
        b = m;
        gb = gm;
        sub = left;
      } else {
        a = m;
        ga = gm;
        sub = right;
      }
    }
    if (sub >= 0.5 * e.jump) g.flagged.push_back(e);
  }
  return g;
}

}  // namespace

SurfaceGrid sample_surface(const ScalarFn& loss, const GridSpec& spec) {
  ValueGrad vg = [&loss](const Vector& th) { return std::make_pair(loss(th), fd_gradient(loss, th, 1e-6)); };
  return sample_with(vg, spec);
}

SurfaceGrid sample_surface(const Model& model, const LabeledDataset& data, const GridSpec& spec, double epsilon,
                           const PgdConfig& pgd) {
  if (model.param_count() != 2) throw ConfigError("surface sampling needs a model with exactly 2 parameters");
  if (spec.entropy) throw ConfigError("use sample_entropy_surface for entropy variants");
  const ScalarFn loss = make_variant_loss(model, data, spec.variant, epsilon, pgd);
  SurfaceGrid g = sample_surface(loss, spec);
  g.metadata.emplace_back("model", to_string(model.kind()));
  g.metadata.emplace_back("epsilon", std::to_string(epsilon));
  if (spec.variant == LossVariant::AdvL2Pgd || spec.variant == LossVariant::AdvLinfPgd) {
    g.metadata.emplace_back("pgd_steps", std::to_string(pgd.steps));
    g.metadata.emplace_back("pgd_step_size", std::to_string(pgd.step_size));
    g.metadata.emplace_back("pgd_random_init", pgd.random_init ? "true" : "false");
    g.metadata.emplace_back("pgd_seed", std::to_string(pgd.seed));
  }
  return g;
}

SurfaceGrid sample_entropy_surface(const ScalarFn& loss, const GridSpec& spec, double gamma,
                                   const QuadratureSpec& quad) {
  spec.validate();
  QuadratureSpec q = quad;
  q.anchor = (Vector(2) << 0.5 * (spec.lo1 + spec.hi1), 0.5 * (spec.lo2 + spec.hi2)).finished();
  q.margin = 0.5 * std::max(spec.hi1 - spec.lo1, spec.hi2 - spec.lo2);
  ValueGrad vg = [&](const Vector& th) {
    const auto le = local_entropy_exact(loss, th, gamma, q);
    return std::make_pair(le.value, le.gradient);
  };
  GridSpec s = spec;
  s.entropy = true;
  SurfaceGrid g = sample_with(vg, s);
  g.metadata.emplace_back("gamma", std::to_string(gamma));
  g.metadata.emplace_back("quadrature_half_width", std::to_string(quad.half_width));
  g.metadata.emplace_back("quadrature_points_per_axis", std::to_string(quad.points_per_axis));
  return g;
}

std::vector<SliceCurve> filter_normalized_slice(const Model& model, const ParamVector& theta_star,
                                                const ScalarFn& loss, int n_directions,
                                                const std::vector<double>& alphas, std::uint64_t seed) {
  if (static_cast<std::size_t>(theta_star.size()) != model.param_count())
    throw ConfigError("theta_star dimension does not match the model");
  if (n_directions < 1) throw ConfigError("n_directions must be >= 1");
  std::vector<SliceCurve> out;
  const auto blocks = model.filter_blocks();
  for (int k = 0; k < n_directions; ++k) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
    Vector d = standard_normal(rng, model.param_count());
    for (const auto& b : blocks) {
      const auto off = static_cast<Eigen::Index>(b.offset);
      const auto len = static_cast<Eigen::Index>(b.size);
      const double wn = theta_star.segment(off, len).norm();
      const double dn = d.segment(off, len).norm();
      if (wn == 0.0 || dn == 0.0)
        d.segment(off, len).setZero();
      else
        d.segment(off, len) *= wn / dn;
    }
    SliceCurve c;
    c.alphas = alphas;
    for (double a : alphas) c.losses.push_back(a == 0.0 ? loss(theta_star) : loss(theta_star + a * d));
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

namespace {

nlohmann::json spec_json(const GridSpec& s) {
  return {{"theta1_range", {s.lo1, s.hi1}},
          {"theta2_range", {s.lo2, s.hi2}},
          {"resolution", s.resolution},
          {"variant", to_string(s.variant)},
          {"entropy", s.entropy},
          {"variant_name", s.variant_name()}};
}

nlohmann::json metadata_json(const SurfaceGrid& g) {
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [k, v] : g.metadata) m[k] = v;
  return m;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void export_grid(const SurfaceGrid& grid, const std::string& path, ExportFormat format) {
  const int n = grid.spec.resolution;
  if (grid.values.size() != static_cast<std::size_t>(n * n)) throw ConfigError("grid value count mismatch");
  if (format == ExportFormat::Json) {
    nlohmann::json j;
    j["spec"] = spec_json(grid.spec);
    j["metadata"] = metadata_json(grid);
    j["values"] = grid.values;
    j["grad_norms"] = grid.grad_norms;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : grid.flagged) edges.push_back({e.i1, e.j1, e.i2, e.j2, e.jump});
    j["flagged_edges"] = edges;
    auto f = open_out(path);
    f << j.dump(1) << '\n';
    if (!f) throw IoError("failed writing '" + path + "'");
    return;
  }

  auto f = open_out(path);
  const bool with_grad = !grid.grad_norms.empty();
  f << "theta1,theta2,value" << (with_grad ? ",grad_norm" : "") << '\n';
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(i * n + j);
      f << fmt17(grid.spec.theta1(i)) << ',' << fmt17(grid.spec.theta2(j)) << ',' << fmt17(grid.values[k]);
      if (with_grad) f << ',' << fmt17(grid.grad_norms[k]);
      f << '\n';
    }
  }
  if (!f) throw IoError("failed writing '" + path + "'");

  // Variant metadata and flagged edges go to a sidecar so the CSV stays plain.
  nlohmann::json meta;
  meta["spec"] = spec_json(grid.spec);
  meta["metadata"] = metadata_json(grid);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : grid.flagged) edges.push_back({e.i1, e.j1, e.i2, e.j2, e.jump});
  meta["flagged_edges"] = edges;
  auto m = open_out(path + ".meta.json");
  m << meta.dump(1) << '\n';
  if (!m) throw IoError("failed writing '" + path + ".meta.json'");
}

SurfaceGrid import_grid_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
    SurfaceGrid g;
    const auto& s = j.at("spec");
    g.spec.lo1 = s.at("theta1_range").at(0).get<double>();
    g.spec.hi1 = s.at("theta1_range").at(1).get<double>();
    g.spec.lo2 = s.at("theta2_range").at(0).get<double>();
    g.spec.hi2 = s.at("theta2_range").at(1).get<double>();
    g.spec.resolution = s.at("resolution").get<int>();
    g.spec.variant = loss_variant_from_string(s.at("variant").get<std::string>());
    g.spec.entropy = s.at("entropy").get<bool>();
    for (const auto& [k, v] : j.at("metadata").items()) g.metadata.emplace_back(k, v.get<std::string>());
    g.values = j.at("values").get<std::vector<double>>();
    g.grad_norms = j.at("grad_norms").get<std::vector<double>>();
    for (const auto& e : j.at("flagged_edges"))
      g.flagged.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>(), e.at(3).get<int>(),
                           e.at(4).get<double>()});
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed grid JSON '" + path + "': " + e.what());
  }
}

SurfaceGrid import_grid_csv(const std::string& path, const GridSpec& spec) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "'");
  SurfaceGrid g;
  g.spec = spec;
  std::string line;
  std::getline(f, line);
  const bool with_grad = line.find("grad_norm") != std::string::npos;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 3) throw IoError("malformed CSV row in '" + path + "'");
    g.values.push_back(row[2]);
    if (with_grad && row.size() > 3) g.grad_norms.push_back(row[3]);
  }
  return g;
}

}  // namespace advsmooth
