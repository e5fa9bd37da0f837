#include "advsmooth/config.hpp"

#include <fstream>
#include <limits>
#include <set>

namespace advsmooth {

using nlohmann::json;

namespace {

std::string type_name(const json& j) { return j.type_name(); }

// Object cursor that remembers which keys were read so leftovers can be
// reported as unknown fields.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object, got " + type_name(j_));
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
  }

  std::string at(const std::string& key) const { return path_ + "." + key; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    if (!has(key)) fail(at(key), "required field is missing");
    return j_.at(key);
  }

  Node child(const std::string& key) { return Node(raw(key), at(key)); }

  double num(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      fail(at(key), "required field is missing");
    }
    const json& v = j_.at(key);
    if (!v.is_number()) fail(at(key), "expected a number, got " + type_name(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(at(key), "must be finite");
    return d;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      fail(at(key), "required field is missing");
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer, got " + type_name(v));
    return v.get<std::int64_t>();
  }

  std::int64_t positive_int(const std::string& key, std::optional<std::int64_t> def = std::nullopt) {
    const auto v = integer(key, def);
    if (v < 1) fail(at(key), "must be >= 1");
    return v;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(at(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(at(key), "expected a boolean, got " + type_name(v));
    return v.get<bool>();
  }

  std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      fail(at(key), "required field is missing");
    }
    const json& v = j_.at(key);
    if (!v.is_string()) fail(at(key), "expected a string, got " + type_name(v));
    return v.get<std::string>();
  }

  Vector vec(const std::string& key) { return to_vector(raw(key), at(key)); }

  static Vector to_vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
      if (!std::isfinite(out[static_cast<Eigen::Index>(i)]))
        fail(path + "[" + std::to_string(i) + "]", "must be finite");
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key, std::vector<int> def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(at(key), "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) fail(at(key) + "[" + std::to_string(i) + "]", "expected an integer");
      out.push_back(v[i].get<int>());
    }
    return out;
  }

  std::pair<double, double> range(const std::string& key, std::pair<double, double> def) {
    if (!has(key)) return def;
    const Vector v = vec(key);
    if (v.size() != 2) fail(at(key), "expected [lo, hi]");
    return {v[0], v[1]};
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(at(k), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Re-throws validation errors from the library types with the field path.
template <class F>
void checked(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    Node::fail(path, e.what());
  }
}

void check_version(Node& root) {
  const auto v = root.integer("schema_version");
  if (v != kSchemaVersion)
    Node::fail(root.at("schema_version"), "unsupported version " + std::to_string(v) + " (expected " +
                                              std::to_string(kSchemaVersion) + ")");
}

NormBall parse_ball(Node n) {
  NormBall b;
  checked(n.at("norm"), [&] { b.p = norm_from_string(n.str("norm")); });
  b.epsilon = n.num("epsilon");
  checked(n.path(), [&] { b.validate(); });
  n.finish();
  return b;
}

PgdConfig parse_pgd(Node n, PgdConfig def, bool allow_seed) {
  PgdConfig p = def;
  p.steps = static_cast<int>(n.integer("steps", def.steps));
  p.step_size = n.num("step_size", def.step_size);
  p.random_init = n.boolean("random_init", def.random_init);
  if (allow_seed) p.seed = n.seed("seed", def.seed);
  checked(n.path(), [&] { p.validate(); });
  n.finish();
  return p;
}

ModelSpec parse_model(Node n, int default_dim) {
  ModelSpec m;
  checked(n.at("kind"), [&] { m.kind = model_kind_from_string(n.str("kind")); });
  m.input_dim = static_cast<int>(n.positive_int("input_dim", default_dim));
  if (m.kind == ModelKind::Mlp) {
    m.hidden = n.int_list("hidden", {16, 16});
    for (int w : m.hidden)
      if (w < 1) Node::fail(n.at("hidden"), "widths must be >= 1");
    checked(n.at("activation"), [&] { m.activation = activation_from_string(n.str("activation", "swish")); });
  } else if (n.has("hidden") || n.has("activation")) {
    Node::fail(n.path(), "hidden/activation apply only to kind 'mlp'");
  }
  n.finish();
  return m;
}

Label parse_label(const json& v, const std::string& path) {
  if (!v.is_number_integer()) Node::fail(path, "expected -1 or 1");
  Label y = Label::Positive;
  checked(path, [&] { y = label_from_int(v.get<int>()); });
  return y;
}

DataSource parse_data(const json& v, const std::string& path) {
  DataSource d;
  if (v.is_array()) {
    if (v.empty()) Node::fail(path, "needs at least one point");
    for (std::size_t i = 0; i < v.size(); ++i) {
      Node p(v[i], path + "[" + std::to_string(i) + "]");
      Example e{p.vec("x"), parse_label(p.raw("y"), p.at("y"))};
      p.finish();
      if (!d.points.empty() && e.x.size() != d.points.front().x.size())
        Node::fail(p.at("x"), "input dimension differs from the first point");
      d.points.push_back(std::move(e));
    }
    return d;
  }
  Node n(v, path);
  Node s = n.child("synthetic");
  d.synthetic = true;
  d.n = static_cast<std::size_t>(s.integer("n", 200));
  if (d.n < 2) Node::fail(s.at("n"), "must be >= 2");
  d.d = static_cast<std::size_t>(s.positive_int("d", 2));
  d.seed = s.seed("seed", 0);
  d.split = s.str("split", "train");
  if (d.split != "train" && d.split != "test") Node::fail(s.at("split"), "expected 'train' or 'test'");
  s.finish();
  n.finish();
  return d;
}

std::size_t data_dim(const DataSource& d) {
  return d.synthetic ? d.d : static_cast<std::size_t>(d.points.front().x.size());
}

QuadratureSpec parse_quadrature(Node n) {
  QuadratureSpec q;
  q.half_width = n.num("half_width", q.half_width);
  q.points_per_axis = static_cast<int>(n.integer("points_per_axis", q.points_per_axis));
  checked(n.path(), [&] { q.validate(); });
  n.finish();
  return q;
}

LossVariant parse_variant(Node& n, const std::string& key) {
  LossVariant v{};
  checked(n.at(key), [&] { v = loss_variant_from_string(n.str(key)); });
  return v;
}

ModelKind parse_two_param_kind(Node& n, const std::string& key) {
  ModelKind k{};
  checked(n.at(key), [&] { k = model_kind_from_string(n.str(key)); });
  if (k == ModelKind::Mlp) Node::fail(n.at(key), "surfaces need a 2-parameter model (linear or swish)");
  return k;
}

}  // namespace

LabeledDataset DataSource::load() const {
  if (!synthetic) return LabeledDataset(points);
  auto [train, test] = make_synthetic_dataset(n, d, seed);
  return split == "test" ? test : train;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": not valid JSON: " + e.what());
  }
}

SurfaceJob parse_surface_job(const json& j) {
  Node root(j, "$");
  check_version(root);
  SurfaceJob s;
  s.seed = root.seed("seed", 0);
  {
    Node g = root.child("grid");
    std::tie(s.grid.lo1, s.grid.hi1) = g.range("theta1_range", {-2.0, 2.0});
    std::tie(s.grid.lo2, s.grid.hi2) = g.range("theta2_range", {-2.0, 2.0});
    s.grid.resolution = static_cast<int>(g.integer("resolution", 81));
    checked(g.path(), [&] { s.grid.validate(); });
    g.finish();
  }
  s.data = parse_data(root.raw("data"), root.at("data"));
  if (data_dim(s.data) != 2) Node::fail(root.at("data"), "surfaces need 2-dimensional inputs");
  s.epsilon = root.num("epsilon", 0.6);
  if (s.epsilon < 0.0) Node::fail(root.at("epsilon"), "must be >= 0");
  PgdConfig def{20, s.epsilon / 4.0, false, s.seed};
  s.pgd = root.has("pgd") ? parse_pgd(root.child("pgd"), def, true) : def;
  const json& list = root.raw("surfaces");
  if (!list.is_array() || list.empty()) Node::fail(root.at("surfaces"), "expected a non-empty array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    Node it(list[i], root.at("surfaces") + "[" + std::to_string(i) + "]");
    SurfaceItem item;
    item.model = parse_two_param_kind(it, "model");
    item.variant = parse_variant(it, "variant");
    item.entropy = it.boolean("entropy", false);
    const bool closed = item.variant == LossVariant::AdvL2 || item.variant == LossVariant::AdvLinf;
    if (closed && item.model != ModelKind::LinearLogistic)
      Node::fail(it.at("variant"), "closed-form variants need the linear model; use the _pgd variant");
    it.finish();
    s.surfaces.push_back(item);
  }
  if (root.has("entropy")) {
    Node e = root.child("entropy");
    s.entropy_gamma = e.num("gamma", s.entropy_gamma);
    if (!(s.entropy_gamma > 0.0)) Node::fail(e.at("gamma"), "must be > 0");
    if (e.has("quadrature")) s.quadrature = parse_quadrature(e.child("quadrature"));
    e.finish();
  }
  const std::string fmt = root.str("format", "csv");
  if (fmt == "csv")
    s.format = ExportFormat::Csv;
  else if (fmt == "json")
    s.format = ExportFormat::Json;
  else
    Node::fail(root.at("format"), "expected 'csv' or 'json'");
  root.finish();
  return s;
}

ProbeJob parse_probe_job(const json& j) {
  Node root(j, "$");
  check_version(root);
  ProbeJob p;
  p.seed = root.seed("seed", 0);
  p.data = parse_data(root.raw("data"), root.at("data"));
  const auto dim = static_cast<int>(data_dim(p.data));
  p.model = parse_model(root.child("model"), dim);
  if (p.model.input_dim != dim) Node::fail(root.at("model") + ".input_dim", "must match the data dimension");
  p.init_seed = root.seed("init_seed", 0);
  const auto m = make_model(p.model, p.init_seed).param_count();
  {
    Node r = root.child("region");
    if (r.has("box")) {
      Node b = r.child("box");
      p.region = Region::box(b.vec("lo"), b.vec("hi"));
      b.finish();
    } else {
      p.region = Region::square(m, r.num("half_width", 2.0));
    }
    if (static_cast<std::size_t>(p.region.lo.size()) != m || static_cast<std::size_t>(p.region.hi.size()) != m)
      Node::fail(r.path(), "box dimension must equal the parameter count " + std::to_string(m));
    if (r.has("norm_at_least")) {
      p.region.predicate = RegionPredicate::NormAtLeast;
      p.region.theta_min = r.num("norm_at_least");
    }
    if (r.has("orthant")) {
      if (p.region.predicate != RegionPredicate::None) Node::fail(r.path(), "choose one predicate");
      p.region.predicate = RegionPredicate::FixedOrthant;
      p.region.orthant = r.int_list("orthant", {});
    }
    checked(r.path(), [&] { p.region.validate(); });
    r.finish();
  }
  p.x_radius = root.num("x_radius", p.x_radius);
  if (p.x_radius < 0.0) Node::fail(root.at("x_radius"), "must be >= 0");
  p.n_pairs = static_cast<std::size_t>(root.positive_int("n_pairs", 5000));
  p.min_sep = root.num("min_sep", p.min_sep);
  if (!(p.min_sep > 0.0)) Node::fail(root.at("min_sep"), "must be > 0");
  if (root.has("ball")) p.ball = parse_ball(root.child("ball"));
  if (root.has("theta")) {
    p.theta = root.vec("theta");
    if (static_cast<std::size_t>(p.theta->size()) != m)
      Node::fail(root.at("theta"), "length must equal the parameter count " + std::to_string(m));
  }
  if (root.has("sharpness")) {
    Node s = root.child("sharpness");
    p.sharpness_radius = s.num("radius", p.sharpness_radius);
    if (!(p.sharpness_radius > 0.0)) Node::fail(s.at("radius"), "must be > 0");
    p.sharpness_restarts = static_cast<int>(s.positive_int("restarts", p.sharpness_restarts));
    s.finish();
  }
  root.finish();
  return p;
}

EntropyJob parse_entropy_job(const json& j) {
  Node root(j, "$");
  check_version(root);
  EntropyJob e;
  e.seed = root.seed("seed", 0);
  e.model = parse_two_param_kind(root, "model");
  e.variant = parse_variant(root, "variant");
  e.data = parse_data(root.raw("data"), root.at("data"));
  if (data_dim(e.data) != 2) Node::fail(root.at("data"), "needs 2-dimensional inputs");
  e.epsilon = root.num("epsilon", e.epsilon);
  if (e.epsilon < 0.0) Node::fail(root.at("epsilon"), "must be >= 0");
  PgdConfig def{20, e.epsilon / 4.0, false, e.seed};
  e.pgd = root.has("pgd") ? parse_pgd(root.child("pgd"), def, true) : def;
  e.gamma = root.num("gamma", e.gamma);
  if (!(e.gamma > 0.0)) Node::fail(root.at("gamma"), "must be > 0");
  if (root.has("quadrature")) e.quadrature = parse_quadrature(root.child("quadrature"));
  const json& th = root.raw("thetas");
  if (!th.is_array() || th.empty()) Node::fail(root.at("thetas"), "expected a non-empty array");
  for (std::size_t i = 0; i < th.size(); ++i) {
    const std::string path = root.at("thetas") + "[" + std::to_string(i) + "]";
    Vector v = Node::to_vector(th[i], path);
    if (v.size() != 2) Node::fail(path, "expected [theta1, theta2]");
    e.thetas.push_back(std::move(v));
  }
  root.finish();
  return e;
}

ExperimentConfig parse_experiment(const json& j) {
  Node root(j, "$");
  check_version(root);
  ExperimentConfig c;
  c.seed = root.seed("seed", 0);
  {
    Node d = root.child("dataset");
    c.n = static_cast<std::size_t>(d.integer("n", 200));
    if (c.n < 2) Node::fail(d.at("n"), "must be >= 2");
    c.d = static_cast<std::size_t>(d.positive_int("d", 2));
    if (d.has("seed")) c.data_seed = d.seed("seed", 0);
    d.finish();
  }
  c.model = parse_model(root.child("model"), static_cast<int>(c.d));
  if (root.has("ball")) c.ball = parse_ball(root.child("ball"));
  if (root.has("pgd_train")) c.pgd_train = parse_pgd(root.child("pgd_train"), c.pgd_train, false);
  if (root.has("pgd_eval")) c.pgd_eval = parse_pgd(root.child("pgd_eval"), c.pgd_eval, false);
  checked(root.at("optimizer"), [&] { c.optimizer = optimizer_from_string(root.str("optimizer", "sgd")); });
  if (root.has("ensgd")) {
    Node e = root.child("ensgd");
    auto& x = c.ensgd;
    x.gamma = e.num("gamma", x.gamma);
    x.eta = e.num("eta", x.eta);
    x.eta_prime = e.num("eta_prime", x.eta_prime);
    x.eps_langevin = e.num("eps_langevin", x.eps_langevin);
    x.langevin_iters = static_cast<int>(e.integer("langevin_iters", x.langevin_iters));
    x.alpha = e.num("alpha", x.alpha);
    x.variance_floor = e.num("variance_floor", x.variance_floor);
    checked(e.path(), [&] { x.validate(); });
    e.finish();
  }
  if (root.has("awp")) {
    Node a = root.child("awp");
    AwpConfig w;
    w.gamma_a = a.num("gamma_a", w.gamma_a);
    w.inner_steps = static_cast<int>(a.integer("inner_steps", w.inner_steps));
    checked(a.path(), [&] { w.validate(); });
    a.finish();
    c.awp = w;
  }
  c.epochs = static_cast<int>(root.positive_int("epochs", c.epochs));
  c.batch_size = static_cast<std::size_t>(root.positive_int("batch_size", static_cast<std::int64_t>(c.batch_size)));
  if (root.has("lr")) {
    Node l = root.child("lr");
    c.lr.initial = l.num("initial", c.lr.initial);
    c.lr.decay = l.num("decay", c.lr.decay);
    c.lr.milestones = l.int_list("milestones", c.lr.milestones);
    l.finish();
  }
  c.momentum = root.num("momentum", c.momentum);
  c.weight_decay = root.num("weight_decay", c.weight_decay);
  c.early_stopping = root.str("early_stopping", c.early_stopping);
  root.finish();
  checked("$", [&] { c.validate(); });
  return c;
}

VerifyJob parse_verify_job(const json& j) {
  Node root(j, "$");
  check_version(root);
  VerifyJob v;
  v.seed = root.seed("seed", v.seed);
  if (root.has("checks")) {
    const json& c = root.raw("checks");
    if (!c.is_array()) Node::fail(root.at("checks"), "expected an array of check names");
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c[i].is_string()) Node::fail(root.at("checks") + "[" + std::to_string(i) + "]", "expected a string");
      v.checks.push_back(c[i].get<std::string>());
    }
  }
  root.finish();
  return v;
}

json to_json(const ExperimentConfig& c) {
  auto pgd = [](const PgdConfig& p) {
    return json{{"steps", p.steps}, {"step_size", p.step_size}, {"random_init", p.random_init}};
  };
  json model{{"kind", to_string(c.model.kind)}, {"input_dim", c.model.input_dim}};
  if (c.model.kind == ModelKind::Mlp) {
    model["hidden"] = c.model.hidden;
    model["activation"] = to_string(c.model.activation);
  }
  json dataset{{"n", c.n}, {"d", c.d}};
  if (c.data_seed) dataset["seed"] = *c.data_seed;
  json j{{"schema_version", kSchemaVersion},
         {"seed", c.seed},
         {"dataset", dataset},
         {"model", model},
         {"ball", {{"norm", to_string(c.ball.p)}, {"epsilon", c.ball.epsilon}}},
         {"pgd_train", pgd(c.pgd_train)},
         {"pgd_eval", pgd(c.pgd_eval)},
         {"optimizer", to_string(c.optimizer)},
         {"ensgd",
          {{"gamma", c.ensgd.gamma},
           {"eta", c.ensgd.eta},
           {"eta_prime", c.ensgd.eta_prime},
           {"eps_langevin", c.ensgd.eps_langevin},
           {"langevin_iters", c.ensgd.langevin_iters},
           {"alpha", c.ensgd.alpha},
           {"variance_floor", c.ensgd.variance_floor}}},
         {"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"lr", {{"initial", c.lr.initial}, {"decay", c.lr.decay}, {"milestones", c.lr.milestones}}},
         {"momentum", c.momentum},
         {"weight_decay", c.weight_decay},
         {"early_stopping", c.early_stopping}};
  if (c.awp) j["awp"] = {{"gamma_a", c.awp->gamma_a}, {"inner_steps", c.awp->inner_steps}};
  return j;
}

}  // namespace advsmooth
