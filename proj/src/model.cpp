#include "advsmooth/model.hpp"

#include <cmath>

#include "advsmooth/rng.hpp"

namespace advsmooth {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LinearLogistic: return "linear";
    case ModelKind::SwishLogistic: return "swish";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "linear") return ModelKind::LinearLogistic;
  if (s == "swish") return ModelKind::SwishLogistic;
  if (s == "mlp") return ModelKind::Mlp;
  throw ConfigError("unknown model kind '" + s + "' (expected linear, swish or mlp)");
}

std::string to_string(Activation a) { return a == Activation::Swish ? "swish" : "relu"; }

Activation activation_from_string(const std::string& s) {
  if (s == "swish") return Activation::Swish;
  if (s == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + s + "' (expected swish or relu)");
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double swish(double u) { return u * sigmoid(u); }

double swish_prime(double u) {
  const double s = sigmoid(u);
  return s + u * s * (1.0 - s);
}

double swish_second(double u) {
  const double s = sigmoid(u);
  return s * (1.0 - s) * (2.0 + u * (1.0 - 2.0 * s));
}

namespace {

double act(Activation a, double v) { return a == Activation::Swish ? swish(v) : std::max(v, 0.0); }
double act_prime(Activation a, double v) {
  return a == Activation::Swish ? swish_prime(v) : (v > 0.0 ? 1.0 : 0.0);
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

Model::Model(ModelSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  if (spec_.input_dim < 1) throw ConfigError("model input dimension must be >= 1");
  if (spec_.kind == ModelKind::Mlp) {
    std::size_t in = static_cast<std::size_t>(spec_.input_dim);
    std::size_t offset = 0;
    std::vector<int> widths = spec_.hidden;
    widths.push_back(1);
    for (int w : widths) {
      if (w < 1) throw ConfigError("Mlp layer widths must be >= 1, got " + std::to_string(w));
      const auto out = static_cast<std::size_t>(w);
      layers_.push_back({in, out, offset, offset + in * out});
      offset += in * out + out;
      in = out;
    }
    param_count_ = offset;
  } else {
    if (!spec_.hidden.empty())
      throw ConfigError(to_string(spec_.kind) + " model takes no hidden layers");
    param_count_ = static_cast<std::size_t>(spec_.input_dim);
  }

  Rng rng(init_seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  theta0_.resize(static_cast<Eigen::Index>(param_count_));
  if (spec_.kind == ModelKind::Mlp) {
    for (const auto& l : layers_) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
      for (std::size_t i = 0; i < l.in * l.out + l.out; ++i)
        theta0_[static_cast<Eigen::Index>(l.w_offset + i)] = u(rng) * scale;
    }
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec_.input_dim));
    for (auto& v : theta0_) v = u(rng) * scale;
  }
}

Model make_model(const ModelSpec& spec, std::uint64_t init_seed) { return Model(spec, init_seed); }

void Model::check_dims(const ParamVector& theta, const InputPoint& x) const {
  if (static_cast<std::size_t>(theta.size()) != param_count_)
    throw ConfigError("parameter dimension " + std::to_string(theta.size()) + " != model's " +
                      std::to_string(param_count_));
  if (static_cast<std::size_t>(x.size()) != input_dim())
    throw ConfigError("input dimension " + std::to_string(x.size()) + " != model's " +
                      std::to_string(input_dim()));
}

double Model::mlp_forward(const ParamVector& theta, const InputPoint& x, std::vector<Vector>* pre,
                          std::vector<Vector>* post) const {
  Vector a = x;
  if (post) post->push_back(a);
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const auto W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        theta.data() + l.w_offset, static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
    const auto b = theta.segment(static_cast<Eigen::Index>(l.b_offset), static_cast<Eigen::Index>(l.out));
    Vector z = W * a + b;
    if (pre) pre->push_back(z);
    if (li + 1 == layers_.size()) return z[0];
    a = z.unaryExpr([this](double v) { return act(spec_.activation, v); });
    if (post) post->push_back(a);
  }
  return 0.0;
}

double Model::output(const ParamVector& theta, const InputPoint& x) const {
  check_dims(theta, x);
  switch (spec_.kind) {
    case ModelKind::LinearLogistic: return theta.dot(x);
    case ModelKind::SwishLogistic: return swish(theta.dot(x));
    case ModelKind::Mlp: return mlp_forward(theta, x, nullptr, nullptr);
  }
  return 0.0;
}

double Model::loss(const ParamVector& theta, const InputPoint& x, Label y) const {
  const double l = softplus(-sign_of(y) * output(theta, x));
  require_finite(l, "loss");
  return l;
}

LossGrads Model::mlp_loss_and_grads(const ParamVector& theta, const InputPoint& x, Label y) const {
  std::vector<Vector> pre, post;
  const double z = mlp_forward(theta, x, &pre, &post);
  const double ys = sign_of(y);
  LossGrads out;
  out.loss = softplus(-ys * z);
  out.grad_theta = Vector::Zero(static_cast<Eigen::Index>(param_count_));

  Vector delta(1);
  delta[0] = -ys * sigmoid(-ys * z);
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const auto W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        theta.data() + l.w_offset, static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
    auto gW = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        out.grad_theta.data() + l.w_offset, static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
    gW = delta * post[li].transpose();
    out.grad_theta.segment(static_cast<Eigen::Index>(l.b_offset), static_cast<Eigen::Index>(l.out)) = delta;
    Vector back = W.transpose() * delta;
    if (li == 0) {
      out.grad_x = back;
    } else {
      const Vector& zprev = pre[li - 1];
      delta = back.cwiseProduct(zprev.unaryExpr([this](double v) { return act_prime(spec_.activation, v); }));
    }
  }
  return out;
}

LossGrads Model::loss_and_grads(const ParamVector& theta, const InputPoint& x, Label y) const {
  check_dims(theta, x);
  LossGrads out;
  const double ys = sign_of(y);
  switch (spec_.kind) {
    case ModelKind::LinearLogistic: {
      const double t = -ys * theta.dot(x);
      const double s = sigmoid(t);
      out.loss = softplus(t);
      out.grad_theta = -ys * s * x;
      out.grad_x = -ys * s * theta;
      break;
    }
    case ModelKind::SwishLogistic: {
      const double u = theta.dot(x);
      const double t = -ys * swish(u);
      const double dl_du = -ys * sigmoid(t) * swish_prime(u);
      out.loss = softplus(t);
      out.grad_theta = dl_du * x;
      out.grad_x = dl_du * theta;
      break;
    }
    case ModelKind::Mlp: out = mlp_loss_and_grads(theta, x, y); break;
  }
  require_finite(out.loss, "loss");
  if (!out.grad_theta.allFinite() || !out.grad_x.allFinite()) throw NumericError("non-finite gradient");
  return out;
}

Matrix Model::hess_x(const ParamVector& theta, const InputPoint& x, Label y, double h) const {
  check_dims(theta, x);
  const double ys = sign_of(y);
  switch (spec_.kind) {
    case ModelKind::LinearLogistic: {
      const double s = sigmoid(-ys * theta.dot(x));
      return s * (1.0 - s) * theta * theta.transpose();
    }
    case ModelKind::SwishLogistic: {
      const double u = theta.dot(x);
      const double s = sigmoid(-ys * swish(u));
      const double zp = swish_prime(u);
      const double d2 = s * (1.0 - s) * zp * zp - ys * s * swish_second(u);
      return d2 * theta * theta.transpose();
    }
    case ModelKind::Mlp: {
      const auto d = x.size();
      Matrix H(d, d);
      Vector xp = x, xm = x;
      for (Eigen::Index j = 0; j < d; ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        H.col(j) = (loss_and_grads(theta, xp, y).grad_x - loss_and_grads(theta, xm, y).grad_x) / (2.0 * h);
        xp[j] = xm[j] = x[j];
      }
      return 0.5 * (H + H.transpose());
    }
  }
  return {};
}

Matrix Model::cross_hess(const ParamVector& theta, const InputPoint& x, Label y, double h) const {
  check_dims(theta, x);
  const double ys = sign_of(y);
  const auto d = x.size();
  switch (spec_.kind) {
    case ModelKind::LinearLogistic: {
      const double s = sigmoid(-ys * theta.dot(x));
      return -ys * s * Matrix::Identity(d, d) + s * (1.0 - s) * theta * x.transpose();
    }
    case ModelKind::SwishLogistic: {
      const double u = theta.dot(x);
      const double s = sigmoid(-ys * swish(u));
      const double zp = swish_prime(u);
      const double g = -ys * s;
      const double d2 = s * (1.0 - s) * zp * zp + g * swish_second(u);
      return g * zp * Matrix::Identity(d, d) + d2 * theta * x.transpose();
    }
    case ModelKind::Mlp: {
      const auto m = theta.size();
      Matrix C(d, m);
      Vector tp = theta, tm = theta;
      for (Eigen::Index j = 0; j < m; ++j) {
        tp[j] = theta[j] + h;
        tm[j] = theta[j] - h;
        C.col(j) = (loss_and_grads(tp, x, y).grad_x - loss_and_grads(tm, x, y).grad_x) / (2.0 * h);
        tp[j] = tm[j] = theta[j];
      }
      return C;
    }
  }
  return {};
}

std::vector<ParamBlock> Model::layer_blocks() const {
  if (spec_.kind != ModelKind::Mlp) return {{0, param_count_}};
  std::vector<ParamBlock> blocks;
  for (const auto& l : layers_) {
    blocks.push_back({l.w_offset, l.in * l.out});
    blocks.push_back({l.b_offset, l.out});
  }
  return blocks;
}

std::vector<ParamBlock> Model::filter_blocks() const {
  if (spec_.kind != ModelKind::Mlp) return {{0, param_count_}};
  std::vector<ParamBlock> blocks;
  for (const auto& l : layers_) {
    for (std::size_t r = 0; r < l.out; ++r) blocks.push_back({l.w_offset + r * l.in, l.in});
    blocks.push_back({l.b_offset, l.out});
  }
  return blocks;
}

}  // namespace advsmooth
