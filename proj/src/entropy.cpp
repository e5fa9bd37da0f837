#include "advsmooth/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advsmooth/quadrature.hpp"
#include "advsmooth/rng.hpp"

namespace advsmooth {

void QuadratureSpec::validate() const {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) throw ConfigError("quadrature.half_width must be > 0");
  if (points_per_axis < 16) throw ConfigError("quadrature.points_per_axis must be >= 16");
  if (points_per_axis % 8 != 0) throw ConfigError("quadrature.points_per_axis must be a multiple of 8");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ConfigError("quadrature.margin must be >= 0");
}

LocalEntropy local_entropy_exact(const ScalarFn& lossfn, const Vector& theta, double gamma,
                                 const QuadratureSpec& quad) {
  quad.validate();
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be > 0");
  const auto d = theta.size();
  if (d < 1 || d > 3) throw UnsupportedError("exact local entropy supports dimension 1 to 3, got " +
                                             std::to_string(d));

  Vector center = theta;
  double half = quad.half_width / std::sqrt(gamma);
  if (quad.anchor) {
    if (quad.anchor->size() != d) throw ConfigError("quadrature anchor dimension mismatch");
    if ((theta - *quad.anchor).cwiseAbs().maxCoeff() > quad.margin * (1.0 + 1e-12))
      throw ConfigError("theta lies outside the anchored quadrature margin");
    center = *quad.anchor;
    half += quad.margin;
  }

  std::vector<QuadratureRule> axes;
  for (Eigen::Index i = 0; i < d; ++i)
    axes.push_back(composite_gauss_legendre(center[i] - half, center[i] + half, quad.points_per_axis / 8, 8));
  const auto n = static_cast<std::size_t>(quad.points_per_axis);
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < d; ++i) total *= n;

  auto node = [&](std::size_t flat, Vector& p, double& logw) {
    logw = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const std::size_t k = flat % n;
      flat /= n;
      p[i] = axes[static_cast<std::size_t>(i)].nodes[k];
      logw += std::log(axes[static_cast<std::size_t>(i)].weights[k]);
    }
  };

  std::vector<double> lw(total);
  Vector p(d);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < total; ++k) {
    double logw = 0.0;
    node(k, p, logw);
    const double l = lossfn(p);
    if (std::isnan(l) || l == -std::numeric_limits<double>::infinity())
      throw NumericError("loss is not a number inside the quadrature box");
    lw[k] = logw - l - 0.5 * gamma * (p - theta).squaredNorm();
    mx = std::max(mx, lw[k]);
  }
  if (!std::isfinite(mx))
    throw NumericError("local-entropy integral underflowed (all weights zero); increase half_width");

  double z = 0.0;
  for (double v : lw) z += std::exp(v - mx);

  LocalEntropy out;
  out.value = -(mx + std::log(z));
  out.mean = Vector::Zero(d);
  double edge_mass = 0.0;
  const double edge = 2.0 * half / 16.0;
  for (std::size_t k = 0; k < total; ++k) {
    double logw = 0.0;
    node(k, p, logw);
    const double w = std::exp(lw[k] - mx) / z;
    out.mean += w * p;
    if (((p - center).cwiseAbs().array() > half - edge).any()) edge_mass += w;
  }
  if (edge_mass > 1e-6)
    throw NumericError("local-entropy density reaches the quadrature box edge (mass " + std::to_string(edge_mass) +
                       "); increase half_width");
  out.covariance = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < total; ++k) {
    double logw = 0.0;
    node(k, p, logw);
    const double w = std::exp(lw[k] - mx) / z;
    const Vector c = p - out.mean;
    out.covariance += w * c * c.transpose();
  }
  out.gradient = gamma * (theta - out.mean);
  out.hessian = gamma * Matrix::Identity(d, d) - gamma * gamma * out.covariance;
  out.smoothness_bound = gamma + gamma * gamma * out.covariance.norm();
  return out;
}

void EnsgdConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("ensgd.") + name + " must be > 0");
  };
  positive(gamma, "gamma");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("ensgd.eta must be >= 0");
  positive(eta_prime, "eta_prime");
  positive(variance_floor, "variance_floor");
  if (!(eps_langevin >= 0.0) || !std::isfinite(eps_langevin))
    throw ConfigError("ensgd.eps_langevin must be >= 0");
  if (langevin_iters < 1) throw ConfigError("ensgd.langevin_iters must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ensgd.alpha must lie in (0, 1]");
  if (variance_floor >= 1.0) throw ConfigError("ensgd.variance_floor must be < 1");
}

void AwpConfig::validate() const {
  if (!(gamma_a >= 0.0) || !std::isfinite(gamma_a)) throw ConfigError("awp.gamma_a must be >= 0");
  if (inner_steps < 1) throw ConfigError("awp.inner_steps must be >= 1");
}

EnsgdState sgld_estimate(const Vector& theta, const MinibatchGradient& grad, const EnsgdConfig& cfg,
                         std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const double noise = std::sqrt(cfg.eta_prime) * cfg.eps_langevin;
  Vector tp = theta;
  EnsgdState st{theta, theta.cwiseProduct(theta), 0};
  for (int l = 0; l < cfg.langevin_iters; ++l) {
    const Vector g = grad(tp, l);
    const Vector xi = standard_normal(rng, static_cast<std::size_t>(theta.size()));
    tp = tp - cfg.eta_prime * (g + cfg.gamma * (tp - theta)) + noise * xi;
    if (!tp.allFinite()) throw NumericError("Langevin iterate became non-finite");
    st.theta_bar = (1.0 - cfg.alpha) * st.theta_bar + cfg.alpha * tp;
    st.xi_bar = (1.0 - cfg.alpha) * st.xi_bar + cfg.alpha * tp.cwiseProduct(tp);
    ++st.steps_taken;
  }
  return st;
}

EnsgdState sgld_estimate(const Model& model, const Vector& theta, const LabeledDataset& data,
                         const BatchSampler& next_batch, const AttackSpec& attack, const EnsgdConfig& cfg,
                         const std::optional<AwpConfig>& awp, std::uint64_t seed) {
  MinibatchGradient g = [&](const Vector& tp, int l) {
    const auto it = static_cast<std::uint64_t>(l);
    AttackSpec a = attack;
    a.pgd.seed = mix_seed(attack.pgd.seed, it);
    return robust_batch_gradient(model, tp, data, next_batch(), a, awp, mix_seed(seed, it));
  };
  return sgld_estimate(theta, g, cfg, mix_seed(seed, 0xE5u));
}

Vector ensgd_step(const Vector& theta, const EnsgdState& state, const EnsgdConfig& cfg) {
  if (state.theta_bar.size() != theta.size() || state.xi_bar.size() != theta.size())
    throw ConfigError("EnSGD state dimension mismatch");
  const Vector disp = theta - state.theta_bar;
  if (cfg.order == EnsgdOrder::First) return theta - cfg.eta * cfg.gamma * disp;
  const double g = cfg.gamma;
  const double var_max = (1.0 - cfg.variance_floor) / g;
  Vector h(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double var = std::clamp(state.xi_bar[j] - state.theta_bar[j] * state.theta_bar[j], 0.0, var_max);
    h[j] = 1.0 / (g - g * g * var);
  }
  return theta - cfg.eta * g * h.cwiseProduct(disp);
}

Vector awp_perturbation(const Model& model, const Vector& theta, const LabeledDataset& data,
                        const std::vector<std::size_t>& batch, const AttackSpec& attack, const AwpConfig& awp,
                        std::uint64_t seed) {
  awp.validate();
  Vector v = Vector::Zero(theta.size());
  if (awp.gamma_a == 0.0) return v;
  const auto blocks = model.layer_blocks();
  for (int k = 0; k < awp.inner_steps; ++k) {
    AttackSpec a = attack;
    a.pgd.seed = mix_seed(seed, static_cast<std::uint64_t>(k));
    const Vector g = adversarial_batch_loss(model, theta + v, data, a, batch).grad;
    for (const auto& b : blocks) {
      const auto off = static_cast<Eigen::Index>(b.offset);
      const auto len = static_cast<Eigen::Index>(b.size);
      const auto th = theta.segment(off, len);
      const double radius = awp.gamma_a * th.norm();
      auto vb = v.segment(off, len);
      if (radius == 0.0) {
        vb.setZero();
        continue;
      }
      const auto gb = g.segment(off, len);
      const double gn = gb.norm();
      if (gn > 0.0) vb += (radius / gn) * gb;
      const double vn = vb.norm();
      if (vn > 0.0)
        vb *= radius / vn;
      else
        vb = awp.gamma_a * th;
    }
  }
  return v;
}

Vector robust_batch_gradient(const Model& model, const Vector& theta, const LabeledDataset& data,
                             const std::vector<std::size_t>& batch, const AttackSpec& attack,
                             const std::optional<AwpConfig>& awp, std::uint64_t seed, double* loss_out) {
  Vector at = theta;
  if (awp) at += awp_perturbation(model, theta, data, batch, attack, *awp, mix_seed(seed, 1));
  const auto bl = adversarial_batch_loss(model, at, data, attack, batch);
  if (loss_out) *loss_out = bl.loss;
  return bl.grad;
}

std::pair<Vector, Vector> sgd_step(const Vector& theta, const Vector& grad, const Vector& momentum_buffer,
                                   double lr, double momentum, double weight_decay) {
  if (grad.size() != theta.size() || momentum_buffer.size() != theta.size())
    throw ConfigError("sgd_step dimension mismatch");
  Vector buf = momentum * momentum_buffer + grad + weight_decay * theta;
  Vector next = theta - lr * buf;
  return {std::move(next), std::move(buf)};
}

}  // namespace advsmooth
