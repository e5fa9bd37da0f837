#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "advsmooth/adversarial_loss.hpp"
#include "advsmooth/probes.hpp"

namespace advsmooth {

/// Tensor-product composite Gauss-Legendre grid for the local-entropy
/// integral. Without an anchor the box is theta_i +- half_width/sqrt(gamma)
/// per axis, so the nodes move with theta. With an anchor the box is
/// anchor_i +- (half_width/sqrt(gamma) + margin) and the nodes are fixed;
/// theta must then stay within `margin` of the anchor (max norm). Fixed nodes
/// make the discrete -F exactly smooth in theta, with derivatives equal to
/// the discrete moment identities.
struct QuadratureSpec {
  double half_width = 6.0;
  int points_per_axis = 64;  // multiple of 8 (8-point panels)
  std::optional<Vector> anchor;
  double margin = 0.0;

  void validate() const;
};

struct LocalEntropy {
  double value = 0.0;  // -F(theta)
  Vector gradient;     // gamma (theta - E[theta'])
  Matrix hessian;      // gamma I - gamma^2 Sigma
  Vector mean;
  Matrix covariance;
  /// gamma + gamma^2 ||Sigma||_F, the smoothness bound at this theta.
  double smoothness_bound = 0.0;
};

LocalEntropy local_entropy_exact(const ScalarFn& lossfn, const Vector& theta, double gamma,
                                 const QuadratureSpec& quad);

enum class EnsgdOrder { First, Second };

struct EnsgdConfig {
  double gamma = 0.03;
  double eta = 0.1;
  double eta_prime = 0.1;
  double eps_langevin = 1e-4;
  int langevin_iters = 20;
  double alpha = 0.75;
  EnsgdOrder order = EnsgdOrder::First;
  double variance_floor = 1e-3;

  void validate() const;
};

struct EnsgdState {
  Vector theta_bar;
  Vector xi_bar;
  int steps_taken = 0;
};

struct AwpConfig {
  double gamma_a = 0.005;
  int inner_steps = 1;

  void validate() const;
};

/// Minibatch gradient of the training loss at theta', for Langevin iteration l.
using MinibatchGradient = std::function<Vector(const Vector& theta_prime, int iteration)>;

/// Langevin estimate of E[theta'] and E[theta' * theta'] under p_theta:
/// theta' <- theta' - eta' (g(theta') + gamma (theta' - theta)) + sqrt(eta') eps_E N(0, I),
/// followed by the running averages with mixing alpha.
EnsgdState sgld_estimate(const Vector& theta, const MinibatchGradient& grad, const EnsgdConfig& cfg,
                         std::uint64_t seed);

/// Returns the next minibatch (indices into the dataset) each time it is called.
using BatchSampler = std::function<std::vector<std::size_t>()>;

/// Adversarial-training instance: each Langevin iteration draws a minibatch,
/// attacks it at theta' (optionally after a weight perturbation) and uses the
/// mean adversarial-loss gradient.
EnsgdState sgld_estimate(const Model& model, const Vector& theta, const LabeledDataset& data,
                         const BatchSampler& next_batch, const AttackSpec& attack, const EnsgdConfig& cfg,
                         const std::optional<AwpConfig>& awp, std::uint64_t seed);

Vector ensgd_step(const Vector& theta, const EnsgdState& state, const EnsgdConfig& cfg);

/// Blockwise-normalized ascent on the adversarial batch loss over
/// {v : ||v_l|| = gamma_a ||theta_l||} for every layer block l. Blocks with
/// zero parameters get v_l = 0; a block whose gradient vanishes before it has
/// a direction is placed along theta_l.
Vector awp_perturbation(const Model& model, const Vector& theta, const LabeledDataset& data,
                        const std::vector<std::size_t>& batch, const AttackSpec& attack, const AwpConfig& awp,
                        std::uint64_t seed);

/// Gradient of the adversarial batch loss at theta + v, with v from AWP when
/// configured.
Vector robust_batch_gradient(const Model& model, const Vector& theta, const LabeledDataset& data,
                             const std::vector<std::size_t>& batch, const AttackSpec& attack,
                             const std::optional<AwpConfig>& awp, std::uint64_t seed, double* loss_out = nullptr);

/// Heavy-ball SGD with L2 weight decay added to the gradient.
std::pair<Vector, Vector> sgd_step(const Vector& theta, const Vector& grad, const Vector& momentum_buffer,
                                   double lr, double momentum, double weight_decay);

}  // namespace advsmooth
