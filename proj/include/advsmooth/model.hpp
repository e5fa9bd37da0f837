#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advsmooth/types.hpp"

namespace advsmooth {

enum class ModelKind { LinearLogistic, SwishLogistic, Mlp };
enum class Activation { Swish, Relu };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct ModelSpec {
  ModelKind kind = ModelKind::LinearLogistic;
  int input_dim = 2;
  std::vector<int> hidden;  // Mlp only
  Activation activation = Activation::Swish;

  static ModelSpec linear(int d) { return {ModelKind::LinearLogistic, d, {}, Activation::Swish}; }
  static ModelSpec swish(int d) { return {ModelKind::SwishLogistic, d, {}, Activation::Swish}; }
  static ModelSpec mlp(int d, std::vector<int> hidden, Activation act) {
    return {ModelKind::Mlp, d, std::move(hidden), act};
  }
};

/// Contiguous range [offset, offset + size) of the parameter vector.
struct ParamBlock {
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct LossGrads {
  double loss = 0.0;
  Vector grad_theta;
  Vector grad_x;
};

double softplus(double t);
double sigmoid(double t);
double swish(double u);
/// d swish / du = sigmoid(u) + u sigmoid(u) (1 - sigmoid(u)).
double swish_prime(double u);
double swish_second(double u);

/// Binary classifier with logistic loss l = softplus(-y z(theta, x)).
///
/// LinearLogistic: z = theta^T x. SwishLogistic: z = swish(theta^T x).
/// Mlp: fully connected net with a scalar linear head. Parameters are laid
/// out layer by layer as [W_l (row major), b_l]. Immutable after
/// construction; all evaluation methods take theta explicitly.
class Model {
 public:
  Model(ModelSpec spec, std::uint64_t init_seed);

  const ModelSpec& spec() const { return spec_; }
  ModelKind kind() const { return spec_.kind; }
  std::size_t input_dim() const { return static_cast<std::size_t>(spec_.input_dim); }
  std::size_t param_count() const { return param_count_; }
  const ParamVector& initial_params() const { return theta0_; }

  /// Raw output z (sign gives the predicted label).
  double output(const ParamVector& theta, const InputPoint& x) const;
  double loss(const ParamVector& theta, const InputPoint& x, Label y) const;
  LossGrads loss_and_grads(const ParamVector& theta, const InputPoint& x, Label y) const;

  /// Hessian of the loss in x (d x d). Analytic for the single-unit models,
  /// central differences of grad_x with step h for Mlp.
  Matrix hess_x(const ParamVector& theta, const InputPoint& x, Label y, double h = 1e-5) const;
  /// Mixed partials: entry (i, j) = d^2 l / dx_i dtheta_j (d x m).
  Matrix cross_hess(const ParamVector& theta, const InputPoint& x, Label y, double h = 1e-5) const;

  /// Layer partition used by weight perturbation (one block per weight and
  /// bias tensor).
  std::vector<ParamBlock> layer_blocks() const;
  /// Filter partition used by filter-normalized slices (Mlp: one block per
  /// output unit of each layer, covering its weight row; biases form their
  /// own block per layer).
  std::vector<ParamBlock> filter_blocks() const;

  void check_dims(const ParamVector& theta, const InputPoint& x) const;

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t w_offset = 0;
    std::size_t b_offset = 0;
  };

  double mlp_forward(const ParamVector& theta, const InputPoint& x,
                     std::vector<Vector>* pre, std::vector<Vector>* post) const;
  LossGrads mlp_loss_and_grads(const ParamVector& theta, const InputPoint& x, Label y) const;

  ModelSpec spec_;
  std::vector<Layer> layers_;
  std::size_t param_count_ = 0;
  ParamVector theta0_;
};

Model make_model(const ModelSpec& spec, std::uint64_t init_seed);

}  // namespace advsmooth
