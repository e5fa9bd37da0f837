#pragma once

#include <cstdint>

#include "advsmooth/model.hpp"
#include "advsmooth/types.hpp"

namespace advsmooth {

struct AttackResult {
  Vector delta;
  InputPoint x_prime;
  double achieved_loss = 0.0;
  bool on_boundary = false;  // ||delta||_p within 1e-9 of epsilon (epsilon > 0)
  bool degenerate = false;   // optimal direction undefined (some optimizer coordinate free)
  int iterations = 0;
};

struct PgdConfig {
  int steps = 20;
  double step_size = 0.15;
  bool random_init = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// delta = -y eps theta / ||theta||_2; degenerate (delta = 0) when theta = 0.
AttackResult exact_l2_attack(const ParamVector& theta, const InputPoint& x, Label y, double eps);
/// delta_i = -y eps sign(theta_i); sign(0) = 0 and the result is flagged degenerate.
AttackResult exact_linf_attack(const ParamVector& theta, const InputPoint& x, Label y, double eps);
AttackResult exact_attack(const ParamVector& theta, const InputPoint& x, Label y, const NormBall& ball);

/// softplus(-y theta^T x + eps ||theta||_q) with q the dual of ball.p.
double dual_norm_adv_loss(const ParamVector& theta, const InputPoint& x, Label y, const NormBall& ball);

Vector project(const Vector& delta, const NormBall& ball);

bool on_ball_boundary(const Vector& delta, const NormBall& ball);

/// Projected ascent: sign steps for LInf, normalized-gradient steps for L2.
/// Returns the best iterate seen (delta_0 included), so the achieved loss
/// never drops below the starting loss and is non-decreasing in `steps`.
AttackResult pgd_attack(const Model& model, const ParamVector& theta, const InputPoint& x, Label y,
                        const NormBall& ball, const PgdConfig& cfg);

}  // namespace advsmooth
