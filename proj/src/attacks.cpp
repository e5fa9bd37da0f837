#include "advsmooth/attacks.hpp"

#include <cmath>

#include "advsmooth/rng.hpp"

namespace advsmooth {

namespace {

void check_same_dim(const ParamVector& theta, const InputPoint& x) {
  if (theta.size() != x.size())
    throw ConfigError("closed-form attacks need dim(theta) == dim(x)");
}

AttackResult finish_linear(const ParamVector& theta, const InputPoint& x, Label y, const NormBall& ball,
                           Vector delta, bool degenerate) {
  AttackResult r;
  r.x_prime = x + delta;
  r.achieved_loss = softplus(-sign_of(y) * theta.dot(r.x_prime));
  r.on_boundary = on_ball_boundary(delta, ball);
  r.degenerate = degenerate;
  r.delta = std::move(delta);
  return r;
}

}  // namespace

void PgdConfig::validate() const {
  if (steps < 1) throw ConfigError("pgd.steps must be >= 1");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("pgd.step_size must be > 0");
}

bool on_ball_boundary(const Vector& delta, const NormBall& ball) {
  return ball.epsilon > 0.0 && std::abs(norm_of(delta, ball.p) - ball.epsilon) <= 1e-9;
}

AttackResult exact_l2_attack(const ParamVector& theta, const InputPoint& x, Label y, double eps) {
  check_same_dim(theta, x);
  const NormBall ball{Norm::L2, eps};
  ball.validate();
  const double n = theta.norm();
  if (n == 0.0) return finish_linear(theta, x, y, ball, Vector::Zero(x.size()), true);
  return finish_linear(theta, x, y, ball, (-sign_of(y) * eps / n) * theta, false);
}

AttackResult exact_linf_attack(const ParamVector& theta, const InputPoint& x, Label y, double eps) {
  check_same_dim(theta, x);
  const NormBall ball{Norm::LInf, eps};
  ball.validate();
  Vector delta(x.size());
  bool degenerate = false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (theta[i] == 0.0) {
      delta[i] = 0.0;
      degenerate = true;
    } else {
      delta[i] = -sign_of(y) * eps * (theta[i] > 0.0 ? 1.0 : -1.0);
    }
  }
  return finish_linear(theta, x, y, ball, std::move(delta), degenerate);
}

AttackResult exact_attack(const ParamVector& theta, const InputPoint& x, Label y, const NormBall& ball) {
  return ball.p == Norm::L2 ? exact_l2_attack(theta, x, y, ball.epsilon)
                            : exact_linf_attack(theta, x, y, ball.epsilon);
}

double dual_norm_adv_loss(const ParamVector& theta, const InputPoint& x, Label y, const NormBall& ball) {
  check_same_dim(theta, x);
  ball.validate();
  return softplus(-sign_of(y) * theta.dot(x) + ball.epsilon * dual_norm_of(theta, ball.p));
}

Vector project(const Vector& delta, const NormBall& ball) {
  if (ball.p == Norm::LInf) return delta.cwiseMax(-ball.epsilon).cwiseMin(ball.epsilon);
  const double n = delta.norm();
  if (n <= ball.epsilon) return delta;
  return delta * (ball.epsilon / n);
}

AttackResult pgd_attack(const Model& model, const ParamVector& theta, const InputPoint& x, Label y,
                        const NormBall& ball, const PgdConfig& cfg) {
  ball.validate();
  cfg.validate();
  Vector delta = Vector::Zero(x.size());
  if (cfg.random_init && ball.epsilon > 0.0) {
    Rng rng(cfg.seed);
    delta = uniform_in_ball(rng, static_cast<std::size_t>(x.size()), ball);
  }

  Vector best = delta;
  auto lg = model.loss_and_grads(theta, x + delta, y);
  double best_loss = lg.loss;
  int it = 0;
  for (; it < cfg.steps; ++it) {
    const Vector& g = lg.grad_x;
    Vector step;
    if (ball.p == Norm::LInf) {
      step = g.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
    } else {
      const double gn = g.norm();
      step = gn > 0.0 ? Vector(g / gn) : Vector::Zero(g.size());
    }
    if (step.isZero(0.0)) break;  // stationary: no step
    delta = project(delta + cfg.step_size * step, ball);
    lg = model.loss_and_grads(theta, x + delta, y);
    if (lg.loss > best_loss) {
      best_loss = lg.loss;
      best = delta;
    }
  }

  AttackResult r;
  r.x_prime = x + best;
  r.achieved_loss = best_loss;
  r.on_boundary = on_ball_boundary(best, ball);
  r.iterations = it;
  r.delta = std::move(best);
  return r;
}

}  // namespace advsmooth
