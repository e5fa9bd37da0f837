#include "advsmooth/adversarial_loss.hpp"

#include "advsmooth/rng.hpp"

namespace advsmooth {

AttackResult attack_example(const Model& model, const ParamVector& theta, const Example& ex,
                            const AttackSpec& spec, std::uint64_t example_stream) {
  if (spec.method == AttackMethod::ClosedForm) {
    if (model.kind() != ModelKind::LinearLogistic)
      throw UnsupportedError("closed-form attack requires the linear logistic model, got " +
                             to_string(model.kind()));
    return exact_attack(theta, ex.x, ex.y, spec.ball);
  }
  PgdConfig cfg = spec.pgd;
  cfg.seed = mix_seed(spec.pgd.seed, example_stream);
  return pgd_attack(model, theta, ex.x, ex.y, spec.ball, cfg);
}

bool predicts_correctly(const Model& model, const ParamVector& theta, const InputPoint& x, Label y) {
  return sign_of(y) * model.output(theta, x) > 0.0;
}

BatchLoss adversarial_batch_loss(const Model& model, const ParamVector& theta, const LabeledDataset& data,
                                 const AttackSpec& spec, const std::vector<std::size_t>& indices,
                                 bool want_grad) {
  BatchLoss out;
  out.grad = Vector::Zero(theta.size());
  auto visit = [&](std::size_t i) {
    const Example& ex = data[i];
    const AttackResult a = attack_example(model, theta, ex, spec, i);
    if (want_grad) {
      const auto lg = model.loss_and_grads(theta, a.x_prime, ex.y);
      out.loss += lg.loss;
      out.grad += lg.grad_theta;
    } else {
      out.loss += a.achieved_loss;
    }
    if (predicts_correctly(model, theta, a.x_prime, ex.y)) ++out.correct;
    ++out.count;
  };
  if (indices.empty()) {
    for (std::size_t i = 0; i < data.size(); ++i) visit(i);
  } else {
    for (auto i : indices) visit(i);
  }
  if (out.count == 0) throw ConfigError("adversarial loss over an empty batch");
  out.loss /= static_cast<double>(out.count);
  out.grad /= static_cast<double>(out.count);
  return out;
}

}  // namespace advsmooth
