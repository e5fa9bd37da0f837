#pragma once

#include <cstdint>
#include <vector>

#include "advsmooth/attacks.hpp"

namespace advsmooth {

enum class AttackMethod { ClosedForm, Pgd };

/// How the inner maximization is solved. ClosedForm is only valid for
/// LinearLogistic. PGD seeds are derived per example from pgd.seed.
struct AttackSpec {
  NormBall ball;
  AttackMethod method = AttackMethod::ClosedForm;
  PgdConfig pgd;
};

AttackResult attack_example(const Model& model, const ParamVector& theta, const Example& ex,
                            const AttackSpec& spec, std::uint64_t example_stream);

struct BatchLoss {
  double loss = 0.0;        // mean adversarial loss
  Vector grad;              // mean gradient in theta at the attacked points (Danskin)
  std::size_t correct = 0;  // attacked predictions with sign(z) == y
  std::size_t count = 0;
};

/// Mean adversarial loss over `indices` of `data` (all examples if empty).
/// Example i uses PGD seed mix_seed(spec.pgd.seed, i) so that results do not
/// depend on batch composition.
BatchLoss adversarial_batch_loss(const Model& model, const ParamVector& theta, const LabeledDataset& data,
                                 const AttackSpec& spec, const std::vector<std::size_t>& indices = {},
                                 bool want_grad = true);

bool predicts_correctly(const Model& model, const ParamVector& theta, const InputPoint& x, Label y);

}  // namespace advsmooth
