#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advsmooth/adversarial_loss.hpp"
#include "advsmooth/entropy.hpp"
#include "advsmooth/model.hpp"

namespace advsmooth {

/// x ~ N(0, I_d), y = sign(x_1) (x_1 == 0 redrawn). Returns (train, test),
/// each of size n, drawn from one seeded stream.
std::pair<LabeledDataset, LabeledDataset> make_synthetic_dataset(std::size_t n, std::size_t d, std::uint64_t seed);

/// Fraction of examples whose attacked prediction sign(z) matches the label
/// (z == 0 counts as wrong).
double evaluate_robust_accuracy(const Model& model, const ParamVector& theta, const LabeledDataset& data,
                                const NormBall& ball, const PgdConfig& pgd);

enum class OptimizerKind { Sgd, Ensgd, Ensgd2 };
std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

struct LrSchedule {
  double initial = 0.1;
  double decay = 0.1;
  std::vector<int> milestones{30, 40};  // 1-based epochs at which decay applies

  /// Multiplier relative to `initial` for a 1-based epoch.
  double factor(int epoch) const;
};

struct ExperimentConfig {
  std::size_t n = 200;
  std::size_t d = 2;
  std::optional<std::uint64_t> data_seed;  // defaults to a stream of `seed`
  ModelSpec model = ModelSpec::linear(2);
  NormBall ball{Norm::LInf, 0.1};
  PgdConfig pgd_train{10, 0.025, false, 0};
  PgdConfig pgd_eval{20, 0.025, false, 0};
  OptimizerKind optimizer = OptimizerKind::Sgd;
  EnsgdConfig ensgd;
  std::optional<AwpConfig> awp;
  int epochs = 50;
  std::size_t batch_size = 20;
  LrSchedule lr;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::string early_stopping = "test_robust_acc";
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_robust_loss = 0.0;
  double train_robust_acc = 0.0;
  double test_robust_acc = 0.0;
  double test_clean_acc = 0.0;
  double wall_time = 0.0;  // seconds since the run started; not part of determinism
  double lr = 0.0;
  std::size_t outer_steps = 0;  // cumulative parameter updates
  std::size_t minibatches = 0;  // cumulative minibatches consumed
};

struct TrainingRun {
  std::vector<EpochRecord> records;
  ParamVector initial_theta;
  ParamVector final_theta;
  ParamVector best_theta;
  int best_epoch = 0;
  bool aborted = false;
  std::string abort_reason;
  int abort_epoch = 0;
  std::size_t abort_batch = 0;
  ParamVector abort_theta;
};

TrainingRun adversarial_train(const ExperimentConfig& config);

/// Endless stream of minibatches: a seeded shuffle of 0..n-1 per pass.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::size_t> next();
  std::size_t batches_per_pass() const { return (n_ + batch_ - 1) / batch_; }
  std::size_t consumed() const { return consumed_; }

 private:
  void reshuffle();
  std::size_t n_, batch_;
  std::uint64_t seed_;
  std::size_t pass_ = 0, pos_ = 0, consumed_ = 0;
  std::vector<std::size_t> perm_;
};

}  // namespace advsmooth
