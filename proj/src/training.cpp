#include "advsmooth/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "advsmooth/rng.hpp"

namespace advsmooth {

std::pair<LabeledDataset, LabeledDataset> make_synthetic_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 2) throw ConfigError("dataset.n must be >= 2");
  if (d < 1) throw ConfigError("dataset.d must be >= 1");
  Rng rng(seed);
  auto draw = [&] {
    std::vector<Example> out;
    out.reserve(n);
    while (out.size() < n) {
      Vector x = standard_normal(rng, d);
      if (x[0] == 0.0) continue;
      out.push_back({x, x[0] > 0.0 ? Label::Positive : Label::Negative});
    }
    return LabeledDataset(std::move(out));
  };
  LabeledDataset train = draw();
  LabeledDataset test = draw();
  return {std::move(train), std::move(test)};
}

double evaluate_robust_accuracy(const Model& model, const ParamVector& theta, const LabeledDataset& data,
                                const NormBall& ball, const PgdConfig& pgd) {
  AttackSpec spec{ball, AttackMethod::Pgd, pgd};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto a = attack_example(model, theta, data[i], spec, i);
    if (predicts_correctly(model, theta, a.x_prime, data[i].y)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Ensgd: return "ensgd";
    case OptimizerKind::Ensgd2: return "ensgd2";
  }
  return "?";
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "ensgd") return OptimizerKind::Ensgd;
  if (s == "ensgd2") return OptimizerKind::Ensgd2;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd, ensgd or ensgd2)");
}

double LrSchedule::factor(int epoch) const {
  double f = 1.0;
  for (int m : milestones)
    if (epoch >= m) f *= decay;
  return f;
}

void ExperimentConfig::validate() const {
  if (n < 2) throw ConfigError("dataset.n must be >= 2");
  if (d < 1) throw ConfigError("dataset.d must be >= 1");
  if (static_cast<std::size_t>(model.input_dim) != d) throw ConfigError("model.input_dim must equal dataset.d");
  ball.validate();
  pgd_train.validate();
  pgd_eval.validate();
  ensgd.validate();
  if (awp) awp->validate();
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr.initial >= 0.0) || !std::isfinite(lr.initial)) throw ConfigError("lr.initial must be >= 0");
  if (!(lr.decay >= 0.0)) throw ConfigError("lr.decay must be >= 0");
  if (!std::is_sorted(lr.milestones.begin(), lr.milestones.end()))
    throw ConfigError("lr.milestones must be sorted ascending");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (early_stopping != "test_robust_acc")
    throw ConfigError("early_stopping supports only 'test_robust_acc'");
}

EpochSampler::EpochSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_(batch_size), seed_(seed), perm_(n) {
  if (n == 0 || batch_size == 0) throw ConfigError("sampler needs n >= 1 and batch_size >= 1");
  reshuffle();
}

void EpochSampler::reshuffle() {
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  Rng rng(mix_seed(seed_, pass_));
  std::shuffle(perm_.begin(), perm_.end(), rng);
  pos_ = 0;
}

std::vector<std::size_t> EpochSampler::next() {
  if (pos_ >= n_) {
    ++pass_;
    reshuffle();
  }
  const std::size_t end = std::min(n_, pos_ + batch_);
  std::vector<std::size_t> b(perm_.begin() + static_cast<std::ptrdiff_t>(pos_),
                             perm_.begin() + static_cast<std::ptrdiff_t>(end));
  pos_ = end;
  ++consumed_;
  return b;
}

namespace {

enum Stream : std::uint64_t { kData = 1, kInit, kSampler, kSgld, kPgd, kAwp };

}  // namespace

TrainingRun adversarial_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto [train, test] =
      make_synthetic_dataset(cfg.n, cfg.d, cfg.data_seed.value_or(mix_seed(cfg.seed, kData)));
  const Model model = make_model(cfg.model, mix_seed(cfg.seed, kInit));
  EpochSampler sampler(train.size(), cfg.batch_size, mix_seed(cfg.seed, kSampler));

  TrainingRun run;
  ParamVector theta = model.initial_params();
  run.initial_theta = theta;
  run.best_theta = theta;
  Vector buf = Vector::Zero(theta.size());

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t per_pass = sampler.batches_per_pass();
  const auto L = static_cast<std::size_t>(cfg.ensgd.langevin_iters);
  const std::size_t updates_per_epoch =
      cfg.optimizer == OptimizerKind::Sgd ? per_pass : std::max<std::size_t>(1, per_pass / L);
  std::size_t outer = 0;
  double best_acc = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double factor = cfg.lr.factor(epoch);
    std::size_t batch_in_epoch = 0;
    try {
      for (std::size_t u = 0; u < updates_per_epoch; ++u, ++batch_in_epoch) {
        AttackSpec attack{cfg.ball, AttackMethod::Pgd, cfg.pgd_train};
        attack.pgd.seed = mix_seed(mix_seed(cfg.seed, kPgd), outer);
        if (cfg.optimizer == OptimizerKind::Sgd) {
          const auto batch = sampler.next();
          const Vector g = robust_batch_gradient(model, theta, train, batch, attack, cfg.awp,
                                                 mix_seed(mix_seed(cfg.seed, kAwp), outer));
          std::tie(theta, buf) = sgd_step(theta, g, buf, cfg.lr.initial * factor, cfg.momentum, cfg.weight_decay);
        } else {
          EnsgdConfig ec = cfg.ensgd;
          ec.order = cfg.optimizer == OptimizerKind::Ensgd2 ? EnsgdOrder::Second : EnsgdOrder::First;
          ec.eta = cfg.ensgd.eta * factor;
          BatchSampler next = [&sampler] { return sampler.next(); };
          const EnsgdState st = sgld_estimate(model, theta, train, next, attack, ec, cfg.awp,
                                              mix_seed(mix_seed(cfg.seed, kSgld), outer));
          if (ec.eta > 0.0) theta = ensgd_step(theta, st, ec);
        }
        ++outer;
        if (!theta.allFinite()) throw NumericError("parameters became non-finite");
      }

      EpochRecord rec;
      rec.epoch = epoch;
      rec.lr = (cfg.optimizer == OptimizerKind::Sgd ? cfg.lr.initial : cfg.ensgd.eta) * factor;
      AttackSpec train_eval{cfg.ball, AttackMethod::Pgd, cfg.pgd_train};
      const auto bl = adversarial_batch_loss(model, theta, train, train_eval, {}, false);
      if (!std::isfinite(bl.loss)) throw NumericError("non-finite train robust loss");
      rec.train_robust_loss = bl.loss;
      rec.train_robust_acc = static_cast<double>(bl.correct) / static_cast<double>(bl.count);
      rec.test_robust_acc = evaluate_robust_accuracy(model, theta, test, cfg.ball, cfg.pgd_eval);
      rec.test_clean_acc = evaluate_robust_accuracy(model, theta, test, {cfg.ball.p, 0.0}, cfg.pgd_eval);
      rec.outer_steps = outer;
      rec.minibatches = sampler.consumed();
      rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      run.records.push_back(rec);
      if (rec.test_robust_acc > best_acc) {
        best_acc = rec.test_robust_acc;
        run.best_epoch = epoch;
        run.best_theta = theta;
      }
    } catch (const NumericError& e) {
      run.aborted = true;
      run.abort_reason = e.what();
      run.abort_epoch = epoch;
      run.abort_batch = batch_in_epoch;
      run.abort_theta = theta;
      break;
    }
  }
  run.final_theta = theta;
  return run;
}

}  // namespace advsmooth
