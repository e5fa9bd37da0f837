#include "advsmooth/types.hpp"

#include <cmath>

namespace advsmooth {

Label label_from_int(int y) {
  if (y == 1) return Label::Positive;
  if (y == -1) return Label::Negative;
  throw ConfigError("label must be -1 or +1, got " + std::to_string(y));
}

LabeledDataset::LabeledDataset(std::vector<Example> examples) : examples_(std::move(examples)) {
  if (examples_.empty()) throw ConfigError("dataset must contain at least one example");
  const auto d = examples_.front().x.size();
  if (d == 0) throw ConfigError("dataset inputs must have dimension >= 1");
  for (const auto& e : examples_) {
    if (e.x.size() != d) throw ConfigError("dataset inputs must share one dimension");
    if (!e.x.allFinite()) throw ConfigError("dataset inputs must be finite");
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Example> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(examples_.at(i));
  return LabeledDataset(std::move(out));
}

void NormBall::validate() const {
  if (!std::isfinite(epsilon) || epsilon < 0.0)
    throw ConfigError("norm ball radius must be finite and non-negative");
}

double norm_of(const Vector& v, Norm p) {
  return p == Norm::L2 ? v.norm() : (v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff());
}

double dual_norm_of(const Vector& v, Norm p) {
  return p == Norm::L2 ? v.norm() : v.cwiseAbs().sum();
}

std::string to_string(Norm p) { return p == Norm::L2 ? "l2" : "linf"; }

Norm norm_from_string(const std::string& s) {
  if (s == "l2" || s == "2") return Norm::L2;
  if (s == "linf" || s == "inf") return Norm::LInf;
  throw ConfigError("unknown norm '" + s + "' (expected l2 or linf)");
}

}  // namespace advsmooth
