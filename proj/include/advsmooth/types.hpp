#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace advsmooth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Model parameters (theta) and input points (x) share the dense vector
// representation; the aliases document intent at API boundaries.
using ParamVector = Vector;
using InputPoint = Vector;

enum class Label : int { Negative = -1, Positive = 1 };

inline double sign_of(Label y) { return static_cast<double>(static_cast<int>(y)); }

Label label_from_int(int y);

struct Example {
  InputPoint x;
  Label y = Label::Positive;
};

/// Ordered collection of labelled points with a uniform input dimension.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::vector<Example> examples);

  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  std::size_t input_dim() const { return examples_.empty() ? 0 : examples_.front().x.size(); }

  const Example& operator[](std::size_t i) const { return examples_[i]; }
  const std::vector<Example>& examples() const { return examples_; }

  auto begin() const { return examples_.begin(); }
  auto end() const { return examples_.end(); }

  LabeledDataset subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Example> examples_;
};

enum class Norm { L2, LInf };

/// Attack constraint {delta : ||delta||_p <= epsilon}.
struct NormBall {
  Norm p = Norm::LInf;
  double epsilon = 0.0;

  void validate() const;
};

double norm_of(const Vector& v, Norm p);
/// Dual norm: L1 for an LInf ball, L2 for an L2 ball.
double dual_norm_of(const Vector& v, Norm p);

std::string to_string(Norm p);
Norm norm_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Errors. The CLI maps ConfigError to exit code 2 and NumericError (and its
// subclasses) to exit code 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class EmptyRegionError : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularSystemError : public NumericError {
 public:
  using NumericError::NumericError;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace advsmooth
