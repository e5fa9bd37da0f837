#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "advsmooth/attacks.hpp"
#include "advsmooth/model.hpp"

namespace advsmooth {

using ScalarFn = std::function<double(const Vector&)>;
using VectorFn = std::function<Vector(const Vector&)>;

enum class RegionPredicate { None, NormAtLeast, FixedOrthant };

/// Axis-aligned box over theta, optionally restricted by a predicate.
struct Region {
  Vector lo;
  Vector hi;
  RegionPredicate predicate = RegionPredicate::None;
  double theta_min = 0.0;    // NormAtLeast: ||theta||_2 >= theta_min
  std::vector<int> orthant;  // FixedOrthant: sign(theta_i) == orthant[i] (strict)

  static Region box(const Vector& lo, const Vector& hi);
  static Region square(std::size_t dim, double half_width);

  void validate() const;
  bool contains(const Vector& theta) const;
  std::string describe() const;
  double diameter() const { return (hi - lo).norm(); }
};

struct LipschitzEstimate {
  double sup_ratio = 0.0;
  std::size_t pair_count = 0;
  Vector argmax_a;
  Vector argmax_b;
  double min_separation = 0.0;
};

struct PairSample {
  Vector a;
  Vector b;
};

/// Seeded pairs inside `region` with ||a - b|| >= min_sep. Half of the pairs
/// are independent uniform draws; the other half are local pairs with
/// separation log-uniform in [min_sep, diameter / 4]. Throws EmptyRegionError
/// when the predicate or the separation floor rejects every attempt.
std::vector<PairSample> sample_pairs(const Region& region, std::size_t n_pairs, double min_sep,
                                     std::uint64_t seed);
Vector sample_region(const Region& region, std::uint64_t seed);

double pair_ratio(const VectorFn& map, const Vector& a, const Vector& b);

LipschitzEstimate lipschitz_ratio_estimate(const VectorFn& map, const Region& region, std::size_t n_pairs,
                                           double min_sep, std::uint64_t seed);

struct ProbeReport {
  double c_theta = 0.0;
  double c_theta_theta = 0.0;
  double c_theta_x = 0.0;
  std::optional<double> curvature_c;
  std::optional<double> spectral_norm;
  std::optional<double> epsilon_sharpness;
  std::string region;
  double x_radius = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_pairs = 0;
  double min_separation = 0.0;

  std::string to_json() const;
};

/// Empirical sups of the C_theta, C_theta_theta and C_theta_x ratios. Inputs x are drawn from the
/// L-infinity box of half-width x_radius around the data points (a quarter at
/// box vertices, a quarter on the L2 sphere of radius x_radius, the rest
/// uniform).
ProbeReport estimate_assumption1_constants(const Model& model, const Region& region, const LabeledDataset& data,
                                           double x_radius, std::size_t n_pairs, std::uint64_t seed,
                                           double min_sep = 1e-4);

/// Central-difference gradient.
Vector fd_gradient(const ScalarFn& f, const Vector& theta, double h = 1e-5);
/// Dense central-difference Hessian of f (symmetrized).
Matrix fd_hessian(const ScalarFn& f, const Vector& theta, double h = 1e-4);
Matrix fd_jacobian(const VectorFn& f, const Vector& theta, double h = 1e-5);

struct SpectralEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Power iteration on v -> (grad(theta + h v) - grad(theta - h v)) / 2h.
SpectralEstimate hessian_spectral_norm(const VectorFn& grad, const Vector& theta, double tol = 1e-8,
                                       int max_iter = 1000, double h = 1e-4, std::uint64_t seed = 0);
/// Same, with the gradient itself taken by central differences of lossfn.
SpectralEstimate hessian_spectral_norm(const ScalarFn& lossfn, const Vector& theta, double tol = 1e-8,
                                       int max_iter = 1000, double h = 1e-4, std::uint64_t seed = 0);

struct InteriorCheck {
  bool is_stationary = false;
  double grad_norm = 0.0;
  double max_eig = 0.0;
  double c = 0.0;  // -max_eig when negative, else 0
  bool negative_definite = false;
  bool strictly_interior = false;
};

InteriorCheck interior_optimum_check(const Model& model, const ParamVector& theta, const InputPoint& x,
                                     const InputPoint& x_prime, Label y, const NormBall& ball,
                                     double tol_grad = 1e-6, double tol_eig = 1e-9);

struct BorderedHessianCheck {
  double mu = 0.0;
  Matrix matrix;
  double determinant = 0.0;
  double min_singular_value = 0.0;
  double stationarity_residual = 0.0;
};

/// L2 boundary case. mu is the least-squares fit of grad_x l = mu n with
/// n = (x' - x)/||x' - x||.
BorderedHessianCheck bordered_hessian_check(const Model& model, const ParamVector& theta, const InputPoint& x,
                                            const InputPoint& x_prime, Label y);

enum class OptimumCase { Interior, BoundaryL2 };

struct ImplicitJacobian {
  Matrix jacobian;  // d x m, column j = d x' / d theta_j
  double spectral_norm = 0.0;
  /// Interior case only: the Hessian was singular but the system consistent,
  /// so the minimum-norm solution was used. `range_projector` projects onto
  /// the Hessian's range, the component of D that the system determines.
  bool rank_deficient = false;
  Matrix range_projector;
};

ImplicitJacobian implicit_jacobian(const Model& model, const ParamVector& theta, const InputPoint& x,
                                   const InputPoint& x_prime, Label y, OptimumCase which, double tol = 1e-9);

/// Brute-force maximizer for d <= 3: grid over the ball plus multi-start
/// projected gradient ascent (start 0 is delta = 0, then seeded random
/// starts, then the best grid node), each refined until the projected
/// gradient step is below 1e-10. Earlier candidates win ties.
AttackResult argmax_oracle(const Model& model, const ParamVector& theta, const InputPoint& x, Label y,
                           const NormBall& ball, int resolution, int restarts, std::uint64_t seed);

struct SharpnessResult {
  double value = 0.0;
  double approximation = 0.0;
  double spectral_norm = 0.0;
};

SharpnessResult epsilon_sharpness(const ScalarFn& lossfn, const VectorFn& grad, const Vector& theta, double eps_s,
                                  int restarts, std::uint64_t seed);

}  // namespace advsmooth
