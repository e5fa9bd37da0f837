#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advsmooth/adversarial_loss.hpp"
#include "advsmooth/entropy.hpp"

namespace advsmooth {

enum class LossVariant { Clean, AdvL2, AdvLinf, AdvL2Pgd, AdvLinfPgd };

std::string to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);

struct GridSpec {
  double lo1 = -2.0, hi1 = 2.0;
  double lo2 = -2.0, hi2 = 2.0;
  int resolution = 81;
  LossVariant variant = LossVariant::Clean;
  bool entropy = false;  // surface of -F built on `variant`

  void validate() const;
  double theta1(int i) const;
  double theta2(int j) const;
  /// "adv_linf", or "entropy_of(adv_linf)" when entropy is set.
  std::string variant_name() const;
};

/// Grid edge between nodes (i1, j1) and (i2, j2), flagged as a gradient jump.
struct FlaggedEdge {
  int i1 = 0, j1 = 0;
  int i2 = 0, j2 = 0;
  double jump = 0.0;
};

/// Values are row-major: index i * resolution + j with i over theta1 and j
/// over theta2.
struct SurfaceGrid {
  GridSpec spec;
  std::vector<double> values;
  std::vector<double> grad_norms;  // empty when not computed
  std::vector<FlaggedEdge> flagged;
  std::vector<std::pair<std::string, std::string>> metadata;

  double value(int i, int j) const { return values[static_cast<std::size_t>(i * spec.resolution + j)]; }
};

/// Mean loss over `data` for one variant. Closed-form variants require the
/// linear model; PGD variants reuse one seed for the whole surface.
ScalarFn make_variant_loss(const Model& model, const LabeledDataset& data, LossVariant variant, double epsilon,
                           const PgdConfig& pgd);

/// Node gradients from central differences of `loss` (step 1e-6). Edges are
/// flagged when the gradient jump exceeds 5x the grid median (and an absolute
/// floor) and three rounds of bisection keep at least half of the jump
/// inside one sub-interval, which separates kinks from steep smooth regions.
SurfaceGrid sample_surface(const ScalarFn& loss, const GridSpec& spec);
SurfaceGrid sample_surface(const Model& model, const LabeledDataset& data, const GridSpec& spec, double epsilon,
                           const PgdConfig& pgd);

/// -F of `loss` at every node with fixed quadrature nodes anchored at the
/// grid center (margin = half the larger grid extent).
SurfaceGrid sample_entropy_surface(const ScalarFn& loss, const GridSpec& spec, double gamma,
                                   const QuadratureSpec& quad);

struct SliceCurve {
  std::vector<double> alphas;
  std::vector<double> losses;
};

/// theta_star + alpha d with d Gaussian per filter block, rescaled to the
/// block norm of theta_star (blocks with zero norm get zero direction).
std::vector<SliceCurve> filter_normalized_slice(const Model& model, const ParamVector& theta_star,
                                                const ScalarFn& loss, int n_directions,
                                                const std::vector<double>& alphas, std::uint64_t seed);

enum class ExportFormat { Csv, Json };

void export_grid(const SurfaceGrid& grid, const std::string& path, ExportFormat format);
SurfaceGrid import_grid_json(const std::string& path);
SurfaceGrid import_grid_csv(const std::string& path, const GridSpec& spec);

}  // namespace advsmooth
