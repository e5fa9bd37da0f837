#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "advsmooth/probes.hpp"
#include "advsmooth/surface.hpp"
#include "advsmooth/training.hpp"

namespace advsmooth {

inline constexpr int kSchemaVersion = 1;

/// Either an explicit list of points or a synthetic split.
struct DataSource {
  std::vector<Example> points;
  bool synthetic = false;
  std::size_t n = 200, d = 2;
  std::uint64_t seed = 0;
  std::string split = "train";

  LabeledDataset load() const;
};

struct SurfaceItem {
  ModelKind model = ModelKind::LinearLogistic;
  LossVariant variant = LossVariant::Clean;
  bool entropy = false;
};

struct SurfaceJob {
  GridSpec grid;
  DataSource data;
  double epsilon = 0.6;
  PgdConfig pgd{20, 0.15, false, 0};
  std::vector<SurfaceItem> surfaces;
  double entropy_gamma = 0.5;
  QuadratureSpec quadrature;
  ExportFormat format = ExportFormat::Csv;
  std::uint64_t seed = 0;
};

struct ProbeJob {
  ModelSpec model;
  std::uint64_t init_seed = 0;
  Region region;
  DataSource data;
  double x_radius = 0.6;
  std::size_t n_pairs = 5000;
  double min_sep = 1e-4;
  std::optional<NormBall> ball;  // adds curvature c at `theta` when set
  std::optional<Vector> theta;   // spectral norm and sharpness point
  double sharpness_radius = 0.05;
  int sharpness_restarts = 5;
  std::uint64_t seed = 0;
};

struct EntropyJob {
  ModelKind model = ModelKind::LinearLogistic;
  LossVariant variant = LossVariant::AdvLinf;
  DataSource data;
  double epsilon = 0.6;
  PgdConfig pgd{20, 0.15, false, 0};
  double gamma = 0.03;
  QuadratureSpec quadrature;
  std::vector<Vector> thetas;
  std::uint64_t seed = 0;
};

struct VerifyJob {
  std::vector<std::string> checks;  // empty: every lemma check
  std::uint64_t seed = 2024;
};

/// Parsers reject unknown keys, wrong types and out-of-range values with a
/// ConfigError naming the field path (e.g. "$.grid.resolution").
SurfaceJob parse_surface_job(const nlohmann::json& j);
ProbeJob parse_probe_job(const nlohmann::json& j);
EntropyJob parse_entropy_job(const nlohmann::json& j);
ExperimentConfig parse_experiment(const nlohmann::json& j);
VerifyJob parse_verify_job(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentConfig& c);

/// Reads and parses a JSON file; IoError if unreadable, ConfigError if not JSON.
nlohmann::json read_json_file(const std::string& path);

}  // namespace advsmooth
