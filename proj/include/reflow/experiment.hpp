#pragma once

// JSON-configured experiment runner. Every experiment writes its artifacts
// into an output directory together with manifest.json, which lists each
// file with its SHA-256 digest.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "reflow/coefficients.hpp"
#include "reflow/core.hpp"
#include "reflow/transport.hpp"

namespace reflow {

enum class ExperimentKind { Flow, Derivative, Transport, Coalesce, Hausdorff, Oracle1d };

std::string_view to_string(ExperimentKind kind);

struct ExplicitPoints {
  std::vector<std::vector<double>> points;
};
/// lower + i * spacing per axis up to upper; points outside the domain are dropped.
struct LatticePoints {
  std::vector<double> lower, upper;
  double spacing;
};
/// `count` i.i.d. uniform points of box ∩ domain, drawn from the config seed.
struct UniformPoints {
  std::vector<double> lower, upper;
  std::size_t count;
};
using PointGenerator = std::variant<ExplicitPoints, LatticePoints, UniformPoints>;

struct ExperimentParams {
  std::optional<double> merge_tol;  // default 10 sqrt(dt)
  std::vector<double> epsilons{0.04, 0.02, 0.01};
  std::size_t bins = 10;
  double bump_h = 1e-4;
  double radius = 2.0;
  std::optional<std::size_t> t_index;  // default: last step
  std::size_t record_stride = 1;
  std::vector<std::size_t> particles;  // derivative: empty means all
  std::optional<Box> box;              // transport density box
};

struct ExperimentConfig {
  ExperimentKind kind;
  DomainSpec domain;
  PolynomialField coefficients;
  TimeGrid grid;
  PointGenerator initial_points;
  std::uint64_t seed;
  std::string output_dir;
  ExperimentParams params;
  nlohmann::json source;  // the document as given
};

/// Strict parse; unknown keys and invalid values throw Error(InvalidConfig).
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(std::string_view text);

/// Coefficient block of a config: {"preset": ...} or {"inline": ...}.
PolynomialField parse_coefficients(const nlohmann::json& block, std::size_t dim);

/// Deterministic in the config and the seed.
PointCloud generate_points(const ExperimentConfig& config);

struct RunOptions {
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

/// Runs the experiment, writes its files and manifest.json, and returns the
/// manifest. The manifest does not depend on the thread count or on the
/// output directory.
nlohmann::json run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// {"presets": [{"name": ..., "summary": ...}, ...]}
nlohmann::json presets_listing();

}  // namespace reflow
