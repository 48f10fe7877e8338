#pragma once

// Pushforward of a weighted particle measure under the flow, split into the
// part carried by not-yet-hit particles and the part carried by the image of
// the boundary; plus the histogram and box-counting estimators used to
// inspect both parts.

#include <cstddef>
#include <span>
#include <vector>

#include "reflow/core.hpp"
#include "reflow/flow.hpp"

namespace reflow {

/// Correctly rounded sum of a sequence (Shewchuk's exact partials), so the
/// result does not depend on summation order.
double exact_sum(std::span<const double> values);

class ParticleMeasure {
 public:
  ParticleMeasure() = default;
  ParticleMeasure(PointCloud points, std::vector<double> weights);
  /// Equal weights total_mass / n.
  static ParticleMeasure uniform(PointCloud points, double total_mass = 1.0);

  const PointCloud& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return weights_.size(); }
  bool empty() const noexcept { return weights_.empty(); }
  double total_mass() const { return exact_sum(weights_); }

 private:
  PointCloud points_;
  std::vector<double> weights_;
};

struct TransportDecomposition {
  std::size_t step = 0;
  ParticleMeasure ac_part;        // images of particles with tau > step
  ParticleMeasure singular_part;  // images of particles with tau <= step
  std::vector<std::size_t> ac_indices;
  std::vector<std::size_t> singular_indices;
};

TransportDecomposition pushforward_decompose(const ParticleMeasure& mu, const FlowResult& flow, std::size_t step);

/// True iff the two parts' weights, pooled, sum exactly to mu's total mass
/// and their index sets partition mu's particles.
bool mass_identity_holds(const ParticleMeasure& mu, const TransportDecomposition& decomposition);

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct DensityGrid {
  Box box;
  std::size_t bins = 0;        // per axis
  double cell_volume = 0.0;
  std::vector<double> values;  // mass / cell volume, first axis varies slowest
  double in_box_mass = 0.0;
  double out_of_box_mass = 0.0;

  /// Sum of value * cell_volume over all cells.
  double integral() const;
};

/// Cells are half-open except the last along each axis, which is closed so
/// points on the upper face count.
DensityGrid density_histogram(const ParticleMeasure& part, const Box& box, std::size_t bins);

/// max over singular points of the distance to the nearest cloud point.
/// 0 for an empty singular part.
double singular_support_distance(const PointCloud& singular, const PointCloud& boundary_cloud);

struct BoxCount {
  double epsilon;
  std::size_t count;  // eps-boxes anchored at the origin that meet the cloud
  double estimate;    // count * eps^(d-1)
};

/// Box counts of the points with |x| <= radius, for strictly decreasing eps.
std::vector<BoxCount> hausdorff_boxcount(const PointCloud& points, std::span<const double> epsilons, double radius);

}  // namespace reflow
