#pragma once

// Reflection primitives: the exact one-dimensional Skorokhod map and the
// per-step projections onto the half-space and the unit disk.

#include <span>
#include <vector>

#include "reflow/core.hpp"

namespace reflow {

/// Result of projecting one Euler proposal back into the closed domain.
struct ReflectedStep {
  std::vector<double> position;
  double xi_increment = 0.0;  // local-time increase, >= 0
  bool reflected = false;     // proposal left the domain or landed on its boundary
};

struct SkorokhodPath {
  std::vector<double> phi;
  std::vector<double> xi;
};

/// phi_i = x0 + w_i + xi_i with xi_i = max(0, max_{j <= i} -(x0 + w_j)).
/// Requires w_0 == 0 and x0 >= 0.
SkorokhodPath skorokhod_map_1d(double x0, std::span<const double> w);

/// Sets the last coordinate to 0 when it is <= 0; the deficit goes to xi.
ReflectedStep reflect_step_halfspace(std::span<const double> z);

/// Radial projection onto the unit circle when |z| >= 1.
ReflectedStep reflect_step_disk(std::span<const double> z);

ReflectedStep reflect_step(const DomainSpec& domain, std::span<const double> z);

/// In-place variant used by the flow loop: overwrites z with the projected
/// position and returns (xi increment, reflected). No allocation.
struct InPlaceReflection {
  double xi_increment;
  bool reflected;
};
InPlaceReflection reflect_in_place(const DomainSpec& domain, std::span<double> z);

}  // namespace reflow
