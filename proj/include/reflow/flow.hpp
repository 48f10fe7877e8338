#pragma once

// Ensemble simulation of the reflected flow under one shared noise
// realization, with first hitting times, coalescence and image labels.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "reflow/core.hpp"

namespace reflow {

/// Grid index of the first boundary visit; nullopt means the particle never
/// touched the boundary within the horizon.
using HitIndex = std::optional<std::size_t>;

struct FlowOptions {
  /// Worker threads over particles. Output never depends on this value.
  std::size_t threads = 1;
  /// Keep every `record_stride`-th step (plus step 0 and the last step).
  /// 1 keeps the full path, which derivative computations require.
  std::size_t record_stride = 1;
};

class FlowResult {
 public:
  const DomainSpec& domain() const noexcept { return domain_; }
  const TimeGrid& grid() const noexcept { return noise_.grid(); }
  const NoiseRealization& noise() const noexcept { return noise_; }
  const PointCloud& initial_points() const noexcept { return initial_; }

  std::size_t num_particles() const noexcept { return initial_.size(); }
  std::size_t dim() const noexcept { return domain_.dim(); }
  std::size_t n_steps() const noexcept { return grid().n_steps(); }

  const std::vector<std::size_t>& recorded_steps() const noexcept { return steps_; }
  bool is_recorded(std::size_t step) const;
  bool fully_recorded() const noexcept { return steps_.size() == n_steps() + 1; }

  /// phi_{step}(x_j). Throws OutOfRange for steps that were not recorded.
  std::span<const double> position(std::size_t step, std::size_t particle) const;
  /// xi_{step}(x_j), nondecreasing in step.
  double local_time(std::size_t step, std::size_t particle) const;
  /// True iff step `step` ended with a reflection event (for step 0: the
  /// start lies on the boundary).
  bool reflected(std::size_t step, std::size_t particle) const;
  HitIndex tau(std::size_t particle) const;

  /// Images of all particles at a recorded step.
  PointCloud image(std::size_t step) const;

 private:
  friend FlowResult simulate_flow(const DomainSpec&, const CoefficientField&, const PointCloud&,
                                  const NoiseRealization&, const FlowOptions&);
  FlowResult(DomainSpec domain, PointCloud initial, NoiseRealization noise, std::vector<std::size_t> steps);

  std::size_t slot(std::size_t step) const;
  void check_particle(std::size_t particle) const;

  DomainSpec domain_;
  PointCloud initial_;
  NoiseRealization noise_;
  std::vector<std::size_t> steps_;
  std::vector<std::size_t> slot_of_step_;  // n_steps + 1 entries, npos if unrecorded
  std::vector<double> positions_;          // [slot][particle][coord]
  std::vector<double> local_times_;        // [slot][particle]
  std::vector<std::uint8_t> flags_;        // [slot][particle]
  std::vector<HitIndex> tau_;
};

/// Euler proposal phi + a_0 dt + sum_k a_k dW_k followed by the domain's
/// reflection, for every particle under the same increments.
FlowResult simulate_flow(const DomainSpec& domain, const CoefficientField& coeffs, const PointCloud& initial_points,
                         const NoiseRealization& noise, const FlowOptions& options = {});

struct HittingTime {
  std::size_t particle;
  HitIndex tau;
};
std::vector<HittingTime> first_hitting_times(const FlowResult& flow);

struct MergedPair {
  std::size_t first;
  std::size_t second;
  std::size_t merge_step;  // first recorded step with distance <= merge_tol
  bool persistent;         // distance stays <= merge_tol at every later recorded step
};

struct CoalescenceReport {
  double merge_tol = 0.0;
  std::vector<MergedPair> pairs;
};

/// Default threshold 10 * sqrt(dt).
double default_merge_tol(const TimeGrid& grid);

/// Scans every pair over the recorded steps. Pairs are listed in (first,
/// second) lexicographic order.
CoalescenceReport coalescence_report(const FlowResult& flow, double merge_tol);

enum class ImageLabel { Interior, Boundary };

struct ImageClassification {
  std::size_t step = 0;
  std::vector<ImageLabel> labels;
  PointCloud points;
};

/// Boundary iff tau(x_j) <= step.
ImageClassification classify_image(const FlowResult& flow, std::size_t step);

}  // namespace reflow
