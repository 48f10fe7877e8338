#include "reflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "reflow/skorokhod.hpp"

namespace reflow {

namespace {

constexpr std::size_t kUnrecorded = std::numeric_limits<std::size_t>::max();

std::vector<std::size_t> steps_to_record(std::size_t n_steps, std::size_t stride) {
  if (stride == 0) fail(ErrorCode::InvalidArgument, "record_stride must be positive");
  std::vector<std::size_t> steps;
  for (std::size_t i = 0; i <= n_steps; i += stride) steps.push_back(i);
  if (steps.back() != n_steps) steps.push_back(n_steps);
  return steps;
}

/// Runs fn(begin, end) over [0, count) split into contiguous chunks.
template <typename Fn>
void parallel_chunks(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  const std::size_t chunk = (count + threads - 1) / threads;
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

FlowResult::FlowResult(DomainSpec domain, PointCloud initial, NoiseRealization noise, std::vector<std::size_t> steps)
    : domain_(domain), initial_(std::move(initial)), noise_(std::move(noise)), steps_(std::move(steps)) {
  const std::size_t p = initial_.size();
  slot_of_step_.assign(noise_.grid().n_steps() + 1, kUnrecorded);
  for (std::size_t s = 0; s < steps_.size(); ++s) slot_of_step_[steps_[s]] = s;
  positions_.assign(steps_.size() * p * domain_.dim(), 0.0);
  local_times_.assign(steps_.size() * p, 0.0);
  flags_.assign(steps_.size() * p, 0);
  tau_.assign(p, std::nullopt);
}

bool FlowResult::is_recorded(std::size_t step) const {
  return step < slot_of_step_.size() && slot_of_step_[step] != kUnrecorded;
}

std::size_t FlowResult::slot(std::size_t step) const {
  if (step >= slot_of_step_.size()) fail(ErrorCode::OutOfRange, "step " + std::to_string(step) + " beyond grid");
  const std::size_t s = slot_of_step_[step];
  if (s == kUnrecorded) fail(ErrorCode::OutOfRange, "step " + std::to_string(step) + " was not recorded");
  return s;
}

void FlowResult::check_particle(std::size_t particle) const {
  if (particle >= num_particles()) {
    fail(ErrorCode::OutOfRange, "particle index " + std::to_string(particle) + " out of range");
  }
}

std::span<const double> FlowResult::position(std::size_t step, std::size_t particle) const {
  check_particle(particle);
  const std::size_t d = dim();
  return {positions_.data() + (slot(step) * num_particles() + particle) * d, d};
}

double FlowResult::local_time(std::size_t step, std::size_t particle) const {
  check_particle(particle);
  return local_times_[slot(step) * num_particles() + particle];
}

bool FlowResult::reflected(std::size_t step, std::size_t particle) const {
  check_particle(particle);
  return flags_[slot(step) * num_particles() + particle] != 0;
}

HitIndex FlowResult::tau(std::size_t particle) const {
  check_particle(particle);
  return tau_[particle];
}

PointCloud FlowResult::image(std::size_t step) const {
  const std::size_t s = slot(step);
  const std::size_t stride = num_particles() * dim();
  return PointCloud(dim(), std::vector<double>(positions_.begin() + static_cast<std::ptrdiff_t>(s * stride),
                                               positions_.begin() + static_cast<std::ptrdiff_t>((s + 1) * stride)));
}

// ---------------------------------------------------------------------------

FlowResult simulate_flow(const DomainSpec& domain, const CoefficientField& coeffs, const PointCloud& initial_points,
                         const NoiseRealization& noise, const FlowOptions& options) {
  const std::size_t d = domain.dim();
  if (coeffs.dim() != d) fail(ErrorCode::InvalidArgument, "coefficient dimension does not match the domain");
  if (noise.m() != coeffs.m()) {
    fail(ErrorCode::InvalidArgument, "noise has " + std::to_string(noise.m()) + " driving processes, coefficients " +
                                         std::to_string(coeffs.m()));
  }
  if (initial_points.dim() != d && !initial_points.empty()) {
    fail(ErrorCode::InvalidArgument, "initial points have the wrong dimension");
  }
  for (std::size_t j = 0; j < initial_points.size(); ++j) {
    if (!domain.contains(initial_points[j])) {
      fail(ErrorCode::DomainViolation, "initial point " + std::to_string(j) + " lies outside the " + domain.describe());
    }
  }

  const PointCloud initial = initial_points.empty() ? PointCloud(d) : initial_points;
  FlowResult result(domain, initial, noise, steps_to_record(noise.grid().n_steps(), options.record_stride));

  const std::size_t p = initial.size();
  const std::size_t n = noise.grid().n_steps();
  const std::size_t m = coeffs.m();
  const double dt = noise.grid().dt();

  // Constant columns are read once instead of evaluated per step.
  std::vector<std::span<const double>> fixed(m + 1);
  for (std::size_t k = 0; k <= m; ++k) fixed[k] = coeffs.constant_column(k);

  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<double> phi(d), z(d), buf(d);
    for (std::size_t j = begin; j < end; ++j) {
      std::copy_n(initial[j].begin(), d, phi.begin());
      double xi = 0.0;
      const bool starts_on_boundary = domain.on_boundary(phi);
      HitIndex tau = starts_on_boundary ? HitIndex{0} : std::nullopt;

      auto record = [&](std::size_t step, bool flag) {
        const std::size_t s = result.slot_of_step_[step];
        if (s == kUnrecorded) return;
        std::copy_n(phi.begin(), d, result.positions_.begin() + static_cast<std::ptrdiff_t>((s * p + j) * d));
        result.local_times_[s * p + j] = xi;
        result.flags_[s * p + j] = flag ? 1 : 0;
      };
      record(0, starts_on_boundary);

      for (std::size_t step = 1; step <= n; ++step) {
        const double* a = fixed[0].data();
        if (fixed[0].empty()) {
          coeffs.drift(phi, buf);
          a = buf.data();
        }
        for (std::size_t c = 0; c < d; ++c) z[c] = phi[c] + a[c] * dt;
        for (std::size_t k = 0; k < m; ++k) {
          a = fixed[k + 1].data();
          if (fixed[k + 1].empty()) {
            coeffs.diffusion(k, phi, buf);
            a = buf.data();
          }
          const double dw = noise.increment(k, step);
          for (std::size_t c = 0; c < d; ++c) z[c] += a[c] * dw;
        }
        const auto r = reflect_in_place(domain, z);
        phi.swap(z);
        xi += r.xi_increment;
        if (r.reflected && !tau) tau = step;
        record(step, r.reflected);
      }
      result.tau_[j] = tau;
    }
  };
  parallel_chunks(p, options.threads, run);
  return result;
}

std::vector<HittingTime> first_hitting_times(const FlowResult& flow) {
  std::vector<HittingTime> out;
  out.reserve(flow.num_particles());
  for (std::size_t j = 0; j < flow.num_particles(); ++j) out.push_back({j, flow.tau(j)});
  return out;
}

double default_merge_tol(const TimeGrid& grid) { return 10.0 * std::sqrt(grid.dt()); }

CoalescenceReport coalescence_report(const FlowResult& flow, double merge_tol) {
  if (!(merge_tol > 0.0)) fail(ErrorCode::InvalidArgument, "merge_tol must be positive");
  CoalescenceReport report{merge_tol, {}};
  const auto& steps = flow.recorded_steps();
  const std::size_t p = flow.num_particles();
  const double tol2 = merge_tol * merge_tol;

  auto close = [&](std::size_t step, std::size_t a, std::size_t b) {
    const auto x = flow.position(step, a);
    const auto y = flow.position(step, b);
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += (x[c] - y[c]) * (x[c] - y[c]);
    return s <= tol2;
  };

  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      auto first = std::find_if(steps.begin(), steps.end(), [&](std::size_t s) { return close(s, a, b); });
      if (first == steps.end()) continue;
      const bool persistent = std::all_of(first, steps.end(), [&](std::size_t s) { return close(s, a, b); });
      report.pairs.push_back({a, b, *first, persistent});
    }
  }
  return report;
}

ImageClassification classify_image(const FlowResult& flow, std::size_t step) {
  ImageClassification out;
  out.step = step;
  out.points = flow.image(step);
  out.labels.reserve(flow.num_particles());
  for (std::size_t j = 0; j < flow.num_particles(); ++j) {
    const auto tau = flow.tau(j);
    out.labels.push_back(tau && *tau <= step ? ImageLabel::Boundary : ImageLabel::Interior);
  }
  return out;
}

}  // namespace reflow
