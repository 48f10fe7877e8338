#include "reflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace reflow {

double exact_sum(std::span<const double> values) {
  // Shewchuk's non-overlapping partials, rounded once at the end.
  std::vector<double> partials;
  for (double x : values) {
    std::size_t kept = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[kept++] = lo;
      x = hi;
    }
    partials.resize(kept);
    partials.push_back(x);
  }
  if (partials.empty()) return 0.0;
  // Sum from the top partial down, with the half-way correction.
  std::size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

// ---------------------------------------------------------------------------

ParticleMeasure::ParticleMeasure(PointCloud points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.size() != weights_.size()) fail(ErrorCode::InvalidArgument, "one weight per point is required");
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
  }
}

ParticleMeasure ParticleMeasure::uniform(PointCloud points, double total_mass) {
  if (!(total_mass > 0.0)) fail(ErrorCode::InvalidArgument, "total mass must be positive");
  if (points.empty()) fail(ErrorCode::InvalidArgument, "uniform measure needs at least one point");
  const std::size_t n = points.size();
  return ParticleMeasure(std::move(points), std::vector<double>(n, total_mass / static_cast<double>(n)));
}

TransportDecomposition pushforward_decompose(const ParticleMeasure& mu, const FlowResult& flow, std::size_t step) {
  if (mu.size() != flow.num_particles()) fail(ErrorCode::InvalidArgument, "measure and flow index different particles");
  if (mu.points().coords() != flow.initial_points().coords()) {
    fail(ErrorCode::InvalidArgument, "measure points are not the flow's initial points");
  }
  const auto image = flow.image(step);
  TransportDecomposition out;
  out.step = step;
  PointCloud ac_points(flow.dim()), singular_points(flow.dim());
  std::vector<double> ac_weights, singular_weights;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const auto tau = flow.tau(j);
    if (tau && *tau <= step) {
      out.singular_indices.push_back(j);
      singular_points.push_back(image[j]);
      singular_weights.push_back(mu.weights()[j]);
    } else {
      out.ac_indices.push_back(j);
      ac_points.push_back(image[j]);
      ac_weights.push_back(mu.weights()[j]);
    }
  }
  out.ac_part = ParticleMeasure(std::move(ac_points), std::move(ac_weights));
  out.singular_part = ParticleMeasure(std::move(singular_points), std::move(singular_weights));
  return out;
}

bool mass_identity_holds(const ParticleMeasure& mu, const TransportDecomposition& dec) {
  std::vector<std::size_t> all(dec.ac_indices);
  all.insert(all.end(), dec.singular_indices.begin(), dec.singular_indices.end());
  std::sort(all.begin(), all.end());
  for (std::size_t j = 0; j < all.size(); ++j) {
    if (all[j] != j) return false;
  }
  if (all.size() != mu.size()) return false;

  std::vector<double> pooled(dec.ac_part.weights());
  pooled.insert(pooled.end(), dec.singular_part.weights().begin(), dec.singular_part.weights().end());
  return exact_sum(pooled) == mu.total_mass();
}

// ---------------------------------------------------------------------------

double DensityGrid::integral() const {
  std::vector<double> masses;
  masses.reserve(values.size());
  for (double v : values) masses.push_back(v * cell_volume);
  return exact_sum(masses);
}

DensityGrid density_histogram(const ParticleMeasure& part, const Box& box, std::size_t bins) {
  const std::size_t d = box.lower.size();
  if (d == 0 || box.upper.size() != d) fail(ErrorCode::InvalidArgument, "box needs matching lower/upper corners");
  if (bins == 0) fail(ErrorCode::InvalidArgument, "bins must be >= 1");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(box.upper[i] > box.lower[i])) fail(ErrorCode::InvalidArgument, "degenerate box");
  }
  if (!part.empty() && part.points().dim() != d) fail(ErrorCode::InvalidArgument, "box dimension mismatch");

  DensityGrid grid;
  grid.box = box;
  grid.bins = bins;
  std::vector<double> width(d);
  grid.cell_volume = 1.0;
  std::size_t cells = 1;
  for (std::size_t i = 0; i < d; ++i) {
    width[i] = (box.upper[i] - box.lower[i]) / static_cast<double>(bins);
    grid.cell_volume *= width[i];
    cells *= bins;
  }
  std::vector<std::vector<double>> cell_mass(cells);
  std::vector<double> outside;

  for (std::size_t j = 0; j < part.size(); ++j) {
    const auto p = part.points()[j];
    std::size_t flat = 0;
    bool inside = true;
    for (std::size_t i = 0; i < d && inside; ++i) {
      if (p[i] < box.lower[i] || p[i] > box.upper[i]) {
        inside = false;
        break;
      }
      auto b = static_cast<std::size_t>((p[i] - box.lower[i]) / width[i]);
      b = std::min(b, bins - 1);
      flat = flat * bins + b;
    }
    (inside ? cell_mass[flat] : outside).push_back(part.weights()[j]);
  }

  grid.values.resize(cells);
  std::vector<double> cell_totals(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    cell_totals[c] = exact_sum(cell_mass[c]);
    grid.values[c] = cell_totals[c] / grid.cell_volume;
  }
  grid.in_box_mass = exact_sum(cell_totals);
  grid.out_of_box_mass = exact_sum(outside);
  return grid;
}

double singular_support_distance(const PointCloud& singular, const PointCloud& cloud) {
  if (singular.empty()) return 0.0;
  if (cloud.empty()) fail(ErrorCode::InvalidArgument, "boundary cloud is empty but the singular part is not");
  if (cloud.dim() != singular.dim()) fail(ErrorCode::InvalidArgument, "dimension mismatch");
  const std::size_t d = singular.dim();
  double worst = 0.0;
  for (std::size_t a = 0; a < singular.size(); ++a) {
    double best = std::numeric_limits<double>::infinity();
    const auto p = singular[a];
    for (std::size_t b = 0; b < cloud.size() && best > 0.0; ++b) {
      const auto q = cloud[b];
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (p[c] - q[c]) * (p[c] - q[c]);
      best = std::min(best, s);
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

std::vector<BoxCount> hausdorff_boxcount(const PointCloud& points, std::span<const double> epsilons, double radius) {
  if (epsilons.empty()) fail(ErrorCode::InvalidArgument, "epsilon list is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) fail(ErrorCode::InvalidArgument, "epsilons must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) fail(ErrorCode::InvalidArgument, "epsilons must be strictly decreasing");
  }
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "radius must be positive");

  const std::size_t d = points.dim();
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < points.size(); ++j) {
    double s = 0.0;
    for (double v : points[j]) s += v * v;
    if (std::sqrt(s) <= radius) kept.push_back(j);
  }

  std::vector<BoxCount> out;
  for (double eps : epsilons) {
    std::vector<std::vector<std::int64_t>> boxes;
    boxes.reserve(kept.size());
    for (std::size_t j : kept) {
      std::vector<std::int64_t> key(d);
      for (std::size_t c = 0; c < d; ++c) key[c] = static_cast<std::int64_t>(std::floor(points[j][c] / eps));
      boxes.push_back(std::move(key));
    }
    std::sort(boxes.begin(), boxes.end());
    const auto count = static_cast<std::size_t>(std::unique(boxes.begin(), boxes.end()) - boxes.begin());
    const double estimate = static_cast<double>(count) * std::pow(eps, static_cast<double>(d) - 1.0);
    out.push_back({eps, count, estimate});
  }
  return out;
}

}  // namespace reflow
