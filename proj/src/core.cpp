#include "reflow/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace reflow {

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

namespace {

void require_dim(const DomainSpec& domain, std::span<const double> x) {
  if (x.size() != domain.dim()) {
    fail(ErrorCode::InvalidArgument, "point of dimension " + std::to_string(x.size()) +
                                         " does not match " + domain.describe());
  }
}

// Radial normalisation z / |z| lands within a few ulps of the unit circle.
constexpr double kDiskSlack = 4.0 * std::numeric_limits<double>::epsilon();

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

// ---------------------------------------------------------------------------

DomainSpec DomainSpec::half_space(std::size_t dim) {
  if (dim == 0) fail(ErrorCode::InvalidArgument, "half-space dimension must be positive");
  return DomainSpec(DomainKind::HalfSpace, dim);
}

DomainSpec DomainSpec::unit_disk() { return DomainSpec(DomainKind::UnitDisk, 2); }

bool DomainSpec::contains(std::span<const double> x) const {
  require_dim(*this, x);
  if (kind_ == DomainKind::HalfSpace) return x[dim_ - 1] >= 0.0;
  return std::hypot(x[0], x[1]) <= 1.0 + kDiskSlack;
}

bool DomainSpec::on_boundary(std::span<const double> x) const {
  require_dim(*this, x);
  if (kind_ == DomainKind::HalfSpace) return x[dim_ - 1] == 0.0;
  return std::abs(std::hypot(x[0], x[1]) - 1.0) <= kDiskSlack;
}

std::vector<double> DomainSpec::inward_normal(std::span<const double> p) const {
  require_dim(*this, p);
  std::vector<double> n(dim_, 0.0);
  if (kind_ == DomainKind::HalfSpace) {
    n[dim_ - 1] = 1.0;
    return n;
  }
  const double r = std::hypot(p[0], p[1]);
  if (r == 0.0) fail(ErrorCode::InvalidArgument, "disk normal undefined at the origin");
  n[0] = -p[0] / r;
  n[1] = -p[1] / r;
  return n;
}

std::vector<double> DomainSpec::tangent_projection(std::span<const double> p) const {
  const auto n = inward_normal(p);
  std::vector<double> proj(dim_ * dim_, 0.0);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t c = 0; c < dim_; ++c) {
      proj[r * dim_ + c] = (r == c ? 1.0 : 0.0) - n[r] * n[c];
    }
  }
  if (kind_ == DomainKind::HalfSpace) {
    // Keep the half-space projector exact: the last row and column are zero.
    for (std::size_t c = 0; c < dim_; ++c) proj[(dim_ - 1) * dim_ + c] = 0.0;
  }
  return proj;
}

std::string DomainSpec::describe() const {
  if (kind_ == DomainKind::UnitDisk) return "unit disk in R^2";
  return "half-space R^" + std::to_string(dim_) + "_+";
}

bool contains(const DomainSpec& domain, std::span<const double> x) { return domain.contains(x); }

// ---------------------------------------------------------------------------

CoefficientField::CoefficientField(std::size_t dim, VectorMap drift, std::vector<VectorMap> diffusion,
                                   std::vector<MatrixMap> jacobians, double lipschitz_hint)
    : dim_(dim),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      jacobians_(std::move(jacobians)),
      lipschitz_hint_(lipschitz_hint),
      constants_(diffusion_.size() + 1) {
  if (dim_ == 0) fail(ErrorCode::InvalidArgument, "coefficient dimension must be positive");
  if (!drift_) fail(ErrorCode::InvalidArgument, "drift map is empty");
  if (diffusion_.empty()) fail(ErrorCode::InvalidArgument, "at least one diffusion column is required");
  for (const auto& a : diffusion_) {
    if (!a) fail(ErrorCode::InvalidArgument, "diffusion column map is empty");
  }
  if (!jacobians_.empty()) {
    if (jacobians_.size() != diffusion_.size() + 1) {
      fail(ErrorCode::InvalidArgument, "Jacobians must be given for every k = 0..m or for none");
    }
    for (const auto& j : jacobians_) {
      if (!j) fail(ErrorCode::InvalidArgument, "Jacobian map is empty");
    }
  }
  if (!(lipschitz_hint_ > 0.0)) fail(ErrorCode::InvalidArgument, "lipschitz_hint must be positive");
}

std::span<const double> CoefficientField::constant_column(std::size_t k) const {
  if (k > m()) fail(ErrorCode::OutOfRange, "column index out of range");
  return constants_[k];
}

void CoefficientField::set_constant_column(std::size_t k, std::vector<double> value) {
  if (k > m()) fail(ErrorCode::OutOfRange, "column index out of range");
  if (value.size() != dim_) fail(ErrorCode::InvalidArgument, "constant column has the wrong length");
  constants_[k] = std::move(value);
}

void CoefficientField::jacobian(std::size_t k, std::span<const double> x, std::span<double> out) const {
  if (!has_gradients()) fail(ErrorCode::InvalidArgument, "coefficient field has no gradients");
  jacobians_.at(k)(x, out);
}

// ---------------------------------------------------------------------------

TimeGrid::TimeGrid(double t_end, std::size_t n_steps) : t_end_(t_end), n_steps_(n_steps) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) fail(ErrorCode::InvalidArgument, "t_end must be positive and finite");
  if (n_steps == 0) fail(ErrorCode::InvalidArgument, "n_steps must be positive");
}

double TimeGrid::time(std::size_t i) const {
  if (i > n_steps_) fail(ErrorCode::OutOfRange, "time index " + std::to_string(i) + " beyond grid");
  if (i == n_steps_) return t_end_;
  return static_cast<double>(i) * dt();
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t key) : base_(mix64(seed ^ mix64(key + kGamma))) {}

std::uint64_t CounterStream::word(std::uint64_t n) const noexcept { return mix64(base_ + (n + 1) * kGamma); }

double CounterStream::uniform(std::uint64_t n) const noexcept {
  return static_cast<double>((word(n) >> 11) + 1) * 0x1.0p-53;
}

double CounterStream::normal(std::uint64_t n) const noexcept {
  const std::uint64_t pair = n / 2;
  const double radius = std::sqrt(-2.0 * std::log(uniform(2 * pair)));
  const double angle = 2.0 * std::numbers::pi * uniform(2 * pair + 1);
  return (n % 2 == 0) ? radius * std::cos(angle) : radius * std::sin(angle);
}

NoiseRealization make_noise(std::uint64_t seed, std::size_t m, const TimeGrid& grid) {
  if (m == 0) fail(ErrorCode::InvalidArgument, "noise needs at least one driving process");
  const std::size_t n = grid.n_steps();
  const double scale = std::sqrt(grid.dt());
  auto data = std::make_shared<std::vector<double>>(m * n);
  for (std::size_t k = 0; k < m; ++k) {
    const CounterStream stream(seed, k);
    double* out = data->data() + k * n;
    for (std::size_t i = 0; i < n; i += 2) {
      const double radius = std::sqrt(-2.0 * std::log(stream.uniform(i)));
      const double angle = 2.0 * std::numbers::pi * stream.uniform(i + 1);
      out[i] = scale * radius * std::cos(angle);
      if (i + 1 < n) out[i + 1] = scale * radius * std::sin(angle);
    }
  }
  return NoiseRealization(seed, m, grid, std::move(data));
}

NoiseRealization noise_from_increments(const TimeGrid& grid, const std::vector<std::vector<double>>& increments) {
  if (increments.empty()) fail(ErrorCode::InvalidArgument, "noise needs at least one driving process");
  const std::size_t n = grid.n_steps();
  auto data = std::make_shared<std::vector<double>>();
  data->reserve(increments.size() * n);
  for (const auto& row : increments) {
    if (row.size() != n) fail(ErrorCode::InvalidArgument, "one increment per grid step is required");
    for (double v : row) {
      if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "increments must be finite");
    }
    data->insert(data->end(), row.begin(), row.end());
  }
  return NoiseRealization(0, increments.size(), grid, std::move(data));
}

std::span<const double> NoiseRealization::increments(std::size_t k) const {
  if (k >= m_) fail(ErrorCode::OutOfRange, "driving process index out of range");
  return {data_->data() + k * grid_.n_steps(), grid_.n_steps()};
}

std::vector<double> NoiseRealization::path(std::size_t k) const {
  const auto inc = increments(k);
  std::vector<double> w(inc.size() + 1, 0.0);
  for (std::size_t i = 0; i < inc.size(); ++i) w[i + 1] = w[i] + inc[i];
  return w;
}

// ---------------------------------------------------------------------------

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) fail(ErrorCode::InvalidArgument, "point cloud dimension must be positive");
  if (coords_.size() % dim_ != 0) fail(ErrorCode::InvalidArgument, "coordinate count is not a multiple of dim");
}

void PointCloud::push_back(std::span<const double> p) {
  if (p.size() != dim_) fail(ErrorCode::InvalidArgument, "point dimension mismatch");
  coords_.insert(coords_.end(), p.begin(), p.end());
}

}  // namespace reflow
