#pragma once

// Domain geometry, coefficient fields, time grids and the shared noise
// realization consumed by every other part of the engine.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace reflow {

/// Error categories carried by every exception thrown from the engine. The C
/// API maps them one-to-one onto status codes.
enum class ErrorCode {
  InvalidArgument = 1,
  OutOfRange = 2,
  DomainViolation = 3,
  InvalidConfig = 4,
  Io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

// ---------------------------------------------------------------------------
// Domains

enum class DomainKind { HalfSpace, UnitDisk };

/// Reflecting domain: either R^{d-1} x [0, inf) or the closed unit disk in R^2.
class DomainSpec {
 public:
  static DomainSpec half_space(std::size_t dim);
  static DomainSpec unit_disk();

  DomainKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }

  bool contains(std::span<const double> x) const;
  bool on_boundary(std::span<const double> x) const;

  /// Inward unit normal at a boundary point. For the disk this is -x/|x|.
  std::vector<double> inward_normal(std::span<const double> boundary_point) const;

  /// Row-major d x d orthoprojection onto the tangent space at a boundary
  /// point, i.e. I - n n^T.
  std::vector<double> tangent_projection(std::span<const double> boundary_point) const;

  std::string describe() const;

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;

 private:
  DomainSpec(DomainKind kind, std::size_t dim) : kind_(kind), dim_(dim) {}
  DomainKind kind_;
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Coefficients

/// out = f(x), both of length d.
using VectorMap = std::function<void(std::span<const double> x, std::span<double> out)>;
/// out = row-major Jacobian of f at x, length d*d.
using MatrixMap = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Drift a_0 and diffusion columns a_1..a_m, with optional Jacobians for all
/// k = 0..m (either every Jacobian is present or none is).
class CoefficientField {
 public:
  CoefficientField(std::size_t dim, VectorMap drift, std::vector<VectorMap> diffusion,
                   std::vector<MatrixMap> jacobians = {}, double lipschitz_hint = 1.0);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t m() const noexcept { return diffusion_.size(); }
  bool has_gradients() const noexcept { return !jacobians_.empty(); }
  double lipschitz_hint() const noexcept { return lipschitz_hint_; }

  void drift(std::span<const double> x, std::span<double> out) const { drift_(x, out); }
  void diffusion(std::size_t k, std::span<const double> x, std::span<double> out) const {
    diffusion_[k](x, out);
  }
  /// k = 0 is the drift Jacobian, k >= 1 the Jacobian of column a_k.
  void jacobian(std::size_t k, std::span<const double> x, std::span<double> out) const;

  /// Value of column k (0 = drift) if it does not depend on x, else empty.
  std::span<const double> constant_column(std::size_t k) const;
  /// Declares column k constant; the maps must return exactly `value`.
  void set_constant_column(std::size_t k, std::vector<double> value);

 private:
  std::size_t dim_;
  VectorMap drift_;
  std::vector<VectorMap> diffusion_;
  std::vector<MatrixMap> jacobians_;
  double lipschitz_hint_;
  std::vector<std::vector<double>> constants_;
};

// ---------------------------------------------------------------------------
// Time grid and noise

class TimeGrid {
 public:
  TimeGrid(double t_end, std::size_t n_steps);

  double t_end() const noexcept { return t_end_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  double dt() const noexcept { return t_end_ / static_cast<double>(n_steps_); }
  /// t_i = i * dt, with t_{n_steps} == t_end exactly.
  double time(std::size_t i) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double t_end_;
  std::size_t n_steps_;
};

/// Counter-based SplitMix64 stream. Word n of stream (seed, key) is
/// mix(base + (n + 1) * gamma) with base = mix(seed ^ mix(key)), so any word
/// can be produced independently of the others.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t key);
  std::uint64_t word(std::uint64_t n) const noexcept;
  /// Uniform in (0, 1], 53 bits.
  double uniform(std::uint64_t n) const noexcept;
  /// Standard normal from Box-Muller on words (2p, 2p+1); even n takes the
  /// cosine branch and odd n the sine branch of pair p = n / 2.
  double normal(std::uint64_t n) const noexcept;

 private:
  std::uint64_t base_;
};

/// Wiener increments dW_k(i) ~ N(0, dt) for k = 0..m-1, i = 0..n_steps-1
/// (increment i drives step i + 1). Immutable; copies share storage.
class NoiseRealization {
 public:
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t m() const noexcept { return m_; }
  const TimeGrid& grid() const noexcept { return grid_; }

  /// All increments of driving process k.
  std::span<const double> increments(std::size_t k) const;
  /// Increment driving step `step` (1-based, as in the grid index).
  double increment(std::size_t k, std::size_t step) const {
    return (*data_)[k * grid_.n_steps() + (step - 1)];
  }
  /// w_k(t_i) for i = 0..n_steps, w_k(0) = 0.
  std::vector<double> path(std::size_t k) const;

 private:
  friend NoiseRealization make_noise(std::uint64_t, std::size_t, const TimeGrid&);
  friend NoiseRealization noise_from_increments(const TimeGrid&, const std::vector<std::vector<double>>&);
  NoiseRealization(std::uint64_t seed, std::size_t m, TimeGrid grid,
                   std::shared_ptr<const std::vector<double>> data)
      : seed_(seed), m_(m), grid_(grid), data_(std::move(data)) {}

  std::uint64_t seed_;
  std::size_t m_;
  TimeGrid grid_;
  std::shared_ptr<const std::vector<double>> data_;
};

NoiseRealization make_noise(std::uint64_t seed, std::size_t m, const TimeGrid& grid);
/// Prescribed increments, one row per driving process; seed() reports 0.
NoiseRealization noise_from_increments(const TimeGrid& grid, const std::vector<std::vector<double>>& increments);

bool contains(const DomainSpec& domain, std::span<const double> x);

// ---------------------------------------------------------------------------
// Point clouds

/// Flat row-major storage of n points in R^dim.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::size_t dim) : dim_(dim) {}
  PointCloud(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> operator[](std::size_t j) const {
    return {coords_.data() + j * dim_, dim_};
  }
  std::span<double> operator[](std::size_t j) { return {coords_.data() + j * dim_, dim_}; }

  void push_back(std::span<const double> p);
  const std::vector<double>& coords() const noexcept { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

}  // namespace reflow
