#include "reflow/derivative.hpp"

#include <cmath>

namespace reflow {

namespace {

void require_full_path(const FlowResult& flow) {
  if (!flow.fully_recorded()) {
    fail(ErrorCode::InvalidArgument, "derivative computations need a flow recorded at every step");
  }
}

void require_gradients(const FlowResult& flow, const CoefficientField& coeffs) {
  if (!coeffs.has_gradients()) fail(ErrorCode::InvalidArgument, "coefficient field has no gradients");
  if (coeffs.dim() != flow.dim()) fail(ErrorCode::InvalidArgument, "coefficient dimension does not match the flow");
  if (coeffs.m() != flow.noise().m()) fail(ErrorCode::InvalidArgument, "coefficient m does not match the noise");
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) fail(ErrorCode::InvalidArgument, std::string(what) + " must be square");
}

}  // namespace

Matrix euler_factor(const FlowResult& flow, const CoefficientField& coeffs, std::size_t particle, std::size_t step) {
  const auto d = static_cast<Eigen::Index>(flow.dim());
  const auto prev = flow.position(step - 1, particle);
  // Row-major output from the coefficient maps.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> buf(d, d);

  Matrix f = Matrix::Identity(d, d);
  coeffs.jacobian(0, prev, {buf.data(), static_cast<std::size_t>(d * d)});
  f += buf * flow.grid().dt();
  for (std::size_t k = 0; k < coeffs.m(); ++k) {
    coeffs.jacobian(k + 1, prev, {buf.data(), static_cast<std::size_t>(d * d)});
    f += buf * flow.noise().increment(k, step);
  }
  return f;
}

DerivativeTrack derivative_flow(const FlowResult& flow, const CoefficientField& coeffs, std::size_t particle) {
  require_gradients(flow, coeffs);
  require_full_path(flow);
  if (particle >= flow.num_particles()) fail(ErrorCode::OutOfRange, "particle index out of range");

  const auto d = static_cast<Eigen::Index>(flow.dim());
  const std::size_t n = flow.n_steps();
  DerivativeTrack track;
  track.particle = particle;
  track.matrices.reserve(n + 1);
  track.matrices.push_back(Matrix::Identity(d, d));

  for (std::size_t i = 1; i <= n; ++i) {
    Matrix next = euler_factor(flow, coeffs, particle, i) * track.matrices.back();
    if (flow.reflected(i, particle)) {
      if (flow.domain().kind() == DomainKind::HalfSpace) {
        next.row(d - 1).setZero();
      } else {
        const auto proj = flow.domain().tangent_projection(flow.position(i, particle));
        next = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(proj.data(), d,
                                                                                                       d) *
               next;
      }
      track.jump_times.push_back(i);
    }
    track.matrices.push_back(std::move(next));
  }
  return track;
}

Matrix linear_flow_U(const FlowResult& flow, const CoefficientField& coeffs, std::size_t particle, std::size_t s_step,
                     std::size_t t_step) {
  require_gradients(flow, coeffs);
  require_full_path(flow);
  if (s_step > t_step) fail(ErrorCode::InvalidArgument, "linear_flow_U needs s <= t");
  if (t_step > flow.n_steps()) fail(ErrorCode::OutOfRange, "t beyond the grid");
  if (particle >= flow.num_particles()) fail(ErrorCode::OutOfRange, "particle index out of range");
  const auto d = static_cast<Eigen::Index>(flow.dim());
  Matrix u = Matrix::Identity(d, d);
  for (std::size_t i = s_step + 1; i <= t_step; ++i) u = euler_factor(flow, coeffs, particle, i) * u;
  return u;
}

Matrix finite_difference_jacobian(const DomainSpec& domain, const CoefficientField& coeffs, std::span<const double> x,
                                  const NoiseRealization& noise, double h) {
  if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "bump size h must be positive");
  const std::size_t d = domain.dim();
  if (x.size() != d) fail(ErrorCode::InvalidArgument, "point dimension mismatch");
  if (!domain.contains(x) || domain.on_boundary(x)) fail(ErrorCode::DomainViolation, "base point must be interior");

  PointCloud bumped(d);
  std::vector<double> p(x.begin(), x.end());
  for (std::size_t j = 0; j < d; ++j) {
    for (double sign : {1.0, -1.0}) {
      p[j] = x[j] + sign * h;
      if (!domain.contains(p) || domain.on_boundary(p)) {
        fail(ErrorCode::DomainViolation, "bumped start x " + std::string(sign > 0 ? "+" : "-") + " h e_" +
                                             std::to_string(j + 1) + " leaves the domain interior");
      }
      bumped.push_back(p);
      p[j] = x[j];
    }
  }

  const auto flow = simulate_flow(domain, coeffs, bumped, noise, {.threads = 1, .record_stride = noise.grid().n_steps()});
  const std::size_t last = noise.grid().n_steps();
  const auto dd = static_cast<Eigen::Index>(d);
  Matrix jac(dd, dd);
  for (std::size_t j = 0; j < d; ++j) {
    const auto plus = flow.position(last, 2 * j);
    const auto minus = flow.position(last, 2 * j + 1);
    for (std::size_t r = 0; r < d; ++r) {
      jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = (plus[r] - minus[r]) / (2.0 * h);
    }
  }
  return jac;
}

ExcursionDecomposition excursions(std::span<const double> boundary_coordinate) {
  ExcursionDecomposition out;
  bool open = false;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < boundary_coordinate.size(); ++i) {
    const bool positive = boundary_coordinate[i] > 0.0;
    if (positive && !open) {
      open = true;
      begin = i;
    } else if (!positive && open) {
      open = false;
      out.intervals.push_back({begin, i - 1});
    }
  }
  if (open) out.intervals.push_back({begin, boundary_coordinate.size() - 1});
  return out;
}

ExcursionDecomposition excursions(const FlowResult& flow, std::size_t particle) {
  if (flow.domain().kind() != DomainKind::HalfSpace) fail(ErrorCode::InvalidArgument, "excursions need a half-space flow");
  require_full_path(flow);
  std::vector<double> last_coord;
  last_coord.reserve(flow.n_steps() + 1);
  for (std::size_t i = 0; i <= flow.n_steps(); ++i) last_coord.push_back(flow.position(i, particle).back());
  return excursions(last_coord);
}

std::size_t numerical_rank(const Matrix& m, double tol) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "rank tolerance must be positive");
  if (m.size() == 0) return 0;
  const Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) <= 0.0) return 0;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) >= tol * s(0)) ++rank;
  }
  return rank;
}

RankCheck rank_condition_check(const Matrix& u, const Matrix& left, const Matrix& right, double tol) {
  require_square(u, "U");
  require_square(left, "left projection");
  require_square(right, "right projection");
  if (left.rows() != u.rows() || right.rows() != u.rows()) fail(ErrorCode::InvalidArgument, "matrix dimension mismatch");
  const std::size_t rank = numerical_rank(left * u * right, tol);
  return {rank, rank + 1 == static_cast<std::size_t>(u.rows())};
}

Matrix halfspace_tangent_projection(std::size_t dim) {
  if (dim == 0) fail(ErrorCode::InvalidArgument, "dimension must be positive");
  Matrix p = Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  p(static_cast<Eigen::Index>(dim) - 1, static_cast<Eigen::Index>(dim) - 1) = 0.0;
  return p;
}

MinorCheck corollary_minor_check(const Matrix& u, double tol) {
  require_square(u, "U");
  if (u.rows() < 2) fail(ErrorCode::InvalidArgument, "minor check needs d >= 2");
  const auto k = u.rows() - 1;
  const double det = u.topLeftCorner(k, k).determinant();
  return {det, std::abs(det) > tol};
}

bool example2_independence_check(const CoefficientField& coeffs, std::span<const double> x, std::span<const double> y,
                                 double tol) {
  if (coeffs.dim() != 2) fail(ErrorCode::InvalidArgument, "independence check is defined for d = 2");
  if (coeffs.m() < 2) fail(ErrorCode::InvalidArgument, "independence check needs m >= 2");
  if (!coeffs.has_gradients()) fail(ErrorCode::InvalidArgument, "coefficient field has no gradients");
  if (x.size() != 2 || y.size() != 2) fail(ErrorCode::InvalidArgument, "x and y must be in R^2");
  if (y[0] == 0.0 && y[1] == 0.0) fail(ErrorCode::InvalidArgument, "direction y must be nonzero");

  const auto m = static_cast<Eigen::Index>(coeffs.m());
  Matrix vectors(2, m);
  std::vector<double> a(2), jac(4);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    coeffs.diffusion(kk, x, a);
    coeffs.jacobian(kk + 1, x, jac);
    vectors(0, k) = a[0];
    vectors(1, k) = jac[2] * y[0] + jac[3] * y[1];  // row 2 of grad a_k, applied to y
  }
  const Eigen::JacobiSVD<Matrix> svd(vectors);
  const auto& s = svd.singularValues();
  return s(0) > 0.0 && s(1) > tol * s(0);
}

}  // namespace reflow
