#pragma once

// Derivative flow with projection kills at boundary visits, the jump-free
// linear flow U_st, excursion intervals and the rank conditions built on them.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "reflow/core.hpp"
#include "reflow/flow.hpp"

namespace reflow {

using Matrix = Eigen::MatrixXd;

/// D_i ~ grad phi_{t_i}(x) for one particle at every grid step.
struct DerivativeTrack {
  std::size_t particle = 0;
  std::vector<Matrix> matrices;        // n_steps + 1 entries, matrices[0] == I
  std::vector<std::size_t> jump_times; // steps where the projection kill fired
};

/// Euler factor I + grad a_0(phi_{i-1}) dt + sum_k grad a_k(phi_{i-1}) dW_k(i).
Matrix euler_factor(const FlowResult& flow, const CoefficientField& coeffs, std::size_t particle, std::size_t step);

/// D_i = F_i D_{i-1}, then D_i <- (I - P(phi_i)) D_i when step i (i >= 1)
/// reflected. In the half-space the last row is set to exactly zero.
/// Requires a fully recorded flow and a field with gradients.
DerivativeTrack derivative_flow(const FlowResult& flow, const CoefficientField& coeffs, std::size_t particle);

/// F_t ... F_{s+1} without any jump term; identity when s == t.
Matrix linear_flow_U(const FlowResult& flow, const CoefficientField& coeffs, std::size_t particle,
                     std::size_t s_step, std::size_t t_step);

/// Central differences of phi_T under the same noise: column j is
/// (phi_T(x + h e_j) - phi_T(x - h e_j)) / 2h.
Matrix finite_difference_jacobian(const DomainSpec& domain, const CoefficientField& coeffs,
                                  std::span<const double> x, const NoiseRealization& noise, double h);

struct StepInterval {
  std::size_t begin;  // inclusive
  std::size_t end;    // inclusive
  friend bool operator==(const StepInterval&, const StepInterval&) = default;
};

struct ExcursionDecomposition {
  std::vector<StepInterval> intervals;
};

/// Maximal runs of indices with a strictly positive boundary coordinate.
ExcursionDecomposition excursions(std::span<const double> boundary_coordinate);
/// Same, on the last coordinate of a half-space particle path.
ExcursionDecomposition excursions(const FlowResult& flow, std::size_t particle);

/// Singular values >= tol * largest count toward the rank.
std::size_t numerical_rank(const Matrix& m, double tol = 1e-8);

struct RankCheck {
  std::size_t rank;
  bool satisfied;  // rank == d - 1
};

RankCheck rank_condition_check(const Matrix& u, const Matrix& projection_left, const Matrix& projection_right,
                               double tol = 1e-8);

/// I - P for the half-space: zero out the last coordinate.
Matrix halfspace_tangent_projection(std::size_t dim);

struct MinorCheck {
  double det_minor;
  bool nondegenerate;
};

/// Determinant of U with its last row and last column deleted.
MinorCheck corollary_minor_check(const Matrix& u, double tol = 1e-8);

/// For d = 2: are (a_{k,1}(x))_k and (<grad a_{k,2}(x), y>)_k linearly
/// independent, i.e. is the second singular value of the 2 x m matrix they
/// form above tol times the first.
bool example2_independence_check(const CoefficientField& coeffs, std::span<const double> x,
                                 std::span<const double> y, double tol = 1e-8);

}  // namespace reflow
