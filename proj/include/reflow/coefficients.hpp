#pragma once

// Multivariate polynomial coefficient fields with exact symbolic gradients,
// and the shipped presets built from them.

#include <cstddef>
#include <string>
#include <vector>

#include "reflow/core.hpp"

namespace reflow {

struct Monomial {
  std::vector<unsigned> exponents;  // one per coordinate
  double value = 0.0;
};

/// Sum of monomials in d variables.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(std::size_t dim, std::vector<Monomial> terms);

  static Polynomial constant(std::size_t dim, double c);
  /// c * x_i
  static Polynomial linear(std::size_t dim, std::size_t i, double c);

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Monomial>& terms() const noexcept { return terms_; }

  double operator()(std::span<const double> x) const;
  /// Exact partial derivative with respect to x_i.
  Polynomial derivative(std::size_t i) const;

  Polynomial& operator+=(const Polynomial& other);

 private:
  std::size_t dim_ = 0;
  std::vector<Monomial> terms_;
};

/// Components of a_0..a_m, each a vector of d polynomials.
class PolynomialField {
 public:
  /// columns[0] is the drift a_0, columns[k] for k >= 1 the diffusion a_k.
  PolynomialField(std::size_t dim, std::vector<std::vector<Polynomial>> columns);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t m() const noexcept { return columns_.size() - 1; }
  const Polynomial& component(std::size_t k, std::size_t i) const { return columns_.at(k).at(i); }

  /// Builds a CoefficientField whose Jacobians are the symbolic derivatives.
  CoefficientField compile() const;

 private:
  std::size_t dim_;
  std::vector<std::vector<Polynomial>> columns_;
};

namespace presets {

/// All coefficients zero; m driving processes that move nothing.
PolynomialField frozen(std::size_t dim, std::size_t m = 1);
/// a_0 = 0, a_k = e_k, m = d.
PolynomialField brownian(std::size_t dim);
/// a_0(x) = A x (row-major d x d), constant diffusion columns sigma (row-major
/// d x m). An empty sigma means the identity with m = d.
PolynomialField linear_drift(std::size_t dim, const std::vector<double>& drift_matrix,
                             const std::vector<double>& sigma = {}, std::size_t m = 0);
/// d = m = 2: a_0 = 0, a_1 = (1, 1), a_2 = (0, x_1). The vectors (a_{k,1}) and
/// (<grad a_{k,2}, y>) are independent for every y with y_1 != 0, and
/// sum_k a_{k,2}^2 > 0 on the boundary line.
PolynomialField example2();

struct PresetInfo {
  std::string name;
  std::string summary;
};
std::vector<PresetInfo> list();

}  // namespace presets

}  // namespace reflow
