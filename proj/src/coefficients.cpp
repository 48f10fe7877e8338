#include "reflow/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace reflow {

namespace {

double ipow(double base, unsigned e) {
  double r = 1.0;
  while (e != 0) {
    if (e & 1U) r *= base;
    base *= base;
    e >>= 1U;
  }
  return r;
}

}  // namespace

Polynomial::Polynomial(std::size_t dim, std::vector<Monomial> terms) : dim_(dim), terms_(std::move(terms)) {
  if (dim_ == 0) fail(ErrorCode::InvalidArgument, "polynomial dimension must be positive");
  for (const auto& t : terms_) {
    if (t.exponents.size() != dim_) {
      fail(ErrorCode::InvalidArgument, "monomial has " + std::to_string(t.exponents.size()) +
                                           " exponents, expected " + std::to_string(dim_));
    }
    if (!std::isfinite(t.value)) fail(ErrorCode::InvalidArgument, "monomial coefficient is not finite");
  }
}

Polynomial Polynomial::constant(std::size_t dim, double c) {
  return Polynomial(dim, {Monomial{std::vector<unsigned>(dim, 0U), c}});
}

Polynomial Polynomial::linear(std::size_t dim, std::size_t i, double c) {
  std::vector<unsigned> e(dim, 0U);
  e.at(i) = 1U;
  return Polynomial(dim, {Monomial{std::move(e), c}});
}

double Polynomial::operator()(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.value;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (t.exponents[i] != 0U) v *= ipow(x[i], t.exponents[i]);
    }
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::derivative(std::size_t i) const {
  if (i >= dim_) fail(ErrorCode::OutOfRange, "derivative index out of range");
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    if (t.exponents[i] == 0U || t.value == 0.0) continue;
    Monomial d = t;
    d.value *= static_cast<double>(t.exponents[i]);
    d.exponents[i] -= 1U;
    out.push_back(std::move(d));
  }
  return Polynomial(dim_, std::move(out));
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) fail(ErrorCode::InvalidArgument, "polynomial dimension mismatch");
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  return *this;
}

// ---------------------------------------------------------------------------

PolynomialField::PolynomialField(std::size_t dim, std::vector<std::vector<Polynomial>> columns)
    : dim_(dim), columns_(std::move(columns)) {
  if (dim_ == 0) fail(ErrorCode::InvalidArgument, "field dimension must be positive");
  if (columns_.size() < 2) fail(ErrorCode::InvalidArgument, "field needs a drift and at least one diffusion column");
  for (auto& col : columns_) {
    if (col.size() != dim_) fail(ErrorCode::InvalidArgument, "every column needs one polynomial per coordinate");
    for (auto& p : col) {
      // A default-constructed polynomial is the zero polynomial.
      if (p.dim() == 0) p = Polynomial(dim_, {});
      if (p.dim() != dim_) fail(ErrorCode::InvalidArgument, "polynomial dimension mismatch");
    }
  }
}

CoefficientField PolynomialField::compile() const {
  struct Compiled {
    std::size_t dim;
    std::vector<std::vector<Polynomial>> values;
    // grads[k][r * dim + c] = d a_{k,r} / d x_c
    std::vector<std::vector<Polynomial>> grads;
  };
  auto c = std::make_shared<Compiled>();
  c->dim = dim_;
  c->values = columns_;
  for (const auto& col : columns_) {
    std::vector<Polynomial> g;
    g.reserve(dim_ * dim_);
    for (std::size_t r = 0; r < dim_; ++r) {
      for (std::size_t cc = 0; cc < dim_; ++cc) g.push_back(col[r].derivative(cc));
    }
    c->grads.push_back(std::move(g));
  }

  auto vector_map = [c](std::size_t k) -> VectorMap {
    return [c, k](std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < c->dim; ++i) out[i] = c->values[k][i](x);
    };
  };
  auto matrix_map = [c](std::size_t k) -> MatrixMap {
    return [c, k](std::span<const double> x, std::span<double> out) {
      for (std::size_t i = 0; i < c->dim * c->dim; ++i) out[i] = c->grads[k][i](x);
    };
  };

  std::vector<VectorMap> diffusion;
  std::vector<MatrixMap> jacobians{matrix_map(0)};
  for (std::size_t k = 1; k < columns_.size(); ++k) {
    diffusion.push_back(vector_map(k));
    jacobians.push_back(matrix_map(k));
  }
  CoefficientField field(dim_, vector_map(0), std::move(diffusion), std::move(jacobians));
  const std::vector<double> origin(dim_, 0.0);
  for (std::size_t k = 0; k < columns_.size(); ++k) {
    const bool constant = std::all_of(columns_[k].begin(), columns_[k].end(), [](const Polynomial& p) {
      return std::all_of(p.terms().begin(), p.terms().end(), [](const Monomial& t) {
        return std::all_of(t.exponents.begin(), t.exponents.end(), [](unsigned e) { return e == 0U; });
      });
    });
    if (!constant) continue;
    std::vector<double> value(dim_);
    for (std::size_t i = 0; i < dim_; ++i) value[i] = columns_[k][i](origin);
    field.set_constant_column(k, std::move(value));
  }
  return field;
}

// ---------------------------------------------------------------------------

namespace presets {

namespace {

std::vector<Polynomial> zeros(std::size_t dim) { return std::vector<Polynomial>(dim, Polynomial(dim, {})); }

}  // namespace

PolynomialField frozen(std::size_t dim, std::size_t m) {
  if (m == 0) fail(ErrorCode::InvalidArgument, "frozen preset needs m >= 1");
  return PolynomialField(dim, std::vector<std::vector<Polynomial>>(m + 1, zeros(dim)));
}

PolynomialField brownian(std::size_t dim) {
  std::vector<std::vector<Polynomial>> cols{zeros(dim)};
  for (std::size_t k = 0; k < dim; ++k) {
    auto col = zeros(dim);
    col[k] = Polynomial::constant(dim, 1.0);
    cols.push_back(std::move(col));
  }
  return PolynomialField(dim, std::move(cols));
}

PolynomialField linear_drift(std::size_t dim, const std::vector<double>& a, const std::vector<double>& sigma,
                             std::size_t m) {
  if (a.size() != dim * dim) fail(ErrorCode::InvalidArgument, "drift matrix must be d x d");
  if (sigma.empty()) {
    m = dim;
  } else if (m == 0 || sigma.size() != dim * m) {
    fail(ErrorCode::InvalidArgument, "diffusion matrix must be d x m");
  }
  std::vector<std::vector<Polynomial>> cols;
  auto drift = zeros(dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      if (a[r * dim + c] != 0.0) drift[r] += Polynomial::linear(dim, c, a[r * dim + c]);
    }
  }
  cols.push_back(std::move(drift));
  for (std::size_t k = 0; k < m; ++k) {
    auto col = zeros(dim);
    for (std::size_t r = 0; r < dim; ++r) {
      const double s = sigma.empty() ? (r == k ? 1.0 : 0.0) : sigma[r * m + k];
      if (s != 0.0) col[r] = Polynomial::constant(dim, s);
    }
    cols.push_back(std::move(col));
  }
  return PolynomialField(dim, std::move(cols));
}

PolynomialField example2() {
  constexpr std::size_t d = 2;
  std::vector<Polynomial> a1{Polynomial::constant(d, 1.0), Polynomial::constant(d, 1.0)};
  std::vector<Polynomial> a2{Polynomial(d, {}), Polynomial::linear(d, 0, 1.0)};
  return PolynomialField(d, {zeros(d), std::move(a1), std::move(a2)});
}

std::vector<PresetInfo> list() {
  return {
      {"frozen", "all coefficients zero (m = 1 unless given)"},
      {"bm", "a_0 = 0, a_k = e_k, m = d (reflected Brownian motion)"},
      {"linear-drift", "a_0(x) = A x with A inline, constant diffusion (identity unless given)"},
      {"example2", "d = m = 2: a_0 = 0, a_1 = (1, 1), a_2 = (0, x_1)"},
  };
}

}  // namespace presets

}  // namespace reflow
