#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "aime/errors.hpp"
#include "aime/matrix.hpp"

namespace aime {

struct CcaResult {
  Matrix x_directions;  // p x k
  Matrix y_directions;  // q x k
  std::vector<double> correlations;  // k, nonincreasing
  Matrix x_variates;    // n x k
  Matrix y_variates;    // n x k
  std::vector<double> x_means;
  std::vector<double> y_means;
  double ridge_x = 0.0;
  double ridge_y = 0.0;
};

/// Ridge used when none is given: 1e-3 * trace(S) / dim.
inline double default_ridge(const Matrix& covariance) {
  double tr = 0.0;
  for (std::size_t i = 0; i < covariance.rows(); ++i) tr += covariance(i, i);
  return 1e-3 * tr / static_cast<double>(covariance.rows());
}

namespace detail {

inline Matrix center(const Matrix& m, const std::vector<double>& means) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= means[c];
  }
  return out;
}

inline Matrix covariance(const Matrix& a, const Matrix& b) {
  Matrix s = matmul_tn(a, b);
  const double denom = static_cast<double>(a.rows() - 1);
  for (double& v : s.values()) v /= denom;
  return s;
}

inline void add_ridge(Matrix& s, double ridge) {
  for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += ridge;
}

inline Matrix regularized_cholesky(const Matrix& s, const char* block) {
  try {
    return cholesky(s);
  } catch (const DefinitenessError& e) {
    throw DefinitenessError(std::string("fit_cca: ") + block +
                                " covariance is singular; use a ridge > 0 (" + e.what() + ")",
                            e.pivot());
  }
}

}  // namespace detail

/// Regularized CCA. With `ridge` unset, each block gets default_ridge() of
/// its own covariance; otherwise the same ridge is added to both blocks.
///
/// Whitening uses the Cholesky factors: K = Lx^-1 Sxy Ly^-T, K = U S V^T,
/// directions Lx^-T U and Ly^-T V. Each direction pair is sign-flipped so the
/// largest-magnitude X coefficient is positive.
inline CcaResult fit_cca(const Matrix& x, const Matrix& y, std::size_t k,
                         std::optional<double> ridge = std::nullopt) {
  const std::size_t n = x.rows();
  if (y.rows() != n) {
    throw ShapeError("fit_cca: X has " + std::to_string(n) + " rows but Y has " + std::to_string(y.rows()));
  }
  if (n < 3) throw InsufficientDataError("fit_cca: need at least 3 samples");
  if (!x.all_finite() || !y.all_finite()) throw DataError("fit_cca: input contains non-finite values");
  const std::size_t p = x.cols(), q = y.cols();
  if (k < 1 || k > std::min(p, q)) {
    throw DomainError("fit_cca: k must lie in [1, min(p, q)] = [1, " + std::to_string(std::min(p, q)) +
                      "], got " + std::to_string(k));
  }
  if (ridge && !(*ridge >= 0.0)) throw DomainError("fit_cca: ridge must be >= 0");
  if (ridge && *ridge == 0.0 && (p >= n || q >= n)) {
    throw DefinitenessError("fit_cca: covariance is singular with " + std::to_string(n) +
                                " samples and p=" + std::to_string(p) + ", q=" + std::to_string(q) +
                                "; use a ridge > 0",
                            std::min(p, q));
  }

  CcaResult res;
  res.x_means = column_means(x);
  res.y_means = column_means(y);
  const Matrix xc = detail::center(x, res.x_means);
  const Matrix yc = detail::center(y, res.y_means);

  Matrix sxx = detail::covariance(xc, xc);
  Matrix syy = detail::covariance(yc, yc);
  const Matrix sxy = detail::covariance(xc, yc);
  res.ridge_x = ridge ? *ridge : default_ridge(sxx);
  res.ridge_y = ridge ? *ridge : default_ridge(syy);
  detail::add_ridge(sxx, res.ridge_x);
  detail::add_ridge(syy, res.ridge_y);

  const Matrix lx = detail::regularized_cholesky(sxx, "X");
  const Matrix ly = detail::regularized_cholesky(syy, "Y");
  // K = Lx^-1 Sxy Ly^-T, computed as (Ly^-1 (Lx^-1 Sxy)^T)^T.
  const Matrix left = solve_lower(lx, sxy);
  const Matrix kmat = transpose(solve_lower(ly, transpose(left)));
  const Svd svd = svd_thin(kmat);

  Matrix u(p, k), v(q, k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < p; ++i) u(i, j) = svd.u(i, j);
    for (std::size_t i = 0; i < q; ++i) v(i, j) = svd.v(i, j);
  }
  res.x_directions = solve_lower_transposed(lx, u);
  res.y_directions = solve_lower_transposed(ly, v);
  res.correlations.assign(svd.s.begin(), svd.s.begin() + static_cast<std::ptrdiff_t>(k));

  for (std::size_t j = 0; j < k; ++j) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < p; ++i)
      if (std::abs(res.x_directions(i, j)) > std::abs(res.x_directions(arg, j))) arg = i;
    if (res.x_directions(arg, j) < 0.0) {
      for (std::size_t i = 0; i < p; ++i) res.x_directions(i, j) = -res.x_directions(i, j);
      for (std::size_t i = 0; i < q; ++i) res.y_directions(i, j) = -res.y_directions(i, j);
    }
  }
  res.x_variates = matmul(xc, res.x_directions);
  res.y_variates = matmul(yc, res.y_directions);
  return res;
}

/// Canonical variates of new X samples (centered with the training means).
inline Matrix project_cca(const CcaResult& result, const Matrix& x_new) {
  if (x_new.cols() != result.x_directions.rows()) {
    throw ShapeError("project_cca: input has " + std::to_string(x_new.cols()) + " features, fit used " +
                     std::to_string(result.x_directions.rows()));
  }
  return matmul(detail::center(x_new, result.x_means), result.x_directions);
}

inline Matrix project_cca_y(const CcaResult& result, const Matrix& y_new) {
  if (y_new.cols() != result.y_directions.rows()) {
    throw ShapeError("project_cca_y: input has " + std::to_string(y_new.cols()) + " features, fit used " +
                     std::to_string(result.y_directions.rows()));
  }
  return matmul(detail::center(y_new, result.y_means), result.y_directions);
}

}  // namespace aime
