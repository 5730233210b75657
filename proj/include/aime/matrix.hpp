#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aime/errors.hpp"
#include "aime/rng.hpp"

namespace aime {

/// Dense row-major matrix of doubles. Samples are rows everywhere in this
/// library.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw ShapeError("matrix of shape " + shape_string(rows_, cols_) + " needs " +
                       std::to_string(rows_ * cols_) + " values, got " +
                       std::to_string(values_.size()));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged initializer for Matrix");
      values_.insert(values_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  std::string shape() const { return shape_string(rows_, cols_); }

  static std::string shape_string(std::size_t r, std::size_t c) {
    return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

/// a^T * b without materializing the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply transpose of " + a.shape() + " by " + b.shape());
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto arow = a.row(r);
    auto brow = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ai = arow[i];
      if (ai == 0.0) continue;
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += ai * brow[j];
    }
  }
  return out;
}

/// a * b^T without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + a.shape() + " by transpose of " + b.shape());
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("subtract: shapes " + a.shape() + " and " + b.shape() + " differ");
  }
  Matrix out = a;
  auto ov = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= bv[i];
  return out;
}

inline double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

inline double squared_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("squared_distance: shapes " + a.shape() + " and " + b.shape() + " differ");
  }
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  return s;
}

/// Rows selected by index, in the order given.
inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= m.rows()) throw IndexError("select_rows: row " + std::to_string(idx[i]) + " out of range");
    std::copy_n(m.row(idx[i]).begin(), m.cols(), out.row(i).begin());
  }
  return out;
}

inline Matrix select_cols(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(m.rows(), idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] >= m.cols()) throw IndexError("select_cols: column " + std::to_string(idx[j]) + " out of range");
    for (std::size_t r = 0; r < m.rows(); ++r) out(r, j) = m(r, idx[j]);
  }
  return out;
}

/// Copy of `m` whose column `col` is Fisher-Yates shuffled with draws from `rng`.
inline Matrix permute_column(const Matrix& m, std::size_t col, RngStream& rng) {
  if (col >= m.cols()) {
    throw IndexError("permute_column: column " + std::to_string(col) + " out of range for " +
                     m.shape());
  }
  Matrix out = m;
  for (std::size_t i = m.rows(); i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.uniform_below(i + 1));
    std::swap(out(i, col), out(j, col));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Column statistics
// ---------------------------------------------------------------------------

struct ColumnStats {
  std::vector<double> means;
  std::vector<double> sds;
};

/// Per-column mean and sample standard deviation (divisor n-1), Welford update.
inline ColumnStats column_stats(const Matrix& m) {
  if (m.rows() < 2) {
    throw InsufficientDataError("column_stats: need at least 2 rows for a sample sd, got " +
                                std::to_string(m.rows()));
  }
  const std::size_t p = m.cols();
  std::vector<double> mean(p, 0.0), m2(p, 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double k = static_cast<double>(r + 1);
    auto row = m.row(r);
    for (std::size_t c = 0; c < p; ++c) {
      const double delta = row[c] - mean[c];
      mean[c] += delta / k;
      m2[c] += delta * (row[c] - mean[c]);
    }
  }
  ColumnStats out{std::move(mean), std::vector<double>(p)};
  const double denom = static_cast<double>(m.rows() - 1);
  for (std::size_t c = 0; c < p; ++c) out.sds[c] = std::sqrt(std::max(m2[c], 0.0) / denom);
  return out;
}

inline std::vector<double> column_means(const Matrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += row[c];
  }
  if (m.rows() > 0)
    for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

/// Below this a column is treated as constant and standardized to zero.
inline constexpr double kConstantSd = 1e-12;

inline Matrix standardize_columns(const Matrix& m, std::span<const double> means,
                                  std::span<const double> sds) {
  if (means.size() != m.cols() || sds.size() != m.cols()) {
    throw ShapeError("standardize_columns: " + std::to_string(means.size()) + " means and " +
                     std::to_string(sds.size()) + " sds for " + m.shape());
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto in = m.row(r);
    auto o = out.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c)
      o[c] = sds[c] < kConstantSd ? 0.0 : (in[c] - means[c]) / sds[c];
  }
  return out;
}

inline Matrix destandardize_columns(const Matrix& z, std::span<const double> means,
                                    std::span<const double> sds) {
  if (means.size() != z.cols() || sds.size() != z.cols()) {
    throw ShapeError("destandardize_columns: " + std::to_string(means.size()) + " means and " +
                     std::to_string(sds.size()) + " sds for " + z.shape());
  }
  Matrix out(z.rows(), z.cols());
  for (std::size_t r = 0; r < z.rows(); ++r)
    for (std::size_t c = 0; c < z.cols(); ++c)
      out(r, c) = sds[c] < kConstantSd ? means[c] : z(r, c) * sds[c] + means[c];
  return out;
}

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

/// Lower-triangular L with L L^T = s.
inline Matrix cholesky(const Matrix& s) {
  if (s.rows() != s.cols()) throw ShapeError("cholesky: matrix " + s.shape() + " is not square");
  const std::size_t n = s.rows();
  double scale = 1.0;
  for (double v : s.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-10 * scale) {
        throw DomainError("cholesky: matrix is not symmetric at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) {
      throw DefinitenessError("cholesky: matrix is not positive definite (pivot " +
                                  std::to_string(j) + " is " + std::to_string(d) + ")",
                              j);
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = s(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

/// Solves L X = B for lower-triangular L.
inline Matrix solve_lower(const Matrix& l, const Matrix& b) {
  if (l.rows() != l.cols() || l.rows() != b.rows()) {
    throw ShapeError("solve_lower: " + l.shape() + " vs " + b.shape());
  }
  Matrix x = b;
  const std::size_t n = l.rows();
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = x(i, c);
      for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * x(k, c);
      x(i, c) = v / l(i, i);
    }
  }
  return x;
}

/// Solves L^T X = B for lower-triangular L.
inline Matrix solve_lower_transposed(const Matrix& l, const Matrix& b) {
  if (l.rows() != l.cols() || l.rows() != b.rows()) {
    throw ShapeError("solve_lower_transposed: " + l.shape() + " vs " + b.shape());
  }
  Matrix x = b;
  const std::size_t n = l.rows();
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = n; i-- > 0;) {
      double v = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) v -= l(k, i) * x(k, c);
      x(i, c) = v / l(i, i);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Thin SVD (one-sided Jacobi)
// ---------------------------------------------------------------------------

struct Svd {
  Matrix u;               // m x k, orthonormal columns
  std::vector<double> s;  // k values, nonincreasing
  Matrix v;               // n x k, orthonormal columns
};

struct SvdOptions {
  double tolerance = 1e-10;
  int max_sweeps = 100;
};

namespace detail {

// Hestenes one-sided Jacobi for rows >= cols.
inline Svd jacobi_svd_tall(const Matrix& a, const SvdOptions& opt) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  // Column-major working copies so rotations touch contiguous memory.
  std::vector<std::vector<double>> u(n, std::vector<double>(m));
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) u[j][i] = a(i, j);
    v[j][j] = 1.0;
  }

  double residual = 0.0;
  bool converged = n < 2;
  for (int sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
    residual = 0.0;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += u[p][i] * u[p][i];
          beta += u[q][i] * u[q][i];
          gamma += u[p][i] * u[q][i];
        }
        if (gamma == 0.0) continue;
        const double off = std::abs(gamma) / std::sqrt(alpha * beta);
        if (!std::isfinite(off)) continue;
        residual = std::max(residual, off);
        if (off <= opt.tolerance) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double up = u[p][i], uq = u[q][i];
          u[p][i] = c * up - s * uq;
          u[q][i] = s * up + c * uq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i], vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    if (!rotated) converged = true;
  }
  if (!converged) {
    throw ConvergenceError("svd_thin: no convergence after " + std::to_string(opt.max_sweeps) +
                               " sweeps (residual " + std::to_string(residual) + ")",
                           residual);
  }

  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (double x : u[j]) s += x * x;
    sv[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });

  Svd out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
  double smax = n > 0 ? sv[order[0]] : 0.0;
  const double rank_tol = std::max(smax, 1.0) * 1e-14 * static_cast<double>(std::max(m, n));
  std::vector<bool> filled(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.s[k] = sv[j];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = v[j][i];
    if (sv[j] > rank_tol) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = u[j][i] / sv[j];
      filled[k] = true;
    } else {
      out.s[k] = sv[j] > 0.0 ? sv[j] : 0.0;
    }
  }

  // Complete U with orthonormal columns where the singular value vanished.
  std::size_t basis = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (filled[k]) continue;
    for (; basis < m; ++basis) {
      std::vector<double> cand(m, 0.0);
      cand[basis] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < n; ++c) {
          if (!filled[c]) continue;
          double dot = 0.0;
          for (std::size_t i = 0; i < m; ++i) dot += out.u(i, c) * cand[i];
          for (std::size_t i = 0; i < m; ++i) cand[i] -= dot * out.u(i, c);
        }
      }
      double norm = 0.0;
      for (double x : cand) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 0.5) {
        for (std::size_t i = 0; i < m; ++i) out.u(i, k) = cand[i] / norm;
        filled[k] = true;
        ++basis;
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Thin SVD m = U diag(s) V^T with k = min(rows, cols).
inline Svd svd_thin(const Matrix& m, const SvdOptions& opt = {}) {
  if (!m.all_finite()) throw DataError("svd_thin: matrix has non-finite entries");
  if (m.rows() >= m.cols()) return detail::jacobi_svd_tall(m, opt);
  Svd t = detail::jacobi_svd_tall(transpose(m), opt);
  return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
}

}  // namespace aime
