#pragma once

#include <cmath>
#include <cstdint>

#include "aime/matrix.hpp"
#include "aime/rng.hpp"

namespace aime::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t stream = 0) {
  RngStream rng(seed, stream);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

inline double relative_frobenius(const Matrix& approx, const Matrix& exact) {
  const double denom = frobenius_norm(exact);
  const double num = frobenius_norm(subtract(approx, exact));
  return denom == 0.0 ? num : num / denom;
}

}  // namespace aime::test
