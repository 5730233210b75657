#include <gtest/gtest.h>

#include <cmath>

#include "aime/cca.hpp"
#include "aime/synth.hpp"
#include "test_util.hpp"

using namespace aime;
using aime::test::random_matrix;

namespace {

double pearson(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.rows();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a(i, 0);
    mb += b(i, 0);
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a(i, 0) - ma) * (b(i, 0) - mb);
    saa += (a(i, 0) - ma) * (a(i, 0) - ma);
    sbb += (b(i, 0) - mb) * (b(i, 0) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

double sample_cov(const Matrix& m, std::size_t a, const Matrix& o, std::size_t b) {
  const std::size_t n = m.rows();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += m(i, a);
    mb += o(i, b);
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += (m(i, a) - ma) * (o(i, b) - mb);
  return s / static_cast<double>(n - 1);
}

}  // namespace

TEST(Cca, SingleColumnsGiveAbsolutePearson) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Matrix x = random_matrix(80, 1, seed, 1);
    Matrix y = random_matrix(80, 1, seed, 2);
    for (std::size_t i = 0; i < 80; ++i) y(i, 0) -= 0.6 * x(i, 0);
    const auto res = fit_cca(x, y, 1, 0.0);
    EXPECT_NEAR(res.correlations[0], std::abs(pearson(x, y)), 1e-10);
  }
}

TEST(Cca, SelfCorrelationIsOne) {
  const Matrix x = random_matrix(50, 4, 3);
  const auto res = fit_cca(x, x, 4, 0.0);
  for (double c : res.correlations) EXPECT_NEAR(c, 1.0, 1e-8);
}

TEST(Cca, IndependentNullStaysSmall) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto res = fit_cca(random_matrix(2000, 2, seed, 1), random_matrix(2000, 2, seed, 2), 2, 0.0);
    EXPECT_LT(res.correlations[0], 0.15) << "seed " << seed;
  }
}

TEST(Cca, SwappingBlocksKeepsCorrelations) {
  const Matrix x = random_matrix(120, 5, 4, 1);
  Matrix y = random_matrix(120, 3, 4, 2);
  for (std::size_t i = 0; i < 120; ++i) y(i, 0) += x(i, 1) - 0.5 * x(i, 3);
  const auto a = fit_cca(x, y, 3);
  const auto b = fit_cca(y, x, 3);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.correlations[j], b.correlations[j], 1e-8);
}

TEST(Cca, AffineInvarianceWithoutRidge) {
  const Matrix x = random_matrix(200, 3, 5, 1);
  Matrix y = random_matrix(200, 2, 5, 2);
  for (std::size_t i = 0; i < 200; ++i) y(i, 1) += 0.8 * x(i, 0) + 0.3 * x(i, 2);
  const Matrix mix{{2.0, 0.3, -1.0}, {0.5, 1.5, 0.2}, {-0.4, 0.1, 0.9}};
  Matrix xm = matmul(x, mix);
  for (std::size_t i = 0; i < 200; ++i) xm(i, 1) += 7.0;
  const auto a = fit_cca(x, y, 2, 0.0);
  const auto b = fit_cca(xm, y, 2, 0.0);
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a.correlations[j], b.correlations[j], 1e-6);
}

TEST(Cca, ResultInvariants) {
  const Matrix x = random_matrix(150, 6, 6, 1);
  Matrix y = random_matrix(150, 4, 6, 2);
  for (std::size_t i = 0; i < 150; ++i) y(i, 2) += x(i, 4);
  const auto res = fit_cca(x, y, 4);
  ASSERT_EQ(res.correlations.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_GE(res.correlations[j], 0.0);
    EXPECT_LE(res.correlations[j], 1.0 + 1e-10);
    if (j > 0) {
      EXPECT_LE(res.correlations[j], res.correlations[j - 1]);
    }
  }
  // Unit variance under the regularized metric: var(Xa) + ridge |a|^2 == 1.
  for (std::size_t j = 0; j < 4; ++j) {
    double norm_x = 0.0, norm_y = 0.0;
    for (std::size_t i = 0; i < 6; ++i) norm_x += res.x_directions(i, j) * res.x_directions(i, j);
    for (std::size_t i = 0; i < 4; ++i) norm_y += res.y_directions(i, j) * res.y_directions(i, j);
    EXPECT_NEAR(sample_cov(res.x_variates, j, res.x_variates, j) + res.ridge_x * norm_x, 1.0, 1e-6);
    EXPECT_NEAR(sample_cov(res.y_variates, j, res.y_variates, j) + res.ridge_y * norm_y, 1.0, 1e-6);
  }
  // Largest-magnitude X coefficient of every direction is positive.
  for (std::size_t j = 0; j < 4; ++j) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < 6; ++i)
      if (std::abs(res.x_directions(i, j)) > std::abs(res.x_directions(arg, j))) arg = i;
    EXPECT_GT(res.x_directions(arg, j), 0.0);
  }
}

TEST(Cca, VariateCorrelationsMatchWithoutRidge) {
  const Matrix x = random_matrix(300, 3, 7, 1);
  Matrix y = random_matrix(300, 3, 7, 2);
  for (std::size_t i = 0; i < 300; ++i) y(i, 0) += x(i, 0) + x(i, 2);
  const auto res = fit_cca(x, y, 3, 0.0);
  for (std::size_t j = 0; j < 3; ++j) {
    const double c = sample_cov(res.x_variates, j, res.y_variates, j);
    EXPECT_NEAR(c, res.correlations[j], 1e-8);
    for (std::size_t l = 0; l < 3; ++l)
      if (l != j) {
        EXPECT_NEAR(sample_cov(res.x_variates, j, res.x_variates, l), 0.0, 1e-8);
      }
  }
}

TEST(Cca, DefaultRidgeScalesWithTrace) {
  const Matrix x = random_matrix(60, 3, 8, 1), y = random_matrix(60, 2, 8, 2);
  const auto res = fit_cca(x, y, 2);
  double tr = 0.0;
  for (std::size_t j = 0; j < 3; ++j) tr += sample_cov(x, j, x, j);
  EXPECT_NEAR(res.ridge_x, 1e-3 * tr / 3.0, 1e-15);
  EXPECT_EQ(fit_cca(x, y, 2, 0.25).ridge_y, 0.25);
}

TEST(Cca, QuadraticDesignShowsNoLinearSignal) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthSpec s;
    s.n = 1000;
    s.p = 8;
    s.q = 8;
    s.n_signal = 4;
    s.seed = seed;
    const auto data = generate(s);
    const auto res = fit_cca(data.x.matrix, data.y.matrix, 4);
    EXPECT_LT(res.correlations[0], 0.25) << "seed " << seed;
  }
}

TEST(ProjectCca, TrainingDataReproducesVariates) {
  const Matrix x = random_matrix(40, 4, 9, 1), y = random_matrix(40, 3, 9, 2);
  const auto res = fit_cca(x, y, 3);
  EXPECT_LT(aime::test::max_abs_diff(project_cca(res, x), res.x_variates), 1e-10);
  EXPECT_LT(aime::test::max_abs_diff(project_cca_y(res, y), res.y_variates), 1e-10);
  Matrix at_mean(1, 4);
  for (std::size_t j = 0; j < 4; ++j) at_mean(0, j) = res.x_means[j];
  const Matrix zero_row = project_cca(res, at_mean);
  for (double v : zero_row.values()) EXPECT_EQ(v, 0.0);
}

TEST(ProjectCca, HandProduct) {
  CcaResult r;
  r.x_directions = Matrix{{1.0, 2.0}, {3.0, 4.0}};
  r.x_means = {1.0, 1.0};
  // centered (1, 2) -> (1*1 + 2*3, 1*2 + 2*4)
  EXPECT_EQ(project_cca(r, Matrix{{2.0, 3.0}}), (Matrix{{7.0, 10.0}}));
  EXPECT_THROW(project_cca(r, Matrix(1, 3)), ShapeError);
}

TEST(Cca, Errors) {
  const Matrix x = random_matrix(10, 3, 10, 1), y = random_matrix(10, 2, 10, 2);
  EXPECT_THROW(fit_cca(x, random_matrix(9, 2, 1), 1), ShapeError);
  EXPECT_THROW(fit_cca(random_matrix(2, 1, 1), random_matrix(2, 1, 2), 1), InsufficientDataError);
  EXPECT_THROW(fit_cca(x, y, 0), DomainError);
  EXPECT_THROW(fit_cca(x, y, 3), DomainError);
  EXPECT_THROW(fit_cca(x, y, 1, -1.0), DomainError);
  EXPECT_THROW(fit_cca(random_matrix(5, 6, 1), random_matrix(5, 2, 2), 1, 0.0), DefinitenessError);
  EXPECT_NO_THROW(fit_cca(random_matrix(5, 6, 1), random_matrix(5, 2, 2), 1));
  Matrix dup = x;
  for (std::size_t i = 0; i < 10; ++i) dup(i, 2) = dup(i, 0);
  try {
    fit_cca(dup, y, 1, 0.0);
    FAIL() << "expected DefinitenessError";
  } catch (const DefinitenessError& e) {
    EXPECT_NE(std::string(e.what()).find("ridge"), std::string::npos);
    EXPECT_TRUE(e.numerical());
  }
}
