#include <gtest/gtest.h>

#include <cmath>

#include "aime/cca.hpp"
#include "aime/synth.hpp"
#include "test_util.hpp"

using namespace aime;
using aime::test::random_matrix;

namespace {

SynthSpec spec_with(SynthDesign design, std::size_t n, std::uint64_t seed) {
  SynthSpec s;
  s.design = design;
  s.n = n;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Generate, Deterministic) {
  const auto s = spec_with(SynthDesign::quadratic, 100, 3);
  EXPECT_EQ(generate(s), generate(s));
  auto other = s;
  other.seed = 4;
  EXPECT_NE(generate(s).x.matrix, generate(other).x.matrix);
}

TEST(Generate, ShapesIdsAndLabels) {
  SynthSpec s = spec_with(SynthDesign::linear, 120, 2);
  s.p = 12;
  s.q = 7;
  s.n_signal = 5;
  const auto d = generate(s);
  EXPECT_EQ(d.x.matrix.rows(), 120u);
  EXPECT_EQ(d.x.matrix.cols(), 12u);
  EXPECT_EQ(d.y.matrix.cols(), 7u);
  EXPECT_EQ(d.x.sample_ids.front(), "s001");
  EXPECT_EQ(d.x.feature_ids.back(), "x12");
  EXPECT_EQ(d.y.feature_ids.front(), "y1");
  EXPECT_EQ(d.x.sample_ids, d.y.sample_ids);
  ASSERT_EQ(d.signal_indices.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_LT(d.signal_indices[k], 12u);
    if (k > 0) {
      EXPECT_LT(d.signal_indices[k - 1], d.signal_indices[k]);
    }
  }
  for (std::size_t i = 0; i < 120; ++i)
    EXPECT_EQ(d.labels[i], quadrant(d.latent(i, 0), d.latent(i, 1)));
}

TEST(Generate, QuadrantNumbering) {
  EXPECT_EQ(quadrant(1, 1), 0);
  EXPECT_EQ(quadrant(-1, 1), 1);
  EXPECT_EQ(quadrant(-1, -1), 2);
  EXPECT_EQ(quadrant(1, -1), 3);
}

TEST(Generate, QuadraticCrossCovarianceConcentrates) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthSpec s = spec_with(SynthDesign::quadratic, 1000, seed);
    s.p = 4;
    s.q = 4;
    s.n_signal = 4;
    const auto d = generate(s);
    const auto& x = d.x.matrix;
    const auto& y = d.y.matrix;
    const auto xm = column_means(x), ym = column_means(y);
    const double n = static_cast<double>(x.rows());
    double worst = 0.0;
    for (std::size_t a = 0; a < x.cols(); ++a)
      for (std::size_t b = 0; b < y.cols(); ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) s += (x(i, a) - xm[a]) * (y(i, b) - ym[b]);
        worst = std::max(worst, std::abs(s / (n - 1.0)));
      }
    EXPECT_LT(worst, 4.0 / std::sqrt(n)) << "seed " << seed;
  }
}

TEST(Generate, NoiselessLinearDesignIsPerfectlyCorrelated) {
  SynthSpec s = spec_with(SynthDesign::linear, 1000, 1);
  s.noise_sd = 1e-6;
  const auto d = generate(s);
  const auto res = fit_cca(d.x.matrix, d.y.matrix, 2);
  EXPECT_NEAR(res.correlations[0], 1.0, 0.02);
}

TEST(Generate, SpecViolations) {
  SynthSpec s;
  s.n_signal = 41;
  EXPECT_THROW(generate(s), DomainError);
  s = SynthSpec{};
  s.n = 9;
  EXPECT_THROW(generate(s), DomainError);
  s = SynthSpec{};
  s.noise_sd = 0.0;
  EXPECT_THROW(generate(s), DomainError);
  s = SynthSpec{};
  s.latent_dim = 3;
  EXPECT_THROW(generate(s), DomainError);
  EXPECT_THROW(parse_design("cubic"), ValidationError);
}

TEST(Sidecar, FormatAndParse) {
  SynthSpec s = spec_with(SynthDesign::linear, 10, 5);
  s.p = 6;
  s.n_signal = 2;
  const auto d = generate(s);
  const std::string text = format_sidecar(d);
  EXPECT_EQ(text.rfind("# signal_indices: " + std::to_string(d.signal_indices[0]) + "," +
                           std::to_string(d.signal_indices[1]) + "\nsample_id\tlabel\n",
                       0),
            0u);
  const auto parsed = parse_labels(text);
  ASSERT_EQ(parsed.sample_ids.size(), 10u);
  EXPECT_EQ(parsed.sample_ids[0], "s01");
  EXPECT_EQ(parsed.labels[3], std::to_string(d.labels[3]));
  EXPECT_THROW(parse_labels("sample_id\tlabel\nlonely\n"), ParseError);
}

// --- evaluate_embedding -----------------------------------------------------

TEST(EvaluateEmbedding, OneHotIsPerfect) {
  const std::size_t n = 200;
  Matrix e(n, 4);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 4);
    e(i, i % 4) = 1.0;
  }
  EXPECT_EQ(evaluate_embedding(e, labels), 1.0);
}

TEST(EvaluateEmbedding, NoiseIsNearChance) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Matrix e = random_matrix(400, 4, seed);
    std::vector<int> labels(400);
    for (std::size_t i = 0; i < 400; ++i) labels[i] = static_cast<int>(i % 4);
    EXPECT_LT(evaluate_embedding(e, labels, seed), 0.35);
  }
}

TEST(EvaluateEmbedding, DuplicatedColumnsDoNotChangeAccuracy) {
  const Matrix e = random_matrix(150, 1, 7);
  std::vector<int> labels(150);
  for (std::size_t i = 0; i < 150; ++i) labels[i] = e(i, 0) + 0.3 * std::sin(static_cast<double>(i)) > 0 ? 1 : 0;
  Matrix dup(150, 2);
  for (std::size_t i = 0; i < 150; ++i) dup(i, 0) = dup(i, 1) = e(i, 0);
  EXPECT_EQ(evaluate_embedding(e, labels, 3), evaluate_embedding(dup, labels, 3));
}

TEST(EvaluateEmbedding, RecoversLatentQuadrants) {
  const auto d = generate(spec_with(SynthDesign::linear, 400, 2));
  EXPECT_GT(evaluate_embedding(d.latent, d.labels), 0.9);
}

TEST(EvaluateEmbedding, Errors) {
  const Matrix e = random_matrix(20, 2, 1);
  EXPECT_THROW(evaluate_embedding(e, std::vector<int>(20, 1)), DomainError);
  EXPECT_THROW(evaluate_embedding(e, std::vector<int>(19, 1)), ShapeError);
  EXPECT_THROW(evaluate_embedding(Matrix(20, 0), std::vector<int>(20, 1)), DomainError);
}
