#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "aime/data_io.hpp"
#include "aime/errors.hpp"
#include "aime/matrix.hpp"
#include "aime/rng.hpp"

namespace aime {

enum class SynthDesign { linear, quadratic };

inline const char* to_string(SynthDesign d) noexcept {
  return d == SynthDesign::linear ? "linear" : "quadratic";
}

inline SynthDesign parse_design(std::string_view s) {
  if (s == "linear") return SynthDesign::linear;
  if (s == "quadratic") return SynthDesign::quadratic;
  throw ValidationError("unknown design '" + std::string(s) + "' (expected linear or quadratic)");
}

struct SynthSpec {
  std::size_t n = 600;
  std::size_t p = 40;
  std::size_t q = 40;
  std::size_t n_signal = 10;
  std::size_t latent_dim = 2;
  double noise_sd = 0.3;
  SynthDesign design = SynthDesign::quadratic;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 10) throw DomainError("synth: n must be >= 10");
    if (p < 1 || q < 1) throw DomainError("synth: p and q must be >= 1");
    if (n_signal > p) throw DomainError("synth: n_signal must not exceed p");
    if (latent_dim != 2) throw DomainError("synth: latent_dim is fixed at 2");
    if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) throw DomainError("synth: noise_sd must be > 0");
  }
};

struct SynthData {
  LabeledMatrix x;
  LabeledMatrix y;
  Matrix latent;                            // n x 2
  std::vector<int> labels;                  // quadrant of the latent point, 0..3
  std::vector<std::size_t> signal_indices;  // ascending

  friend bool operator==(const SynthData&, const SynthData&) = default;
};

/// Quadrant numbering: 0 (+,+), 1 (-,+), 2 (-,-), 3 (+,-).
inline int quadrant(double z1, double z2) noexcept {
  if (z1 >= 0.0) return z2 >= 0.0 ? 0 : 3;
  return z2 >= 0.0 ? 1 : 2;
}

namespace detail {

// Stream ids used by generate().
enum SynthStream : std::uint64_t {
  kLatent = 1,
  kSignalChoice = 2,
  kXLoadings = 3,
  kYLoadings = 4,
  kXNoise = 5,
  kYNoise = 6,
};

inline std::string padded_id(char prefix, std::size_t i, std::size_t count) {
  const auto width = std::to_string(count).size();
  std::string num = std::to_string(i + 1);
  return std::string(1, prefix) + std::string(width - num.size(), '0') + num;
}

inline std::vector<double> unit_vector(RngStream& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& e : v) {
      e = rng.normal();
      norm += e * e;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (double& e : v) e /= norm;
  return v;
}

}  // namespace detail

/// Paired data driven by a 2-d standard normal latent z.
///
/// Signal X features: x = u z1 + v z2 + e with (u, v) a random unit vector;
/// other X features are e alone. Linear Y: y = a z1 + b z2 + e with (a, b) a
/// random unit vector. Quadratic Y: y = a (z1^2 - 1) + b (z2^2 - 1) + c z1 z2 + e
/// with (a, b, c) a random unit vector, so Cov(x, y) = 0 exactly in the
/// population. e ~ N(0, noise_sd^2) throughout.
inline SynthData generate(const SynthSpec& spec) {
  spec.validate();
  using namespace detail;
  const std::size_t n = spec.n, p = spec.p, q = spec.q;

  SynthData data;
  data.latent = Matrix(n, 2);
  RngStream zr(spec.seed, kLatent);
  for (double& v : data.latent.values()) v = zr.normal();
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) data.labels[i] = quadrant(data.latent(i, 0), data.latent(i, 1));

  // Partial Fisher-Yates picks the signal features.
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), std::size_t{0});
  RngStream pick(spec.seed, kSignalChoice);
  for (std::size_t i = 0; i < spec.n_signal; ++i) {
    const auto j = i + static_cast<std::size_t>(pick.uniform_below(p - i));
    std::swap(all[i], all[j]);
  }
  data.signal_indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.n_signal));
  std::sort(data.signal_indices.begin(), data.signal_indices.end());

  Matrix xload(p, 2);  // zero rows for noise features
  RngStream xl(spec.seed, kXLoadings);
  for (auto j : data.signal_indices) {
    const auto uv = unit_vector(xl, 2);
    xload(j, 0) = uv[0];
    xload(j, 1) = uv[1];
  }
  const std::size_t yterms = spec.design == SynthDesign::linear ? 2 : 3;
  Matrix yload(q, yterms);
  RngStream yl(spec.seed, kYLoadings);
  for (std::size_t j = 0; j < q; ++j) {
    const auto c = unit_vector(yl, yterms);
    for (std::size_t t = 0; t < yterms; ++t) yload(j, t) = c[t];
  }

  Matrix x(n, p), y(n, q);
  RngStream xn(spec.seed, kXNoise), yn(spec.seed, kYNoise);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = data.latent(i, 0), z2 = data.latent(i, 1);
    for (std::size_t j = 0; j < p; ++j) x(i, j) = xload(j, 0) * z1 + xload(j, 1) * z2 + spec.noise_sd * xn.normal();
    for (std::size_t j = 0; j < q; ++j) {
      double v = 0.0;
      if (spec.design == SynthDesign::linear) {
        v = yload(j, 0) * z1 + yload(j, 1) * z2;
      } else {
        v = yload(j, 0) * (z1 * z1 - 1.0) + yload(j, 1) * (z2 * z2 - 1.0) + yload(j, 2) * z1 * z2;
      }
      y(i, j) = v + spec.noise_sd * yn.normal();
    }
  }

  std::vector<std::string> sample_ids(n), x_ids(p), y_ids(q);
  for (std::size_t i = 0; i < n; ++i) sample_ids[i] = padded_id('s', i, n);
  for (std::size_t j = 0; j < p; ++j) x_ids[j] = padded_id('x', j, p);
  for (std::size_t j = 0; j < q; ++j) y_ids[j] = padded_id('y', j, q);
  data.x = LabeledMatrix{std::move(x), sample_ids, std::move(x_ids)};
  data.y = LabeledMatrix{std::move(y), std::move(sample_ids), std::move(y_ids)};
  return data;
}

// ---------------------------------------------------------------------------
// Sidecar: "# signal_indices: i,j,..." then "sample_id<TAB>label" rows.
// ---------------------------------------------------------------------------

inline std::string format_sidecar(const SynthData& data) {
  std::string out = "# signal_indices:";
  for (std::size_t k = 0; k < data.signal_indices.size(); ++k) {
    out += k == 0 ? " " : ",";
    out += std::to_string(data.signal_indices[k]);
  }
  out += "\nsample_id\tlabel\n";
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    out += data.x.sample_ids[i] + "\t" + std::to_string(data.labels[i]) + "\n";
  return out;
}

struct SampleLabels {
  std::vector<std::string> sample_ids;
  std::vector<std::string> labels;
};

/// Reads `sample_id<TAB>label` rows; `#` lines and the header are skipped.
inline SampleLabels parse_labels(std::string_view text) {
  SampleLabels out;
  bool header_seen = false;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    start = pos + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) tab = line.find(',');
    if (tab == std::string_view::npos) {
      throw ParseError("labels line " + std::to_string(line_no) + ": expected sample_id and label");
    }
    if (!header_seen) {
      header_seen = true;
      if (line.substr(0, tab) == "sample_id") continue;
    }
    out.sample_ids.emplace_back(line.substr(0, tab));
    out.labels.emplace_back(line.substr(tab + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Embedding evaluation
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFoldStream = 0xF01D;

/// 5-fold cross-validated accuracy of a nearest-centroid classifier on the
/// column-standardized embedding. Folds: indices shuffled by
/// RngStream(seed, kFoldStream), sample at shuffled position i goes to fold
/// i % folds. Ties go to the smallest class label.
inline double evaluate_embedding(const Matrix& embedding, const std::vector<int>& labels,
                                 std::uint64_t seed = 0, std::size_t folds = 5) {
  const std::size_t n = embedding.rows();
  if (embedding.cols() < 1) throw DomainError("evaluate_embedding: embedding needs >= 1 column");
  if (labels.size() != n) {
    throw ShapeError("evaluate_embedding: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  if (folds < 2 || n < folds) throw DomainError("evaluate_embedding: need at least as many rows as folds");
  std::vector<int> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw DomainError("evaluate_embedding: need at least 2 classes");

  const auto stats = column_stats(embedding);
  const Matrix z = standardize_columns(embedding, stats.means, stats.sds);
  const std::size_t d = z.cols();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream rng(seed, kFoldStream);
  for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng.uniform_below(i + 1)]);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % folds;

  std::size_t correct = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::vector<double>> centroid(classes.size(), std::vector<double>(d, 0.0));
    std::vector<std::size_t> count(classes.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] == f) continue;
      const auto c = static_cast<std::size_t>(
          std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
      ++count[c];
      for (std::size_t k = 0; k < d; ++k) centroid[c][k] += z(i, k);
    }
    for (std::size_t c = 0; c < classes.size(); ++c)
      if (count[c] > 0)
        for (double& v : centroid[c]) v /= static_cast<double>(count[c]);

    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != f) continue;
      double best = INFINITY;
      int best_label = classes.front();
      for (std::size_t c = 0; c < classes.size(); ++c) {
        if (count[c] == 0) continue;
        double dist = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = z(i, k) - centroid[c][k];
          dist += diff * diff;
        }
        if (dist < best) {
          best = dist;
          best_label = classes[c];
        }
      }
      if (best_label == labels[i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace aime
