#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "aime/aime_model.hpp"
#include "aime/errors.hpp"
#include "aime/file_util.hpp"
#include "aime/matrix.hpp"
#include "aime/rng.hpp"

namespace aime {

struct ImportanceReport {
  std::vector<double> scores;        // one per input variable, >= 0
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> ranking;  // descending score, ties by ascending index

  friend bool operator==(const ImportanceReport&, const ImportanceReport&) = default;
};

/// Stream used for repeat r of variable j. Independent of evaluation order.
inline RngStream importance_stream(std::uint64_t seed, std::size_t variable, std::size_t repeat) {
  return RngStream(seed, (static_cast<std::uint64_t>(variable) << 32) + repeat);
}

inline std::vector<std::size_t> rank_descending(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

/// Mean squared embedding shift caused by permuting one input column.
inline double variable_importance(const TrainedModel& model, const Matrix& x, const Matrix& baseline,
                                  std::size_t variable, std::size_t repeats, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t r = 0; r < repeats; ++r) {
    RngStream rng = importance_stream(seed, variable, r);
    const Matrix permuted = permute_column(x, variable, rng);
    total += squared_distance(embed(model, permuted), baseline);
  }
  return total / static_cast<double>(repeats);
}

/// score_j = mean over repeats of ||embed(X with column j permuted) - embed(X)||_F^2.
///
/// `schedule` optionally fixes the order variables are visited in; scores
/// do not depend on it.
inline ImportanceReport permutation_importance(const TrainedModel& model, const Matrix& x,
                                               std::size_t repeats, std::uint64_t seed,
                                               std::span<const std::size_t> schedule = {}) {
  if (x.cols() != model.architecture.p) {
    throw ShapeError("permutation_importance: input has " + std::to_string(x.cols()) +
                     " features, model expects " + std::to_string(model.architecture.p));
  }
  if (repeats < 1) throw DomainError("permutation_importance: repeats must be >= 1");
  const std::size_t p = x.cols();
  std::vector<std::size_t> order;
  if (schedule.empty()) {
    order.resize(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
  } else {
    order.assign(schedule.begin(), schedule.end());
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < sorted.size(); ++j)
      if (sorted[j] != j || sorted.size() != p) {
        throw DomainError("permutation_importance: schedule must be a permutation of 0..p-1");
      }
  }

  const Matrix baseline = embed(model, x);
  ImportanceReport rep;
  rep.repeats = repeats;
  rep.seed = seed;
  rep.scores.assign(p, 0.0);
  for (std::size_t j : order) rep.scores[j] = variable_importance(model, x, baseline, j, repeats, seed);
  rep.ranking = rank_descending(rep.scores);
  return rep;
}

/// First ceil(fraction * p) variables of the ranking.
inline std::vector<std::size_t> top_fraction(const ImportanceReport& report, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DomainError("top_fraction: fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const auto p = report.ranking.size();
  // Absorb round-off such as 0.07 * 100 == 7.000000000000001.
  const double raw = fraction * static_cast<double>(p);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  k = std::min(k, p);
  return {report.ranking.begin(), report.ranking.begin() + static_cast<std::ptrdiff_t>(k)};
}

/// Delimited report: header `variable_id<d>score<d>rank`, rows in rank order,
/// ranks starting at 1. `ids` names the variables (indices when empty).
inline std::string format_importance(const ImportanceReport& report, const std::vector<std::string>& ids,
                                     char delimiter = '\t') {
  if (!ids.empty() && ids.size() != report.scores.size()) {
    throw ShapeError("format_importance: " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(report.scores.size()) + " scores");
  }
  std::string out = std::string("variable_id") + delimiter + "score" + delimiter + "rank\n";
  for (std::size_t r = 0; r < report.ranking.size(); ++r) {
    const auto j = report.ranking[r];
    out += ids.empty() ? std::to_string(j) : ids[j];
    out += delimiter;
    out += format_double(report.scores[j]);
    out += delimiter;
    out += std::to_string(r + 1);
    out += '\n';
  }
  return out;
}

}  // namespace aime
