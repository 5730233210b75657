#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "aime/errors.hpp"
#include "aime/file_util.hpp"
#include "aime/matrix.hpp"

namespace aime {

/// Samples-in-rows matrix with sample and feature identifiers.
struct LabeledMatrix {
  Matrix matrix;
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_ids;

  std::size_t samples() const noexcept { return matrix.rows(); }
  std::size_t features() const noexcept { return matrix.cols(); }

  void validate() const {
    if (sample_ids.size() != matrix.rows() || feature_ids.size() != matrix.cols()) {
      throw ValidationError("labeled matrix " + matrix.shape() + " has " +
                            std::to_string(sample_ids.size()) + " sample ids and " +
                            std::to_string(feature_ids.size()) + " feature ids");
    }
    check_unique(sample_ids, "sample");
    check_unique(feature_ids, "feature");
  }

  friend bool operator==(const LabeledMatrix&, const LabeledMatrix&) = default;

private:
  static void check_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids)
      if (!seen.insert(id).second) throw ValidationError(std::string("duplicate ") + what + " id '" + id + "'");
  }
};

enum class Orientation { samples_in_rows, features_in_rows };

/// Parses `tab`/`tsv`/`comma`/`csv` (or a literal single character).
inline char parse_delimiter(std::string_view name) {
  if (name == "tab" || name == "tsv" || name == "\t") return '\t';
  if (name == "comma" || name == "csv" || name == ",") return ',';
  throw ValidationError("unknown delimiter '" + std::string(name) + "' (expected tab or comma)");
}

inline Orientation parse_orientation(std::string_view name) {
  if (name == "samples_in_rows" || name == "samples") return Orientation::samples_in_rows;
  if (name == "features_in_rows" || name == "features") return Orientation::features_in_rows;
  throw ValidationError("unknown orientation '" + std::string(name) +
                        "' (expected samples_in_rows or features_in_rows)");
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Strict: the whole cell must be a finite decimal number.
inline bool parse_number(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace detail

/// Parses delimited text: first row holds column ids (its first cell is a
/// corner label and is ignored), first column holds row ids. Accepts LF and
/// CRLF line endings.
inline LabeledMatrix parse_labeled(std::string_view text, char delimiter,
                                   Orientation orientation = Orientation::samples_in_rows) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = pos + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("empty input: expected a header row");

  const auto header = detail::split(lines[0], delimiter);
  const std::size_t ncols = header.size() - 1;
  const std::size_t nrows = lines.size() - 1;
  std::vector<std::string> col_ids(header.begin() + 1, header.end());
  std::vector<std::string> row_ids;
  row_ids.reserve(nrows);
  Matrix body(nrows, ncols);
  for (std::size_t r = 0; r < nrows; ++r) {
    const auto cells = detail::split(lines[r + 1], delimiter);
    if (cells.size() != header.size()) {
      throw ParseError("line " + std::to_string(r + 2) + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(cells.size()));
    }
    row_ids.emplace_back(cells[0]);
    for (std::size_t c = 0; c < ncols; ++c) {
      double v = 0.0;
      if (!detail::parse_number(cells[c + 1], v)) {
        throw ParseError("line " + std::to_string(r + 2) + ", column " + std::to_string(c + 2) + " (row '" +
                         std::string(cells[0]) + "', column '" + col_ids[c] + "'): '" +
                         std::string(cells[c + 1]) + "' is not a finite number");
      }
      body(r, c) = v;
    }
  }

  LabeledMatrix out;
  if (orientation == Orientation::samples_in_rows) {
    out = LabeledMatrix{std::move(body), std::move(row_ids), std::move(col_ids)};
  } else {
    out = LabeledMatrix{transpose(body), std::move(col_ids), std::move(row_ids)};
  }
  out.validate();
  return out;
}

inline LabeledMatrix read_labeled(const std::string& path, char delimiter = '\t',
                                  Orientation orientation = Orientation::samples_in_rows) {
  return parse_labeled(read_file(path), delimiter, orientation);
}

/// Canonical text: shortest round-trippable decimals, LF line endings,
/// samples in rows.
inline std::string format_labeled(const LabeledMatrix& m, char delimiter = '\t',
                                  std::string_view corner = "sample_id") {
  m.validate();
  std::string out(corner);
  for (const auto& f : m.feature_ids) {
    out += delimiter;
    out += f;
  }
  out += '\n';
  for (std::size_t r = 0; r < m.samples(); ++r) {
    out += m.sample_ids[r];
    for (double v : m.matrix.row(r)) {
      out += delimiter;
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

inline void write_labeled(const LabeledMatrix& m, const std::string& path, char delimiter = '\t',
                          std::string_view corner = "sample_id") {
  write_file_atomic(path, format_labeled(m, delimiter, corner));
}

inline LabeledMatrix select_features(const LabeledMatrix& m, const std::vector<std::size_t>& keep) {
  LabeledMatrix out;
  out.matrix = select_cols(m.matrix, keep);
  out.sample_ids = m.sample_ids;
  for (auto j : keep) out.feature_ids.push_back(m.feature_ids[j]);
  return out;
}

inline LabeledMatrix select_samples(const LabeledMatrix& m, const std::vector<std::size_t>& keep) {
  LabeledMatrix out;
  out.matrix = select_rows(m.matrix, keep);
  out.feature_ids = m.feature_ids;
  for (auto i : keep) out.sample_ids.push_back(m.sample_ids[i]);
  return out;
}

/// Restricts both matrices to their shared samples, in `a`'s order.
inline std::pair<LabeledMatrix, LabeledMatrix> align_samples(const LabeledMatrix& a, const LabeledMatrix& b) {
  std::unordered_map<std::string_view, std::size_t> b_index;
  for (std::size_t i = 0; i < b.sample_ids.size(); ++i) b_index.emplace(b.sample_ids[i], i);
  std::vector<std::size_t> keep_a, keep_b;
  for (std::size_t i = 0; i < a.sample_ids.size(); ++i) {
    auto it = b_index.find(a.sample_ids[i]);
    if (it != b_index.end()) {
      keep_a.push_back(i);
      keep_b.push_back(it->second);
    }
  }
  if (keep_a.empty()) {
    auto examples = [](const std::vector<std::string>& ids) {
      std::string s;
      for (std::size_t i = 0; i < std::min<std::size_t>(3, ids.size()); ++i) s += (i ? ", " : "") + ids[i];
      return s.empty() ? std::string("<none>") : s;
    };
    throw AlignmentError("no shared sample ids (first: [" + examples(a.sample_ids) + "] vs [" +
                         examples(b.sample_ids) + "])");
  }
  return {select_samples(a, keep_a), select_samples(b, keep_b)};
}

struct FilterResult {
  LabeledMatrix matrix;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t dropped_zero_mean = 0;  // CV undefined; included in `dropped`
};

/// Below this |mean| the coefficient of variation is treated as undefined.
inline constexpr double kZeroMean = 1e-12;

/// Keeps features whose sd / |mean| exceeds `threshold`, in original order.
inline FilterResult cv_filter(const LabeledMatrix& m, double threshold) {
  const auto stats = column_stats(m.matrix);
  FilterResult res;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < m.features(); ++j) {
    if (std::abs(stats.means[j]) < kZeroMean) {
      ++res.dropped_zero_mean;
      continue;
    }
    if (stats.sds[j] / std::abs(stats.means[j]) > threshold) keep.push_back(j);
  }
  res.kept = keep.size();
  res.dropped = m.features() - keep.size();
  res.matrix = select_features(m, keep);
  return res;
}

/// Keeps features whose sample sd exceeds `threshold`, in original order.
inline FilterResult sd_filter(const LabeledMatrix& m, double threshold) {
  const auto stats = column_stats(m.matrix);
  FilterResult res;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < m.features(); ++j)
    if (stats.sds[j] > threshold) keep.push_back(j);
  res.kept = keep.size();
  res.dropped = m.features() - keep.size();
  res.matrix = select_features(m, keep);
  return res;
}

}  // namespace aime
