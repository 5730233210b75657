#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aime/errors.hpp"
#include "aime/file_util.hpp"
#include "aime/neural_net.hpp"

namespace aime {

/// Every tunable of the CLI pipeline. Serialized as flat `key=value` lines.
struct RunConfig {
  // file paths
  std::string input;
  std::string output;
  std::string x;
  std::string y;
  std::string model;
  std::string model_out;
  std::string loss_out;
  std::string out;
  std::string out_prefix;
  std::string embedding;
  std::string labels;
  std::string delimiter = "tab";
  std::string orientation = "samples_in_rows";

  // filter
  std::optional<double> threshold;  // unset: 0.05 for CV, 1.25 for SD

  // training
  std::uint64_t dim = 4;
  std::uint64_t epochs = 200;
  std::uint64_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;

  // importance
  std::uint64_t repeats = 10;
  double fraction = 0.01;

  // cca
  std::uint64_t k = 4;
  std::optional<double> ridge;  // unset: 1e-3 * trace(S) / dim per block

  // synth
  std::uint64_t n = 600;
  std::uint64_t p = 40;
  std::uint64_t q = 40;
  std::uint64_t n_signal = 10;
  double noise_sd = 0.3;
  std::string design = "quadratic";

  TrainConfig train_config() const {
    TrainConfig c;
    c.learning_rate = learning_rate;
    c.beta1 = beta1;
    c.beta2 = beta2;
    c.epsilon = epsilon;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.seed = seed;
    return c;
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

using ConfigMember = std::variant<std::string RunConfig::*, double RunConfig::*, std::uint64_t RunConfig::*,
                                  std::optional<double> RunConfig::*>;

struct ConfigField {
  std::string_view key;
  ConfigMember member;
  std::string_view help;
};

/// Field table in serialization order.
inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
      {"input", &RunConfig::input, "input matrix file"},
      {"output", &RunConfig::output, "output matrix file"},
      {"x", &RunConfig::x, "input-modality matrix (encoder side)"},
      {"y", &RunConfig::y, "output-modality matrix (decoder side)"},
      {"model", &RunConfig::model, "trained model file"},
      {"model_out", &RunConfig::model_out, "where to write the trained model"},
      {"loss_out", &RunConfig::loss_out, "per-epoch loss file (default: <model_out>.loss.tsv)"},
      {"out", &RunConfig::out, "output file"},
      {"out_prefix", &RunConfig::out_prefix, "prefix for output files"},
      {"embedding", &RunConfig::embedding, "embedding matrix file"},
      {"labels", &RunConfig::labels, "sample label file (sample_id<TAB>label)"},
      {"delimiter", &RunConfig::delimiter, "field delimiter: tab or comma"},
      {"orientation", &RunConfig::orientation, "samples_in_rows or features_in_rows"},
      {"threshold", &RunConfig::threshold, "filter threshold (auto: 0.05 for --cv, 1.25 for --sd)"},
      {"dim", &RunConfig::dim, "bottleneck width d"},
      {"epochs", &RunConfig::epochs, "training epochs"},
      {"batch_size", &RunConfig::batch_size, "minibatch size"},
      {"learning_rate", &RunConfig::learning_rate, "Adam learning rate"},
      {"beta1", &RunConfig::beta1, "Adam first-moment decay"},
      {"beta2", &RunConfig::beta2, "Adam second-moment decay"},
      {"epsilon", &RunConfig::epsilon, "Adam epsilon"},
      {"seed", &RunConfig::seed, "random seed"},
      {"repeats", &RunConfig::repeats, "permutations per variable"},
      {"fraction", &RunConfig::fraction, "fraction of top variables to list"},
      {"k", &RunConfig::k, "number of canonical components"},
      {"ridge", &RunConfig::ridge, "CCA ridge (auto: 1e-3*trace(S)/dim per block)"},
      {"n", &RunConfig::n, "synthetic sample count"},
      {"p", &RunConfig::p, "synthetic X feature count"},
      {"q", &RunConfig::q, "synthetic Y feature count"},
      {"n_signal", &RunConfig::n_signal, "synthetic X features carrying signal"},
      {"noise_sd", &RunConfig::noise_sd, "synthetic noise standard deviation"},
      {"design", &RunConfig::design, "synthetic design: linear or quadratic"},
  };
  return fields;
}

inline const ConfigField* find_config_field(std::string_view key) {
  for (const auto& f : config_fields())
    if (f.key == key) return &f;
  return nullptr;
}

namespace detail {

inline double parse_config_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ValidationError("config: '" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
  }
  return v;
}

inline std::uint64_t parse_config_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("config: '" + std::string(key) + "' expects a nonnegative integer, got '" +
                          std::string(text) + "'");
  }
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline void set_config_value(RunConfig& cfg, const ConfigField& field, std::string_view value) {
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          cfg.*member = std::string(value);
        } else if constexpr (std::is_same_v<T, double>) {
          cfg.*member = detail::parse_config_double(field.key, value);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          cfg.*member = detail::parse_config_uint(field.key, value);
        } else {
          if (value == "auto" || value.empty()) {
            cfg.*member = std::nullopt;
          } else {
            cfg.*member = detail::parse_config_double(field.key, value);
          }
        }
      },
      field.member);
}

inline std::string get_config_value(const RunConfig& cfg, const ConfigField& field) {
  return std::visit(
      [&](auto member) -> std::string {
        const auto& v = cfg.*member;
        using T = std::remove_cvref_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          return std::to_string(v);
        } else {
          return v ? format_double(*v) : std::string("auto");
        }
      },
      field.member);
}

/// Raw `key=value` pairs. Blank lines and `#` comments are skipped; keys must
/// be known and appear once.
inline std::map<std::string, std::string> parse_config_pairs(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = detail::trim(text.substr(start, pos - start));
    start = pos + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (find_config_field(key) == nullptr) {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    if (!out.emplace(std::string(key), std::string(value)).second) {
      throw ValidationError("config line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
    }
  }
  return out;
}

inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  for (const auto& [key, value] : parse_config_pairs(text)) set_config_value(base, *find_config_field(key), value);
  return base;
}

inline std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : config_fields()) {
    out += f.key;
    out += '=';
    out += get_config_value(cfg, f);
    out += '\n';
  }
  return out;
}

}  // namespace aime
