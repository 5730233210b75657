#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "aime/aime_model.hpp"
#include "aime/cca.hpp"
#include "aime/config.hpp"
#include "aime/data_io.hpp"
#include "aime/errors.hpp"
#include "aime/file_util.hpp"
#include "aime/importance.hpp"
#include "aime/svg_plot.hpp"
#include "aime/synth.hpp"

namespace aime::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

struct Binding {
  const ConfigField* field;
  CLI::Option* option;
};

inline std::string flag_name(std::string_view key) {
  std::string s = "--";
  for (char c : key) s += c == '_' ? '-' : c;
  return s;
}

class Command {
public:
  Command(CLI::App& parent, const std::string& name, const std::string& description, RunConfig& cfg)
      : cfg_(cfg) {
    app_ = parent.add_subcommand(name, description);
    app_->add_option("--config", config_path_, "key=value config file; command-line flags take precedence");
    app_->add_flag("--dump-config", dump_, "print the effective configuration and exit");
  }

  Command& bind(std::initializer_list<std::string_view> keys) {
    for (auto key : keys) {
      const ConfigField* f = find_config_field(key);
      CLI::Option* opt = std::visit(
          [&](auto member) -> CLI::Option* {
            auto* o = app_->add_option(flag_name(key), cfg_.*member, std::string(f->help));
            using T = std::remove_reference_t<decltype(cfg_.*member)>;
            if constexpr (std::is_same_v<T, std::optional<double>>) {
              o->default_str("auto");
            } else if constexpr (std::is_same_v<T, std::string>) {
              const auto& v = cfg_.*member;
              o->default_str(v.empty() ? std::string("\"\"") : v);
            } else {
              o->default_str(get_config_value(cfg_, *f));
            }
            return o;
          },
          f->member);
      bindings_.push_back({f, opt});
    }
    return *this;
  }

  CLI::App* app() { return app_; }
  bool parsed() const { return app_->parsed(); }
  bool dump() const { return dump_; }

  /// Fills options not given on the command line from the config file.
  void merge_config_file() {
    if (config_path_.empty()) return;
    const auto pairs = parse_config_pairs(read_file(config_path_));
    for (const auto& b : bindings_) {
      if (b.option->count() > 0) continue;
      auto it = pairs.find(std::string(b.field->key));
      if (it != pairs.end()) set_config_value(cfg_, *b.field, it->second);
    }
  }

  std::function<int(std::ostream&, std::ostream&)> run;

private:
  CLI::App* app_ = nullptr;
  RunConfig& cfg_;
  std::string config_path_;
  bool dump_ = false;
  std::vector<Binding> bindings_;
};

inline void require(const std::string& value, std::string_view key) {
  if (value.empty()) throw ValidationError("missing required option " + flag_name(key));
}

inline std::vector<std::string> numbered_ids(const std::string& prefix, std::size_t count) {
  std::vector<std::string> ids(count);
  for (std::size_t i = 0; i < count; ++i) ids[i] = prefix + std::to_string(i + 1);
  return ids;
}

/// Labels for `sample_ids`, looked up by id in a sidecar label file.
inline std::vector<std::string> labels_for(const std::vector<std::string>& sample_ids, const std::string& path) {
  const auto parsed = parse_labels(read_file(path));
  std::unordered_map<std::string, std::string> by_id;
  for (std::size_t i = 0; i < parsed.sample_ids.size(); ++i) by_id.emplace(parsed.sample_ids[i], parsed.labels[i]);
  std::vector<std::string> out;
  out.reserve(sample_ids.size());
  for (const auto& id : sample_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("no label for sample '" + id + "' in '" + path + "'");
    out.push_back(it->second);
  }
  return out;
}

inline std::vector<int> integer_classes(const std::vector<std::string>& labels) {
  std::vector<std::string> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels)
    out.push_back(static_cast<int>(std::lower_bound(classes.begin(), classes.end(), l) - classes.begin()));
  return out;
}

// --------------------------------------------------------------------------
// Commands
// --------------------------------------------------------------------------

inline int cmd_filter(const RunConfig& cfg, bool cv, bool sd, std::ostream& out, std::ostream& err) {
  require(cfg.input, "input");
  require(cfg.output, "output");
  if (cv == sd) throw ValidationError("choose exactly one of --cv or --sd");
  const char delim = parse_delimiter(cfg.delimiter);
  const auto m = read_labeled(cfg.input, delim, parse_orientation(cfg.orientation));
  const double threshold = cfg.threshold.value_or(cv ? 0.05 : 1.25);
  const auto res = cv ? cv_filter(m, threshold) : sd_filter(m, threshold);
  write_labeled(res.matrix, cfg.output, delim);
  out << (cv ? "cv" : "sd") << " filter > " << format_double(threshold) << ": kept " << res.kept << " of "
      << m.features() << " features, dropped " << res.dropped << "\n";
  if (res.dropped_zero_mean > 0) {
    err << "warning: " << res.dropped_zero_mean << " features dropped with near-zero mean (CV undefined)\n";
  }
  if (res.kept == 0) err << "warning: no features survived the filter\n";
  return kExitOk;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.x, "x");
  require(cfg.y, "y");
  require(cfg.model_out, "model_out");
  const char delim = parse_delimiter(cfg.delimiter);
  const auto orient = parse_orientation(cfg.orientation);
  auto [x, y] = align_samples(read_labeled(cfg.x, delim, orient), read_labeled(cfg.y, delim, orient));
  const auto model = fit(x.matrix, y.matrix, cfg.dim, cfg.train_config());
  save_model(model, cfg.model_out);

  std::string loss = "epoch\tmse\n";
  for (std::size_t e = 0; e < model.loss_history.size(); ++e)
    loss += std::to_string(e + 1) + "\t" + format_double(model.loss_history[e]) + "\n";
  write_file_atomic(cfg.loss_out.empty() ? cfg.model_out + ".loss.tsv" : cfg.loss_out, loss);

  out << "trained on " << x.samples() << " samples (p=" << x.features() << ", q=" << y.features()
      << ", d=" << cfg.dim << ")\n";
  if (!model.loss_history.empty()) out << "final loss: " << format_double(model.loss_history.back()) << "\n";
  return kExitOk;
}

inline int cmd_embed(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.model, "model");
  require(cfg.x, "x");
  require(cfg.out, "out");
  const char delim = parse_delimiter(cfg.delimiter);
  const auto model = load_model(cfg.model);
  const auto x = read_labeled(cfg.x, delim, parse_orientation(cfg.orientation));
  LabeledMatrix e{embed(model, x.matrix), x.sample_ids, numbered_ids("dim", model.architecture.d)};
  write_labeled(e, cfg.out, delim);
  out << "embedded " << x.samples() << " samples into " << model.architecture.d << " dimensions\n";
  return kExitOk;
}

inline int cmd_importance(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.model, "model");
  require(cfg.x, "x");
  require(cfg.out, "out");
  const char delim = parse_delimiter(cfg.delimiter);
  const auto model = load_model(cfg.model);
  const auto x = read_labeled(cfg.x, delim, parse_orientation(cfg.orientation));
  const auto report = permutation_importance(model, x.matrix, cfg.repeats, cfg.seed);
  const auto top = top_fraction(report, cfg.fraction);
  write_file_atomic(cfg.out, format_importance(report, x.feature_ids, delim));
  out << "top " << top.size() << " of " << x.features() << " variables (fraction " << format_double(cfg.fraction)
      << "):\n";
  for (auto j : top) out << x.feature_ids[j] << "\n";
  return kExitOk;
}

inline int cmd_cca(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.x, "x");
  require(cfg.y, "y");
  require(cfg.out_prefix, "out_prefix");
  const char delim = parse_delimiter(cfg.delimiter);
  const auto orient = parse_orientation(cfg.orientation);
  auto [x, y] = align_samples(read_labeled(cfg.x, delim, orient), read_labeled(cfg.y, delim, orient));
  const auto res = fit_cca(x.matrix, y.matrix, cfg.k, cfg.ridge);
  const auto comps = numbered_ids("cca", cfg.k);
  const std::string ext = delim == ',' ? ".csv" : ".tsv";
  write_labeled({res.x_variates, x.sample_ids, comps}, cfg.out_prefix + ".x_variates" + ext, delim);
  write_labeled({res.y_variates, y.sample_ids, comps}, cfg.out_prefix + ".y_variates" + ext, delim);
  write_labeled({res.x_directions, x.feature_ids, comps}, cfg.out_prefix + ".x_directions" + ext, delim, "feature_id");
  write_labeled({res.y_directions, y.feature_ids, comps}, cfg.out_prefix + ".y_directions" + ext, delim, "feature_id");
  std::string corr = std::string("component") + delim + "correlation\n";
  for (std::size_t j = 0; j < res.correlations.size(); ++j)
    corr += comps[j] + delim + format_double(res.correlations[j]) + "\n";
  write_file_atomic(cfg.out_prefix + ".correlations" + ext, corr);
  out << "canonical correlations:";
  for (double c : res.correlations) out << " " << format_double(c);
  out << "\nridge: x=" << format_double(res.ridge_x) << " y=" << format_double(res.ridge_y) << "\n";
  return kExitOk;
}

inline int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.out_prefix, "out_prefix");
  SynthSpec spec;
  spec.n = cfg.n;
  spec.p = cfg.p;
  spec.q = cfg.q;
  spec.n_signal = cfg.n_signal;
  spec.noise_sd = cfg.noise_sd;
  spec.design = parse_design(cfg.design);
  spec.seed = cfg.seed;
  const auto data = generate(spec);
  const char delim = parse_delimiter(cfg.delimiter);
  const std::string ext = delim == ',' ? ".csv" : ".tsv";
  write_labeled(data.x, cfg.out_prefix + ".x" + ext, delim);
  write_labeled(data.y, cfg.out_prefix + ".y" + ext, delim);
  write_file_atomic(cfg.out_prefix + ".labels.tsv", format_sidecar(data));
  out << "wrote " << to_string(spec.design) << " dataset: n=" << spec.n << " p=" << spec.p << " q=" << spec.q
      << " signal=" << spec.n_signal << "\n";
  return kExitOk;
}

inline int cmd_plot(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.embedding, "embedding");
  require(cfg.labels, "labels");
  require(cfg.out, "out");
  const auto e = read_labeled(cfg.embedding, parse_delimiter(cfg.delimiter));
  const auto labels = labels_for(e.sample_ids, cfg.labels);
  PlotOptions opt;
  opt.title = cfg.embedding;
  write_file_atomic(cfg.out, scatter_matrix_svg(e.matrix, labels, opt));
  out << "plotted " << e.samples() << " points in a " << e.features() << "x" << e.features() << " grid\n";
  return kExitOk;
}

inline int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  require(cfg.embedding, "embedding");
  require(cfg.labels, "labels");
  const auto e = read_labeled(cfg.embedding, parse_delimiter(cfg.delimiter));
  const auto labels = integer_classes(labels_for(e.sample_ids, cfg.labels));
  out << "nearest-centroid 5-fold accuracy: " << format_double(evaluate_embedding(e.matrix, labels, cfg.seed)) << "\n";
  return kExitOk;
}

}  // namespace detail

/// Entry point of the `aime` executable. Returns the process exit code:
/// 0 success, 2 usage/validation error, 3 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-modal autoencoder embedding of paired omics matrices", "aime"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunConfig cfg;
  bool cv = false, sd = false;
  std::vector<std::unique_ptr<detail::Command>> cmds;
  auto add = [&](const std::string& name, const std::string& desc) -> detail::Command& {
    cmds.push_back(std::make_unique<detail::Command>(app, name, desc, cfg));
    return *cmds.back();
  };

  auto& filter = add("filter", "keep features passing a coefficient-of-variation or standard-deviation filter")
                     .bind({"input", "output", "threshold", "delimiter", "orientation"});
  auto* cv_flag = filter.app()->add_flag("--cv", cv, "filter on sd/|mean| > threshold");
  filter.app()->add_flag("--sd", sd, "filter on sample sd > threshold")->excludes(cv_flag);
  filter.run = [&](std::ostream& o, std::ostream& e) { return detail::cmd_filter(cfg, cv, sd, o, e); };

  add("train", "fit the cross-modal autoencoder on paired X and Y")
      .bind({"x", "y", "dim", "epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "seed",
             "model_out", "loss_out", "delimiter", "orientation"})
      .run = [&](std::ostream& o, std::ostream& e) { return detail::cmd_train(cfg, o, e); };

  add("embed", "embed samples with a trained model")
      .bind({"model", "x", "out", "delimiter", "orientation"})
      .run = [&](std::ostream& o, std::ostream& e) { return detail::cmd_embed(cfg, o, e); };

  add("importance", "rank input variables by permutation-induced embedding shift")
      .bind({"model", "x", "out", "repeats", "fraction", "seed", "delimiter", "orientation"})
      .run = [&](std::ostream& o, std::ostream& e) { return detail::cmd_importance(cfg, o, e); };

  add("cca", "regularized canonical correlation analysis baseline")
      .bind({"x", "y", "k", "ridge", "out_prefix", "delimiter", "orientation"})
      .run = [&](std::ostream& o, std::ostream& e) { return detail::cmd_cca(cfg, o, e); };

  add("synth", "generate a paired synthetic dataset with planted latent structure")
      .bind({"n", "p", "q", "n_signal", "noise_sd", "design", "seed", "out_prefix", "delimiter"})
      .run = [&](std::ostream& o, std::ostream& e) { return detail::cmd_synth(cfg, o, e); };

  add("plot", "scatter-matrix SVG of an embedding coloured by sample label")
      .bind({"embedding", "labels", "out", "delimiter"})
      .run = [&](std::ostream& o, std::ostream& e) { return detail::cmd_plot(cfg, o, e); };

  add("evaluate", "cross-validated nearest-centroid accuracy of an embedding against labels")
      .bind({"embedding", "labels", "seed", "delimiter"})
      .run = [&](std::ostream& o, std::ostream& e) { return detail::cmd_evaluate(cfg, o, e); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  for (auto& cmd : cmds) {
    if (!cmd->parsed()) continue;
    try {
      cmd->merge_config_file();
      if (cmd->dump()) {
        out << format_config(cfg);
        return kExitOk;
      }
      return cmd->run(out, err);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return e.numerical() ? kExitNumerical : kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  return kExitUsage;
}

}  // namespace aime::cli
