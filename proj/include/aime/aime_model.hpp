#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "aime/errors.hpp"
#include "aime/file_util.hpp"
#include "aime/matrix.hpp"
#include "aime/neural_net.hpp"
#include "aime/rng.hpp"

namespace aime {

/// Cross-modal autoencoder shape: p -> p/5 -> p/25 -> p/625 -> d -> q/625 ->
/// q/25 -> q/5 -> q, every division rounded up.
struct AimeArchitecture {
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t d = 0;
  std::array<std::size_t, 3> encoder_sizes{};
  std::array<double, 3> encoder_dropout{0.20, 0.10, 0.0};
  std::array<std::size_t, 3> decoder_sizes{};
  std::array<double, 3> decoder_dropout{0.0, 0.10, 0.20};

  /// Index of the bottleneck among the 8 dense layers.
  static constexpr std::size_t kBottleneckIndex = 3;

  /// Widths of every layer after the input, in order.
  std::vector<std::size_t> layer_chain() const {
    return {encoder_sizes[0], encoder_sizes[1], encoder_sizes[2], d,
            decoder_sizes[0], decoder_sizes[1], decoder_sizes[2], q};
  }

  /// ReLU hidden layers, linear bottleneck and output.
  std::vector<LayerPlan> layer_plan() const {
    return {
        {encoder_sizes[0], Activation::relu, encoder_dropout[0]},
        {encoder_sizes[1], Activation::relu, encoder_dropout[1]},
        {encoder_sizes[2], Activation::relu, encoder_dropout[2]},
        {d, Activation::linear, 0.0},
        {decoder_sizes[0], Activation::relu, decoder_dropout[0]},
        {decoder_sizes[1], Activation::relu, decoder_dropout[1]},
        {decoder_sizes[2], Activation::relu, decoder_dropout[2]},
        {q, Activation::linear, 0.0},
    };
  }

  friend bool operator==(const AimeArchitecture&, const AimeArchitecture&) = default;
};

inline constexpr std::size_t ceil_div(std::size_t a, std::size_t b) noexcept {
  return (a + b - 1) / b;
}

inline AimeArchitecture build_architecture(std::size_t p, std::size_t q, std::size_t d) {
  if (p < 1 || q < 1 || d < 1) {
    throw DomainError("build_architecture: p, q and d must all be >= 1 (got p=" + std::to_string(p) +
                      ", q=" + std::to_string(q) + ", d=" + std::to_string(d) + ")");
  }
  AimeArchitecture a;
  a.p = p;
  a.q = q;
  a.d = d;
  a.encoder_sizes = {ceil_div(p, 5), ceil_div(p, 25), ceil_div(p, 625)};
  a.decoder_sizes = {ceil_div(q, 625), ceil_div(q, 25), ceil_div(q, 5)};
  return a;
}

inline Network build_network(const AimeArchitecture& arch, std::uint64_t seed) {
  return init_network(arch.p, arch.layer_plan(), AimeArchitecture::kBottleneckIndex, seed);
}

struct TrainedModel {
  AimeArchitecture architecture;
  Network network;
  std::vector<double> input_means;
  std::vector<double> input_sds;
  std::vector<double> output_means;
  std::vector<double> output_sds;
  std::vector<double> loss_history;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Stream ids: minibatch order of epoch e uses kShuffleStreamBase + e; all
/// dropout masks come from kDropoutStream.
inline constexpr std::uint64_t kShuffleStreamBase = 0x2000'0000;
inline constexpr std::uint64_t kDropoutStream = 0x3000'0000;

namespace detail {

inline std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.uniform_below(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace detail

/// Standardizes X and Y with their own column statistics, then trains the
/// cross-modal autoencoder with Adam on shuffled minibatches. `loss_history`
/// holds the sample-weighted mean train-mode MSE of each epoch.
inline TrainedModel fit(const Matrix& x, const Matrix& y, std::size_t d, const TrainConfig& cfg) {
  if (x.rows() != y.rows()) {
    throw AlignmentError("fit: X has " + std::to_string(x.rows()) + " samples but Y has " +
                         std::to_string(y.rows()));
  }
  if (x.rows() < 2) throw InsufficientDataError("fit: need at least 2 samples");
  if (!x.all_finite() || !y.all_finite()) throw DataError("fit: input contains non-finite values");
  cfg.validate();

  TrainedModel model;
  model.architecture = build_architecture(x.cols(), y.cols(), d);
  model.seed = cfg.seed;
  auto xs = column_stats(x);
  auto ys = column_stats(y);
  model.input_means = std::move(xs.means);
  model.input_sds = std::move(xs.sds);
  model.output_means = std::move(ys.means);
  model.output_sds = std::move(ys.sds);
  model.network = build_network(model.architecture, cfg.seed);

  const Matrix xz = standardize_columns(x, model.input_means, model.input_sds);
  const Matrix yz = standardize_columns(y, model.output_means, model.output_sds);
  revive_dead_units(model.network, xz, cfg.seed);
  const std::size_t n = x.rows();
  const std::size_t batch = std::min(cfg.batch_size, n);

  AdamState adam = AdamState::for_network(model.network);
  RngStream dropout_rng(cfg.seed, kDropoutStream);
  model.loss_history.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream shuffle_rng(cfg.seed, kShuffleStreamBase + epoch);
    const auto order = detail::shuffled_indices(n, shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      const Matrix xb = select_rows(xz, idx);
      const Matrix yb = select_rows(yz, idx);
      auto fr = forward(model.network, xb, Mode::train, dropout_rng);
      auto lg = mse_loss(fr.output, yb);
      if (!std::isfinite(lg.loss)) {
        throw NumericalError("fit: non-finite loss at epoch " + std::to_string(epoch + 1));
      }
      total += lg.loss * static_cast<double>(idx.size());
      auto grads = backward(model.network, fr.cache, lg.grad);
      adam_step(model.network, grads, adam, cfg);
    }
    model.loss_history.push_back(total / static_cast<double>(n));
  }
  return model;
}

/// Bottleneck activations (eval mode) of x standardized with training statistics.
inline Matrix embed(const TrainedModel& model, const Matrix& x) {
  if (x.cols() != model.architecture.p) {
    throw ShapeError("embed: input has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(model.architecture.p));
  }
  const Matrix xz = standardize_columns(x, model.input_means, model.input_sds);
  return forward_eval_to(model.network, xz, model.network.bottleneck_index);
}

/// Eval-mode reconstruction of Y, on the standardized scale.
inline Matrix predict_standardized(const TrainedModel& model, const Matrix& x) {
  if (x.cols() != model.architecture.p) {
    throw ShapeError("predict: input has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(model.architecture.p));
  }
  const Matrix xz = standardize_columns(x, model.input_means, model.input_sds);
  return forward_eval_to(model.network, xz, model.network.layers.size() - 1);
}

// ---------------------------------------------------------------------------
// Model file (see docs/model_format.md for the byte layout)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kModelMagic = "AIMEMODL";
inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {

class ByteWriter {
public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    u64(vs.size());
    for (double v : vs) f64(v);
  }
  void raw(std::string_view s) { buf_.append(s); }
  std::string take() { return std::move(buf_); }

private:
  std::string buf_;
};

class ByteReader {
public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s() {
    const std::uint64_t n = u64();
    if (n > remaining() / 8) throw FormatError("model file: vector length exceeds file size");
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }
  std::string_view take(std::size_t n) {
    if (n > remaining()) throw FormatError("model file: unexpected end of data");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_model(const TrainedModel& m) {
  detail::ByteWriter w;
  w.raw(kModelMagic);
  w.u32(kModelFormatVersion);
  const auto& a = m.architecture;
  w.u64(a.p);
  w.u64(a.q);
  w.u64(a.d);
  for (auto s : a.encoder_sizes) w.u64(s);
  for (auto r : a.encoder_dropout) w.f64(r);
  for (auto s : a.decoder_sizes) w.u64(s);
  for (auto r : a.decoder_dropout) w.f64(r);
  w.u64(m.seed);
  w.u64(m.network.layers.size());
  w.u64(m.network.bottleneck_index);
  for (std::size_t l = 0; l < m.network.layers.size(); ++l) {
    const auto& layer = m.network.layers[l];
    w.u64(layer.fan_out());
    w.u64(layer.fan_in());
    w.u8(layer.activation == Activation::relu ? 1 : 0);
    w.f64(m.network.dropout[l].rate);
    for (double v : layer.weights.values()) w.f64(v);
    for (double v : layer.bias) w.f64(v);
  }
  w.f64s(m.input_means);
  w.f64s(m.input_sds);
  w.f64s(m.output_means);
  w.f64s(m.output_sds);
  w.f64s(m.loss_history);
  return w.take();
}

inline TrainedModel deserialize_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < kModelMagic.size() || r.take(kModelMagic.size()) != kModelMagic) {
    throw FormatError("model file: bad magic, not an AIME model");
  }
  const auto version = r.u32();
  if (version != kModelFormatVersion) {
    throw FormatError("model file: unsupported format version " + std::to_string(version));
  }
  TrainedModel m;
  auto& a = m.architecture;
  a.p = r.u64();
  a.q = r.u64();
  a.d = r.u64();
  for (auto& s : a.encoder_sizes) s = r.u64();
  for (auto& v : a.encoder_dropout) v = r.f64();
  for (auto& s : a.decoder_sizes) s = r.u64();
  for (auto& v : a.decoder_dropout) v = r.f64();
  m.seed = r.u64();
  const auto n_layers = r.u64();
  if (n_layers > 64) throw FormatError("model file: implausible layer count");
  m.network.bottleneck_index = r.u64();
  for (std::uint64_t l = 0; l < n_layers; ++l) {
    const auto fan_out = r.u64();
    const auto fan_in = r.u64();
    if (fan_out == 0 || fan_in == 0 || fan_out > r.remaining() / 8 / fan_in) {
      throw FormatError("model file: layer " + std::to_string(l) + " shape exceeds file size");
    }
    DenseLayer layer;
    layer.activation = r.u8() == 1 ? Activation::relu : Activation::linear;
    m.network.dropout.push_back(DropoutSpec{r.f64()});
    layer.weights = Matrix(fan_out, fan_in);
    for (double& v : layer.weights.values()) v = r.f64();
    layer.bias.resize(fan_out);
    for (double& v : layer.bias) v = r.f64();
    m.network.layers.push_back(std::move(layer));
  }
  m.input_means = r.f64s();
  m.input_sds = r.f64s();
  m.output_means = r.f64s();
  m.output_sds = r.f64s();
  m.loss_history = r.f64s();
  if (r.remaining() != 0) throw FormatError("model file: trailing bytes");
  try {
    m.network.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("model file: inconsistent network: ") + e.what());
  }
  if (m.network.input_dim() != a.p || m.network.output_dim() != a.q ||
      m.input_means.size() != a.p || m.input_sds.size() != a.p || m.output_means.size() != a.q ||
      m.output_sds.size() != a.q) {
    throw FormatError("model file: architecture and stored parameters disagree");
  }
  return m;
}

inline void save_model(const TrainedModel& model, const std::string& path) {
  write_file_atomic(path, serialize_model(model));
}

inline TrainedModel load_model(const std::string& path) { return deserialize_model(read_file(path)); }

}  // namespace aime
