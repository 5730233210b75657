#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aime/errors.hpp"
#include "aime/matrix.hpp"
#include "aime/rng.hpp"

namespace aime {

enum class Activation { relu, linear };

inline const char* to_string(Activation a) noexcept {
  return a == Activation::relu ? "relu" : "linear";
}

struct DenseLayer {
  Matrix weights;            // fan_out x fan_in
  std::vector<double> bias;  // fan_out
  Activation activation = Activation::linear;

  std::size_t fan_in() const noexcept { return weights.cols(); }
  std::size_t fan_out() const noexcept { return weights.rows(); }
  std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Inverted dropout applied to a layer's post-activation output.
struct DropoutSpec {
  double rate = 0.0;
  friend bool operator==(const DropoutSpec&, const DropoutSpec&) = default;
};

struct Network {
  std::vector<DenseLayer> layers;
  std::vector<DropoutSpec> dropout;  // one per layer
  std::size_t bottleneck_index = 0;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().fan_in(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().fan_out(); }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  /// Throws ShapeError/DomainError if the layer chain or dropout table is inconsistent.
  void validate() const {
    if (layers.empty()) throw ShapeError("network has no layers");
    if (dropout.size() != layers.size()) {
      throw ShapeError("network has " + std::to_string(layers.size()) + " layers but " +
                       std::to_string(dropout.size()) + " dropout specs");
    }
    if (bottleneck_index >= layers.size()) {
      throw DomainError("bottleneck index " + std::to_string(bottleneck_index) +
                        " out of range for " + std::to_string(layers.size()) + " layers");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].bias.size() != layers[l].fan_out()) {
        throw ShapeError("layer " + std::to_string(l) + " bias length mismatch");
      }
      if (l > 0 && layers[l].fan_in() != layers[l - 1].fan_out()) {
        throw ShapeError("layer " + std::to_string(l) + " expects " +
                         std::to_string(layers[l].fan_in()) + " inputs but layer " +
                         std::to_string(l - 1) + " emits " + std::to_string(layers[l - 1].fan_out()));
      }
      if (!(dropout[l].rate >= 0.0 && dropout[l].rate < 1.0)) {
        throw DomainError("dropout rate must lie in [0, 1)");
      }
    }
  }

  friend bool operator==(const Network&, const Network&) = default;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DomainError("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw DomainError("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
    if (batch_size < 1) throw DomainError("batch_size must be >= 1");
  }
};

/// Gradients (or any other quantity) shaped like a network's parameters.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const Network& net) {
    Gradients g;
    for (const auto& l : net.layers) {
      g.weights.emplace_back(l.fan_out(), l.fan_in());
      g.bias.emplace_back(l.fan_out(), 0.0);
    }
    return g;
  }
};

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  std::size_t timestep = 0;

  static AdamState for_network(const Network& net) {
    return AdamState{Gradients::zeros_like(net), Gradients::zeros_like(net), 0};
  }
};

enum class Mode { train, eval };

struct LayerCache {
  Matrix pre_activation;  // n x fan_out
  Matrix output;          // post-activation, post-dropout
  Matrix mask;            // empty when the layer had no dropout applied
};

struct ForwardCache {
  Matrix input;
  std::vector<LayerCache> layers;
  std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (fan_out, fan_in) per layer
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

/// Frozen dropout masks, one per layer (empty Matrix = no dropout).
using DropoutMasks = std::vector<Matrix>;

namespace detail {

inline void apply_activation(Matrix& z, Activation a) {
  if (a == Activation::relu)
    for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
}

inline Matrix dense_forward(const DenseLayer& layer, const Matrix& in) {
  Matrix z = matmul_nt(in, layer.weights);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return z;
}

inline Matrix sample_mask(std::size_t rows, std::size_t cols, double rate, RngStream& rng) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask.values()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

// `masks` may be null (sample fresh masks in train mode) or a frozen set.
inline ForwardResult forward_impl(const Network& net, const Matrix& x, Mode mode, RngStream* rng,
                                  const DropoutMasks* masks, std::size_t last_layer) {
  net.validate();
  if (x.cols() != net.input_dim()) {
    throw ShapeError("forward: input " + x.shape() + " but network expects " +
                     std::to_string(net.input_dim()) + " features");
  }
  ForwardResult res;
  res.cache.input = x;
  res.cache.layers.reserve(last_layer + 1);
  const Matrix* in = &res.cache.input;
  for (std::size_t l = 0; l <= last_layer; ++l) {
    const auto& layer = net.layers[l];
    LayerCache lc;
    lc.pre_activation = dense_forward(layer, *in);
    lc.output = lc.pre_activation;
    apply_activation(lc.output, layer.activation);
    if (masks != nullptr) {
      const Matrix& m = (*masks)[l];
      if (!m.empty()) {
        if (m.rows() != lc.output.rows() || m.cols() != lc.output.cols()) {
          throw ShapeError("forward: frozen dropout mask " + m.shape() + " does not match layer " +
                           std::to_string(l) + " output " + lc.output.shape());
        }
        lc.mask = m;
      }
    } else if (mode == Mode::train && net.dropout[l].rate > 0.0) {
      lc.mask = sample_mask(lc.output.rows(), lc.output.cols(), net.dropout[l].rate, *rng);
    }
    if (!lc.mask.empty()) {
      auto ov = lc.output.values();
      auto mv = lc.mask.values();
      for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= mv[i];
    }
    res.cache.shapes.emplace_back(layer.fan_out(), layer.fan_in());
    res.cache.layers.push_back(std::move(lc));
    in = &res.cache.layers.back().output;
  }
  res.output = res.cache.layers.back().output;
  return res;
}

}  // namespace detail

/// Full forward pass. In eval mode dropout is the identity and `rng` is untouched.
inline ForwardResult forward(const Network& net, const Matrix& x, Mode mode, RngStream& rng) {
  return detail::forward_impl(net, x, mode, &rng, nullptr, net.layers.size() - 1);
}

/// Forward pass reusing a fixed set of dropout masks.
inline ForwardResult forward_with_masks(const Network& net, const Matrix& x, const DropoutMasks& masks) {
  if (masks.size() != net.layers.size()) {
    throw ShapeError("forward_with_masks: " + std::to_string(masks.size()) + " masks for " +
                     std::to_string(net.layers.size()) + " layers");
  }
  return detail::forward_impl(net, x, Mode::train, nullptr, &masks, net.layers.size() - 1);
}

/// Eval-mode output of layer `last_layer` (inclusive).
inline Matrix forward_eval_to(const Network& net, const Matrix& x, std::size_t last_layer) {
  if (last_layer >= net.layers.size()) throw IndexError("forward_eval_to: layer out of range");
  DropoutMasks none(net.layers.size());
  return detail::forward_impl(net, x, Mode::eval, nullptr, &none, last_layer).output;
}

inline DropoutMasks masks_of(const ForwardCache& cache) {
  DropoutMasks m;
  for (const auto& l : cache.layers) m.push_back(l.mask);
  return m;
}

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Mean squared error over every entry, and its gradient w.r.t. `pred`.
inline LossAndGrad mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse_loss: prediction " + pred.shape() + " vs target " + target.shape());
  }
  const double count = static_cast<double>(pred.size());
  LossAndGrad out{0.0, Matrix(pred.rows(), pred.cols())};
  if (pred.empty()) return out;
  auto pv = pred.values();
  auto tv = target.values();
  auto gv = out.grad.values();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - tv[i];
    out.loss += d * d;
    gv[i] = 2.0 * d / count;
  }
  out.loss /= count;
  return out;
}

/// Analytic gradients of the loss through the cached forward pass.
inline Gradients backward(const Network& net, const ForwardCache& cache, const Matrix& loss_grad) {
  if (cache.layers.size() != net.layers.size()) {
    throw CacheError("backward: cache covers " + std::to_string(cache.layers.size()) +
                     " layers, network has " + std::to_string(net.layers.size()));
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (cache.shapes[l] != std::make_pair(net.layers[l].fan_out(), net.layers[l].fan_in())) {
      throw CacheError("backward: cache was produced by a different network (layer " +
                       std::to_string(l) + ")");
    }
  }
  const Matrix& out = cache.layers.back().output;
  if (loss_grad.rows() != out.rows() || loss_grad.cols() != out.cols()) {
    throw CacheError("backward: loss gradient " + loss_grad.shape() + " does not match cached output " +
                     out.shape());
  }

  Gradients g;
  g.weights.resize(net.layers.size());
  g.bias.resize(net.layers.size());
  Matrix upstream = loss_grad;
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const auto& layer = net.layers[l];
    const auto& lc = cache.layers[l];
    Matrix dz = std::move(upstream);
    auto dv = dz.values();
    if (!lc.mask.empty()) {
      auto mv = lc.mask.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= mv[i];
    }
    if (layer.activation == Activation::relu) {
      auto zv = lc.pre_activation.values();
      for (std::size_t i = 0; i < dv.size(); ++i)
        if (!(zv[i] > 0.0)) dv[i] = 0.0;
    }
    const Matrix& in = l == 0 ? cache.input : cache.layers[l - 1].output;
    g.weights[l] = matmul_tn(dz, in);
    g.bias[l].assign(layer.fan_out(), 0.0);
    for (std::size_t r = 0; r < dz.rows(); ++r) {
      auto row = dz.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) g.bias[l][c] += row[c];
    }
    if (l > 0) upstream = matmul(dz, layer.weights);
  }
  return g;
}

/// One Adam step with bias correction. Throws NumericalError if any
/// parameter becomes non-finite.
inline void adam_step(Network& net, const Gradients& grads, AdamState& state, const TrainConfig& cfg) {
  if (grads.weights.size() != net.layers.size() || grads.bias.size() != net.layers.size() ||
      state.first_moment.weights.size() != net.layers.size()) {
    throw ShapeError("adam_step: gradient/state layer count does not match network");
  }
  state.timestep += 1;
  const double t = static_cast<double>(state.timestep);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](std::span<double> p, std::span<const double> g, std::span<double> m,
                    std::span<double> v) {
    if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
      throw ShapeError("adam_step: parameter and gradient shapes disagree");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
      if (!std::isfinite(p[i])) throw NumericalError("adam_step: parameter became non-finite");
    }
  };

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    update(layer.weights.values(), grads.weights[l].values(), state.first_moment.weights[l].values(),
           state.second_moment.weights[l].values());
    update(layer.bias, grads.bias[l], state.first_moment.bias[l], state.second_moment.bias[l]);
  }
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

struct LayerPlan {
  std::size_t fan_out = 0;
  Activation activation = Activation::relu;
  double dropout = 0.0;
};

/// Stream ids reserved for weight initialization: kInitStreamBase + layer.
inline constexpr std::uint64_t kInitStreamBase = 0x1000;

/// He-uniform for relu layers, Glorot-uniform for linear layers, zero biases.
/// Layer l draws from RngStream(seed, kInitStreamBase + l).
inline Network init_network(std::size_t input_dim, const std::vector<LayerPlan>& plan,
                            std::size_t bottleneck_index, std::uint64_t seed) {
  if (input_dim == 0) throw DomainError("init_network: input dimension must be >= 1");
  Network net;
  net.bottleneck_index = bottleneck_index;
  std::size_t fan_in = input_dim;
  for (std::size_t l = 0; l < plan.size(); ++l) {
    const auto& lp = plan[l];
    if (lp.fan_out == 0) throw DomainError("init_network: layer width must be >= 1");
    RngStream rng(seed, kInitStreamBase + l);
    const double limit = lp.activation == Activation::relu
                             ? std::sqrt(6.0 / static_cast<double>(fan_in))
                             : std::sqrt(6.0 / static_cast<double>(fan_in + lp.fan_out));
    DenseLayer layer{Matrix(lp.fan_out, fan_in), std::vector<double>(lp.fan_out, 0.0), lp.activation};
    for (double& w : layer.weights.values()) w = rng.uniform(-limit, limit);
    net.layers.push_back(std::move(layer));
    net.dropout.push_back(DropoutSpec{lp.dropout});
    fan_in = lp.fan_out;
  }
  net.validate();
  return net;
}

/// Redraws the weight row of every ReLU unit that is active on fewer than
/// `min_active` of the rows of `x`, layer by layer, from the layer's init
/// stream continued past the initial draw. Gives up on a unit after
/// `max_attempts` draws. Returns the number of redrawn units.
inline std::size_t revive_dead_units(Network& net, const Matrix& x, std::uint64_t seed,
                                     double min_active = 0.05, int max_attempts = 64) {
  net.validate();
  if (x.rows() == 0) return 0;
  std::size_t redrawn = 0;
  Matrix in = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    if (layer.activation == Activation::relu) {
      RngStream rng(seed, kInitStreamBase + l);
      for (std::size_t i = 0; i < layer.weights.size(); ++i) rng.next_u64();
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.fan_in()));
      auto active_fraction = [&](std::size_t unit) {
        std::size_t active = 0;
        auto w = layer.weights.row(unit);
        for (std::size_t r = 0; r < in.rows(); ++r) {
          auto xr = in.row(r);
          double z = layer.bias[unit];
          for (std::size_t k = 0; k < xr.size(); ++k) z += w[k] * xr[k];
          if (z > 0.0) ++active;
        }
        return static_cast<double>(active) / static_cast<double>(in.rows());
      };
      for (std::size_t unit = 0; unit < layer.fan_out(); ++unit) {
        for (int attempt = 0; attempt < max_attempts && active_fraction(unit) < min_active; ++attempt) {
          for (double& w : layer.weights.row(unit)) w = rng.uniform(-limit, limit);
          if (attempt == 0) ++redrawn;
        }
      }
    }
    Matrix out = detail::dense_forward(layer, in);
    detail::apply_activation(out, layer.activation);
    in = std::move(out);
  }
  return redrawn;
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_layer = 0;
  std::size_t worst_index = 0;  // flat index; weights first, then bias
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares `analytic` against central differences of the MSE loss with
/// dropout masks held fixed.
inline GradientCheckResult compare_gradients(const Network& net, const Matrix& x, const Matrix& y,
                                             const DropoutMasks& masks, const Gradients& analytic,
                                             double h) {
  GradientCheckResult res;
  Network probe = net;
  auto loss_at = [&]() { return mse_loss(forward_with_masks(probe, x, masks).output, y).loss; };
  auto check = [&](double& param, double a, std::size_t layer, std::size_t index) {
    const double saved = param;
    param = saved + h;
    const double lp = loss_at();
    param = saved - h;
    const double lm = loss_at();
    param = saved;
    const double numeric = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double err = std::abs(a - numeric) / denom;
    if (err > res.max_relative_error || (layer == 0 && index == 0)) {
      res = GradientCheckResult{err, layer, index, a, numeric};
    }
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto w = probe.layers[l].weights.values();
    auto gw = analytic.weights[l].values();
    for (std::size_t i = 0; i < w.size(); ++i) check(w[i], gw[i], l, i);
    auto& b = probe.layers[l].bias;
    for (std::size_t i = 0; i < b.size(); ++i) check(b[i], analytic.bias[l][i], l, w.size() + i);
  }
  return res;
}

/// Max relative error between backprop and central-difference gradients of
/// the MSE loss. Dropout masks are drawn once from RngStream(seed, 0) and
/// frozen for every perturbation.
inline double gradient_check(const Network& net, const Matrix& x, const Matrix& y, double h,
                             std::uint64_t seed) {
  RngStream rng(seed, 0);
  auto fr = forward(net, x, Mode::train, rng);
  auto lg = mse_loss(fr.output, y);
  auto grads = backward(net, fr.cache, lg.grad);
  return compare_gradients(net, x, y, masks_of(fr.cache), grads, h).max_relative_error;
}

}  // namespace aime
