#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pixswap/errors.hpp"
#include "pixswap/rng.hpp"
#include "pixswap/tensor.hpp"

namespace pixswap {

/// Architecture: per block (3x3 same conv, ReLU, 2x2 average pool), then global
/// average pooling, a linear projection to the embedding, and a bias-free linear
/// classifier on top of the embedding.
struct NetConfig {
  int input_channels = 3;
  int input_height = 256;
  int input_width = 128;
  std::vector<int> widths{8, 16, 32};
  int embedding_dim = 64;
  int num_classes = 1;
  // Fixed input standardisation (x - mean) / std, one value per channel or one for all.
  std::vector<double> input_mean{0.5};
  std::vector<double> input_std{0.25};
  // Multiplier on the Kaiming std of the embedding projection. Small start values keep
  // batch-hard triplet from shrinking everything onto one point (dead last block).
  double embed_init_scale = 0.1;
  // Same for the classifier; a larger start gives cross-entropy enough pull to
  // separate classes before the metric terms flatten the embeddings.
  double classifier_init_scale = 4.0;

  double mean_of(int c) const { return input_mean.size() == 1 ? input_mean[0] : input_mean[c]; }
  double std_of(int c) const { return input_std.size() == 1 ? input_std[0] : input_std[c]; }

  void validate() const {
    if (input_channels < 1 || embedding_dim < 1 || num_classes < 1) {
      throw ConfigError("network channels, embedding dim and class count must be positive");
    }
    for (const auto* v : {&input_mean, &input_std}) {
      if (v->size() != 1 && v->size() != static_cast<std::size_t>(input_channels)) {
        throw ConfigError("input mean/std need 1 or input_channels entries");
      }
    }
    for (double s : input_std) {
      if (!(s > 0.0)) throw ConfigError("input std must be positive");
    }
    if (!(embed_init_scale > 0.0) || !(classifier_init_scale > 0.0)) {
      throw ConfigError("init scales must be positive");
    }
    if (widths.empty()) throw ConfigError("network needs at least one conv block");
    for (int w : widths) {
      if (w < 1) throw ConfigError("conv widths must be positive");
    }
    const int div = 1 << widths.size();
    if (input_height < div || input_width < div || input_height % div != 0 || input_width % div != 0) {
      throw ConfigError("input " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                        " must be divisible by " + std::to_string(div));
    }
  }

  bool operator==(const NetConfig&) const = default;
};

template <typename T>
struct ParamTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<T> values;

  std::size_t size() const { return values.size(); }
};

template <typename T>
using ParameterSet = std::vector<ParamTensor<T>>;

template <typename T>
ParameterSet<T> zeros_like(const ParameterSet<T>& params) {
  ParameterSet<T> out = params;
  for (auto& p : out) std::fill(p.values.begin(), p.values.end(), T{0});
  return out;
}

template <typename T>
class EmbeddingNet {
 public:
  /// All parameters zero.
  explicit EmbeddingNet(NetConfig config) : config_(std::move(config)) {
    config_.validate();
    int in = config_.input_channels;
    for (std::size_t b = 0; b < config_.widths.size(); ++b) {
      const int out = config_.widths[b];
      add("conv" + std::to_string(b) + ".weight", {out, in, 3, 3});
      add("conv" + std::to_string(b) + ".bias", {out});
      in = out;
    }
    add("embed.weight", {config_.embedding_dim, in});
    add("embed.bias", {config_.embedding_dim});
    add("classifier.weight", {config_.num_classes, config_.embedding_dim});
  }

  /// Kaiming fan-in initialisation: N(0, 2/fan_in) for ReLU-fed convs,
  /// N(0, 1/fan_in) for the two linear layers; biases zero.
  static EmbeddingNet kaiming(NetConfig config, RngStream& rng) {
    EmbeddingNet net(std::move(config));
    const std::size_t blocks = net.config_.widths.size();
    for (std::size_t i = 0; i < net.params_.size(); ++i) {
      auto& p = net.params_[i];
      if (p.dims.size() < 2) continue;
      int fan_in = 1;
      for (std::size_t d = 1; d < p.dims.size(); ++d) fan_in *= p.dims[d];
      const double gain = i < 2 * blocks ? 2.0 : 1.0;
      double stddev = std::sqrt(gain / fan_in);
      if (i == 2 * blocks) stddev *= net.config_.embed_init_scale;
      if (i == 2 * blocks + 2) stddev *= net.config_.classifier_init_scale;
      for (auto& v : p.values) v = static_cast<T>(rng.normal(0.0, stddev));
    }
    return net;
  }

  const NetConfig& config() const { return config_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }
  std::size_t num_blocks() const { return config_.widths.size(); }

  ParamTensor<T>& param(const std::string& name) {
    for (auto& p : params_) {
      if (p.name == name) return p;
    }
    throw ArgumentError("no parameter named " + name);
  }
  const ParamTensor<T>& param(const std::string& name) const {
    return const_cast<EmbeddingNet*>(this)->param(name);
  }

  const ParamTensor<T>& conv_weight(std::size_t b) const { return params_[2 * b]; }
  const ParamTensor<T>& conv_bias(std::size_t b) const { return params_[2 * b + 1]; }
  const ParamTensor<T>& embed_weight() const { return params_[2 * num_blocks()]; }
  const ParamTensor<T>& embed_bias() const { return params_[2 * num_blocks() + 1]; }
  const ParamTensor<T>& classifier_weight() const { return params_[2 * num_blocks() + 2]; }

 private:
  void add(std::string name, std::vector<int> dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    params_.push_back({std::move(name), std::move(dims), std::vector<T>(n, T{0})});
  }

  NetConfig config_;
  ParameterSet<T> params_;
};

// Activations are stored sample-major: [n][channel][row][col].
template <typename T>
struct BlockCache {
  int in_channels = 0, out_channels = 0, height = 0, width = 0;  // conv resolution
  std::vector<T> input;                                           // N x Cin x H x W
  std::vector<T> pre;                                             // N x Cout x H x W (before ReLU)
  std::vector<T> pooled;                                          // N x Cout x H/2 x W/2
};

template <typename T>
struct ForwardResult {
  std::size_t batch = 0;
  std::vector<BlockCache<T>> blocks;
  Matrix<T> features;  // N x C_last after global average pooling
  Matrix<T> embeddings;
  Matrix<T> logits;
};

namespace model_detail {

// out[co] += sum_ci w[co, ci] (*) in[ci], 3x3 kernel, zero padding 1.
template <typename T>
void conv3x3_forward(const T* in, int cin, int h, int w, const T* weight, const T* bias, int cout, T* out) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int co = 0; co < cout; ++co) {
    T* o = out + co * plane;
    std::fill(o, o + plane, bias[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const T* src = in + ci * plane;
      const T* k = weight + (static_cast<std::size_t>(co) * cin + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const T wv = k[ky * 3 + kx];
          const int x0 = std::max(0, 1 - kx);
          const int x1 = std::min(w, w + 1 - kx);
          for (int y = 0; y < h; ++y) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            T* __restrict orow = o + static_cast<std::size_t>(y) * w;
            const T* __restrict irow = src + static_cast<std::size_t>(iy) * w + (kx - 1);
            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and, when grad_in is non-null, the input gradient.
template <typename T>
void conv3x3_backward(const T* in, int cin, int h, int w, const T* weight, int cout, const T* grad_out,
                      T* grad_weight, T* grad_bias, T* grad_in) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int co = 0; co < cout; ++co) {
    const T* g = grad_out + co * plane;
    T gb = 0;
    for (std::size_t i = 0; i < plane; ++i) gb += g[i];
    grad_bias[co] += gb;
    for (int ci = 0; ci < cin; ++ci) {
      const T* src = in + ci * plane;
      const T* k = weight + (static_cast<std::size_t>(co) * cin + ci) * 9;
      T* gk = grad_weight + (static_cast<std::size_t>(co) * cin + ci) * 9;
      T* gi = grad_in ? grad_in + ci * plane : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const T wv = k[ky * 3 + kx];
          const int x0 = std::max(0, 1 - kx);
          const int x1 = std::min(w, w + 1 - kx);
          T acc = 0;
          for (int y = 0; y < h; ++y) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            const T* __restrict grow = g + static_cast<std::size_t>(y) * w;
            const T* __restrict irow = src + static_cast<std::size_t>(iy) * w + (kx - 1);
            for (int x = x0; x < x1; ++x) acc += grow[x] * irow[x];
            if (gi) {
              T* __restrict girow = gi + static_cast<std::size_t>(iy) * w + (kx - 1);
              for (int x = x0; x < x1; ++x) girow[x] += wv * grow[x];
            }
          }
          gk[ky * 3 + kx] += acc;
        }
      }
    }
  }
}

}  // namespace model_detail

/// Runs the network on `images` (all of the configured input size).
template <typename T>
ForwardResult<T> forward(const EmbeddingNet<T>& net, std::span<const Image> images) {
  using namespace model_detail;
  const NetConfig& cfg = net.config();
  ForwardResult<T> res;
  res.batch = images.size();
  const std::size_t N = images.size();

  std::vector<T> act(N * cfg.input_channels * cfg.input_height * cfg.input_width);
  for (std::size_t n = 0; n < N; ++n) {
    const Image& img = images[n];
    if (img.channels() != cfg.input_channels || img.height() != cfg.input_height || img.width() != cfg.input_width) {
      throw ShapeError("input " + std::to_string(n) + " is " + std::to_string(img.channels()) + "x" +
                       std::to_string(img.height()) + "x" + std::to_string(img.width()) + ", network expects " +
                       std::to_string(cfg.input_channels) + "x" + std::to_string(cfg.input_height) + "x" +
                       std::to_string(cfg.input_width));
    }
    T* dst = act.data() + n * img.size();
    for (int c = 0; c < img.channels(); ++c) {
      const T mean = static_cast<T>(cfg.mean_of(c));
      const T inv_std = static_cast<T>(1.0 / cfg.std_of(c));
      const auto plane = img.plane(c);
      for (std::size_t i = 0; i < plane.size(); ++i) dst[c * plane.size() + i] = (plane[i] - mean) * inv_std;
    }
  }

  int cin = cfg.input_channels, h = cfg.input_height, w = cfg.input_width;
  for (std::size_t b = 0; b < net.num_blocks(); ++b) {
    BlockCache<T> blk;
    const int cout = cfg.widths[b];
    blk.in_channels = cin;
    blk.out_channels = cout;
    blk.height = h;
    blk.width = w;
    blk.input = std::move(act);
    const std::size_t in_sz = static_cast<std::size_t>(cin) * h * w;
    const std::size_t out_sz = static_cast<std::size_t>(cout) * h * w;
    blk.pre.resize(N * out_sz);
    for (std::size_t n = 0; n < N; ++n) {
      conv3x3_forward(blk.input.data() + n * in_sz, cin, h, w, net.conv_weight(b).values.data(),
                      net.conv_bias(b).values.data(), cout, blk.pre.data() + n * out_sz);
    }
    const int ph = h / 2, pw = w / 2;
    blk.pooled.assign(N * cout * ph * pw, T{0});
    for (std::size_t nc = 0; nc < N * cout; ++nc) {
      const T* src = blk.pre.data() + nc * h * w;
      T* dst = blk.pooled.data() + nc * ph * pw;
      for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) {
          const std::size_t i = static_cast<std::size_t>(2 * y) * w + 2 * x;
          dst[y * pw + x] = (std::max(src[i], T{0}) + std::max(src[i + 1], T{0}) + std::max(src[i + w], T{0}) +
                             std::max(src[i + w + 1], T{0})) *
                            T(0.25);
        }
      }
    }
    act = blk.pooled;
    res.blocks.push_back(std::move(blk));
    cin = cout;
    h = ph;
    w = pw;
  }

  const std::size_t plane = static_cast<std::size_t>(h) * w;
  res.features = Matrix<T>(N, cin);
  for (std::size_t n = 0; n < N; ++n) {
    for (int c = 0; c < cin; ++c) {
      const T* src = act.data() + (n * cin + c) * plane;
      T s = 0;
      for (std::size_t i = 0; i < plane; ++i) s += src[i];
      res.features(n, c) = s / static_cast<T>(plane);
    }
  }

  const int D = cfg.embedding_dim;
  const auto& we = net.embed_weight().values;
  const auto& be = net.embed_bias().values;
  res.embeddings = Matrix<T>(N, D);
  for (std::size_t n = 0; n < N; ++n) {
    for (int d = 0; d < D; ++d) {
      T s = be[d];
      for (int c = 0; c < cin; ++c) s += we[static_cast<std::size_t>(d) * cin + c] * res.features(n, c);
      res.embeddings(n, d) = s;
    }
  }

  const auto& wc = net.classifier_weight().values;
  res.logits = Matrix<T>(N, cfg.num_classes);
  for (std::size_t n = 0; n < N; ++n) {
    for (int k = 0; k < cfg.num_classes; ++k) {
      T s = 0;
      for (int d = 0; d < D; ++d) s += wc[static_cast<std::size_t>(k) * D + d] * res.embeddings(n, d);
      res.logits(n, k) = s;
    }
  }
  return res;
}

/// Analytic parameter gradients given upstream gradients on embeddings and
/// logits (either may be empty, meaning zero). Parameters named in `frozen`
/// receive exactly zero gradient.
template <typename T>
ParameterSet<T> backward(const EmbeddingNet<T>& net, const ForwardResult<T>& fwd, const Matrix<T>& grad_embeddings,
                         const Matrix<T>& grad_logits, const std::set<std::string>& frozen = {}) {
  using namespace model_detail;
  const NetConfig& cfg = net.config();
  const std::size_t N = fwd.batch;
  const int D = cfg.embedding_dim;
  ParameterSet<T> grads = zeros_like(net.params());
  const std::size_t nb = net.num_blocks();

  const bool has_ge = grad_embeddings.rows() != 0;
  const bool has_gl = grad_logits.rows() != 0;
  if (has_ge && (grad_embeddings.rows() != N || grad_embeddings.cols() != static_cast<std::size_t>(D))) {
    throw ShapeError("embedding gradient shape mismatch");
  }
  if (has_gl && (grad_logits.rows() != N || grad_logits.cols() != static_cast<std::size_t>(cfg.num_classes))) {
    throw ShapeError("logit gradient shape mismatch");
  }

  // Total gradient reaching the embedding.
  Matrix<T> ge = has_ge ? grad_embeddings : Matrix<T>(N, D);
  const auto& wc = net.classifier_weight().values;
  auto& gwc = grads[2 * nb + 2].values;
  if (has_gl) {
    for (std::size_t n = 0; n < N; ++n) {
      for (int k = 0; k < cfg.num_classes; ++k) {
        const T g = grad_logits(n, k);
        if (g == T{0}) continue;
        for (int d = 0; d < D; ++d) {
          gwc[static_cast<std::size_t>(k) * D + d] += g * fwd.embeddings(n, d);
          ge(n, d) += g * wc[static_cast<std::size_t>(k) * D + d];
        }
      }
    }
  }

  const int C = static_cast<int>(fwd.features.cols());
  const auto& we = net.embed_weight().values;
  auto& gwe = grads[2 * nb].values;
  auto& gbe = grads[2 * nb + 1].values;
  Matrix<T> gfeat(N, C);
  for (std::size_t n = 0; n < N; ++n) {
    for (int d = 0; d < D; ++d) {
      const T g = ge(n, d);
      gbe[d] += g;
      for (int c = 0; c < C; ++c) {
        gwe[static_cast<std::size_t>(d) * C + c] += g * fwd.features(n, c);
        gfeat(n, c) += g * we[static_cast<std::size_t>(d) * C + c];
      }
    }
  }

  // Gradient w.r.t. the last block's pooled output (global average pooling).
  const BlockCache<T>& last = fwd.blocks.back();
  const std::size_t last_plane = static_cast<std::size_t>(last.height / 2) * (last.width / 2);
  std::vector<T> gact(N * C * last_plane);
  for (std::size_t n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T g = gfeat(n, c) / static_cast<T>(last_plane);
      std::fill_n(gact.begin() + (n * C + c) * last_plane, last_plane, g);
    }
  }

  for (std::size_t bi = nb; bi-- > 0;) {
    const BlockCache<T>& blk = fwd.blocks[bi];
    const int h = blk.height, w = blk.width, ph = h / 2, pw = w / 2;
    const std::size_t out_sz = static_cast<std::size_t>(blk.out_channels) * h * w;
    const std::size_t in_sz = static_cast<std::size_t>(blk.in_channels) * h * w;
    // Through average pool and ReLU.
    std::vector<T> gpre(N * out_sz, T{0});
    for (std::size_t nc = 0; nc < N * blk.out_channels; ++nc) {
      const T* pre = blk.pre.data() + nc * h * w;
      const T* gp = gact.data() + nc * ph * pw;
      T* dst = gpre.data() + nc * h * w;
      for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) {
          const T g = gp[y * pw + x] * T(0.25);
          const std::size_t i = static_cast<std::size_t>(2 * y) * w + 2 * x;
          for (std::size_t j : {i, i + 1, i + w, i + w + 1}) dst[j] = pre[j] > T{0} ? g : T{0};
        }
      }
    }
    const bool need_input_grad = bi > 0;
    std::vector<T> gin(need_input_grad ? N * in_sz : 0, T{0});
    for (std::size_t n = 0; n < N; ++n) {
      conv3x3_backward(blk.input.data() + n * in_sz, blk.in_channels, h, w, net.conv_weight(bi).values.data(),
                       blk.out_channels, gpre.data() + n * out_sz, grads[2 * bi].values.data(),
                       grads[2 * bi + 1].values.data(), need_input_grad ? gin.data() + n * in_sz : nullptr);
    }
    gact = std::move(gin);
  }

  for (auto& g : grads) {
    if (frozen.contains(g.name)) std::fill(g.values.begin(), g.values.end(), T{0});
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Optimiser
// ---------------------------------------------------------------------------

/// Momentum SGD (PyTorch convention: v = mu v + g + wd w; w -= lr v) with step
/// decay by `gamma` at the given fractions of the total step count.
struct OptimConfig {
  double learning_rate = 3.5e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<double> milestones{0.6, 0.8};
  double gamma = 0.1;
  long total_steps = 1000;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (!(gamma > 0.0)) throw ConfigError("decay factor must be positive");
    if (total_steps < 0) throw ConfigError("total steps must be non-negative");
  }

  double lr_at(long step) const {
    double lr = learning_rate;
    for (double m : milestones) {
      if (step >= static_cast<long>(std::floor(m * static_cast<double>(total_steps)))) lr *= gamma;
    }
    return lr;
  }
};

template <typename T>
struct TrainState {
  EmbeddingNet<T> net;
  ParameterSet<T> velocity;
  OptimConfig optim;
  long step = 0;

  TrainState(EmbeddingNet<T> n, OptimConfig o) : net(std::move(n)), velocity(zeros_like(net.params())), optim(std::move(o)) {
    optim.validate();
  }

  double learning_rate() const { return optim.lr_at(step); }
};

template <typename T>
void sgd_step(TrainState<T>& state, const ParameterSet<T>& grads) {
  auto& params = state.net.params();
  if (grads.size() != params.size()) throw ShapeError("gradient set does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].values.size() != params[i].values.size()) {
      throw ShapeError("gradient for " + params[i].name + " has wrong size");
    }
    for (T g : grads[i].values) {
      if (!std::isfinite(g)) {
        throw TrainingError("non-finite gradient in " + params[i].name + " at step " + std::to_string(state.step));
      }
    }
  }
  const T lr = static_cast<T>(state.learning_rate());
  const T mu = static_cast<T>(state.optim.momentum);
  const T wd = static_cast<T>(state.optim.weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].values;
    auto& v = state.velocity[i].values;
    const auto& g = grads[i].values;
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = mu * v[j] + g[j] + wd * w[j];
      w[j] -= lr * v[j];
    }
    for (T x : w) {
      if (!std::isfinite(x)) {
        throw TrainingError("parameter " + params[i].name + " became non-finite at step " + std::to_string(state.step));
      }
    }
  }
  ++state.step;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Little-endian layout:
//   magic    8 bytes  "PXSWCKPT"
//   version  u32      1
//   config   u32 input_channels, input_height, input_width, embedding_dim,
//            num_classes, num_blocks, then num_blocks x u32 widths
//   count    u32      number of tensors
//   tensor   u32 name length, name bytes (UTF-8), u32 rank, rank x u32 dims,
//            prod(dims) x f64 values
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'P', 'X', 'S', 'W', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace ckpt_detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

inline void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline std::uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint truncated reading " + what);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint truncated reading tensor values");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace ckpt_detail

template <typename T>
void write_checkpoint(std::ostream& out, const EmbeddingNet<T>& net) {
  using namespace ckpt_detail;
  const NetConfig& c = net.config();
  out.write(kCheckpointMagic, 8);
  put_u32(out, kCheckpointVersion);
  for (int v : {c.input_channels, c.input_height, c.input_width, c.embedding_dim, c.num_classes,
                static_cast<int>(c.widths.size())}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  for (int w : c.widths) put_u32(out, static_cast<std::uint32_t>(w));
  put_u32(out, static_cast<std::uint32_t>(net.params().size()));
  for (const auto& p : net.params()) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(out, static_cast<std::uint32_t>(p.dims.size()));
    for (int d : p.dims) put_u32(out, static_cast<std::uint32_t>(d));
    for (T v : p.values) put_f64(out, static_cast<double>(v));
  }
}

template <typename T>
EmbeddingNet<T> read_checkpoint(std::istream& in) {
  using namespace ckpt_detail;
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const auto version = get_u32(in, "version");
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  NetConfig cfg;
  cfg.input_channels = static_cast<int>(get_u32(in, "config"));
  cfg.input_height = static_cast<int>(get_u32(in, "config"));
  cfg.input_width = static_cast<int>(get_u32(in, "config"));
  cfg.embedding_dim = static_cast<int>(get_u32(in, "config"));
  cfg.num_classes = static_cast<int>(get_u32(in, "config"));
  const auto blocks = get_u32(in, "config");
  if (blocks > 64) throw DataError("implausible block count in checkpoint");
  cfg.widths.clear();
  for (std::uint32_t b = 0; b < blocks; ++b) cfg.widths.push_back(static_cast<int>(get_u32(in, "widths")));
  EmbeddingNet<T> net(cfg);
  const auto count = get_u32(in, "tensor count");
  if (count != net.params().size()) throw DataError("checkpoint tensor count does not match its architecture");
  for (auto& p : net.params()) {
    const auto len = get_u32(in, "name length");
    if (len > 4096) throw DataError("implausible tensor name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw DataError("checkpoint truncated reading tensor name");
    if (name != p.name) throw DataError("checkpoint tensor '" + name + "' where '" + p.name + "' expected");
    const auto rank = get_u32(in, "rank");
    if (rank != p.dims.size()) throw DataError("rank mismatch for " + name);
    for (int d : p.dims) {
      if (get_u32(in, "dims") != static_cast<std::uint32_t>(d)) throw DataError("dims mismatch for " + name);
    }
    for (auto& v : p.values) v = static_cast<T>(get_f64(in));
  }
  return net;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const EmbeddingNet<T>& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, net);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

template <typename T>
EmbeddingNet<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint<T>(in);
}

}  // namespace pixswap
