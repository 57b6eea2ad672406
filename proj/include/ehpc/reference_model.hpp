#pragma once

#include "ehpc/errors.hpp"
#include "ehpc/tokenizer.hpp"
#include "ehpc/trace.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ehpc {

enum class PositionalScheme { Sinusoidal };

struct ModelConfig {
  int num_layers = 2;
  int num_heads = 2;
  int head_dim = 4;
  int vocab_size = ByteTokenizer::kVocabSize;
  int max_seq_len = 4096;
  std::uint64_t seed = 0;
  PositionalScheme positional = PositionalScheme::Sinusoidal;

  int model_dim() const { return head_dim * num_heads; }
  int ffn_dim() const { return 4 * model_dim(); }
  std::string model_id() const;
  /// Throws ArgumentError if any dimension is < 1.
  void validate() const;
};

/// Deterministic weight stream: std::mt19937_64 seeded with the config seed,
/// each 64-bit draw x mapped to (2 * (x >> 11) * 2^-53 - 1) * scale. The
/// engine's output sequence is fixed by the C++ standard, so weights are
/// identical on every conforming platform.
class WeightStream {
 public:
  explicit WeightStream(std::uint64_t seed) : engine_(seed) {}
  double next(double scale) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return (2.0 * unit - 1.0) * scale;
  }

 private:
  std::mt19937_64 engine_;
};

/// Sinusoidal position encoding value for (position, channel) in a d-wide model.
inline double sinusoidal_encoding(int position, int channel, int model_dim) {
  const int pair = channel / 2;
  const double freq = std::pow(10000.0, -2.0 * pair / static_cast<double>(model_dim));
  const double angle = position * freq;
  return channel % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

/// Tiny untrained decoder-only transformer used to produce attention traces
/// at desk scale. Pre-norm blocks: x += Attn(LN(x)); x += FFN(LN(x)), with a
/// parameter-free LayerNorm and a tanh-GELU feed-forward. Weights are drawn
/// from WeightStream in the order: embedding (vocab x d, row-major), then for
/// each layer Wq, Wk, Wv, Wo (d x d), W1 (d x 4d), W2 (4d x d), all row-major,
/// uniform in [-1/sqrt(d), 1/sqrt(d)].
template <typename Scalar = double>
class ReferenceModel {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct LayerWeights {
    Matrix wq, wk, wv, wo, w1, w2;
  };

  explicit ReferenceModel(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    const int d = config_.model_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    WeightStream stream(config_.seed);
    auto draw = [&](int rows, int cols) {
      Matrix m(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(stream.next(scale));
      return m;
    };
    embedding_ = draw(config_.vocab_size, d);
    layers_.reserve(static_cast<std::size_t>(config_.num_layers));
    for (int l = 0; l < config_.num_layers; ++l) {
      LayerWeights w;
      w.wq = draw(d, d);
      w.wk = draw(d, d);
      w.wv = draw(d, d);
      w.wo = draw(d, d);
      w.w1 = draw(d, config_.ffn_dim());
      w.w2 = draw(config_.ffn_dim(), d);
      layers_.push_back(std::move(w));
    }
  }

  const ModelConfig& config() const { return config_; }
  const Matrix& embedding() const { return embedding_; }
  const LayerWeights& layer(int l) const { return layers_.at(static_cast<std::size_t>(l)); }

  /// Runs the prefill pass and captures the softmax rows of the last `window`
  /// query positions for every head of each layer in `capture`. Layers past
  /// the deepest captured one are never evaluated.
  AttentionTrace forward_prefill(std::span<const std::int32_t> tokens, std::vector<int> capture,
                                 int window) const {
    const int n = static_cast<int>(tokens.size());
    if (n == 0) throw ArgumentError("forward_prefill: empty token sequence");
    if (n > config_.max_seq_len) {
      throw CapacityError("forward_prefill: " + std::to_string(n) + " tokens exceed max_seq_len " +
                          std::to_string(config_.max_seq_len));
    }
    if (window < 1 || window > n) {
      throw ArgumentError("forward_prefill: window " + std::to_string(window) +
                          " outside [1, " + std::to_string(n) + "]");
    }
    std::sort(capture.begin(), capture.end());
    capture.erase(std::unique(capture.begin(), capture.end()), capture.end());
    for (int l : capture) {
      if (l < 0 || l >= config_.num_layers) {
        throw ArgumentError("forward_prefill: capture layer " + std::to_string(l) +
                            " outside [0, " + std::to_string(config_.num_layers) + ")");
      }
    }
    for (auto id : tokens) {
      if (id < 0 || id >= config_.vocab_size) {
        throw ArgumentError("forward_prefill: token id " + std::to_string(id) +
                            " outside vocabulary");
      }
    }

    const int d = config_.model_dim();
    const int dk = config_.head_dim;
    const int heads = config_.num_heads;
    AttentionTrace trace = make_empty_trace(config_.model_id(), config_.num_layers, heads, n,
                                            window, capture);
    trace.token_ids.assign(tokens.begin(), tokens.end());

    Matrix x(n, d);
    for (int i = 0; i < n; ++i) {
      x.row(i) = embedding_.row(tokens[static_cast<std::size_t>(i)]);
      for (int c = 0; c < d; ++c) {
        x(i, c) += static_cast<Scalar>(sinusoidal_encoding(i, c, d));
      }
    }

    const int last = capture.empty() ? -1 : capture.back();
    const Scalar inv_sqrt_dk = Scalar(1) / std::sqrt(static_cast<Scalar>(dk));
    Matrix probs(n, n);
    Matrix context(n, d);
    for (int l = 0; l <= last; ++l) {
      const LayerWeights& w = layers_[static_cast<std::size_t>(l)];
      const Matrix h = layer_norm(x);
      const Matrix q = h * w.wq;
      const Matrix k = h * w.wk;
      const Matrix v = h * w.wv;
      const int slot = trace.slot(l);
      for (int head = 0; head < heads; ++head) {
        const auto qh = q.middleCols(head * dk, dk);
        const auto kh = k.middleCols(head * dk, dk);
        probs.noalias() = (qh * kh.transpose()) * inv_sqrt_dk;
        causal_softmax(probs);
        context.middleCols(head * dk, dk).noalias() = probs * v.middleCols(head * dk, dk);
        if (slot >= 0) {
          trace.cells[static_cast<std::size_t>(slot) * heads + head] =
              probs.bottomRows(window).template cast<float>();
        }
      }
      x.noalias() += context * w.wo;
      Matrix hidden = layer_norm(x) * w.w1;
      hidden = hidden.unaryExpr([](Scalar t) { return gelu(t); });
      x.noalias() += hidden * w.w2;
    }
    return trace;
  }

  AttentionTrace forward_prefill(std::span<const std::int32_t> tokens, int window) const {
    std::vector<int> all(static_cast<std::size_t>(config_.num_layers));
    for (int l = 0; l < config_.num_layers; ++l) all[static_cast<std::size_t>(l)] = l;
    return forward_prefill(tokens, std::move(all), window);
  }

  static Matrix layer_norm(const Matrix& x) {
    constexpr Scalar kEps = Scalar(1e-5);
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Scalar mean = x.row(i).mean();
      const auto centered = x.row(i).array() - mean;
      const Scalar var = centered.square().mean();
      out.row(i) = centered / std::sqrt(var + kEps);
    }
    return out;
  }

  static Scalar gelu(Scalar t) {
    constexpr Scalar kC = Scalar(0.7978845608028654);  // sqrt(2/pi)
    return Scalar(0.5) * t * (Scalar(1) + std::tanh(kC * (t + Scalar(0.044715) * t * t * t)));
  }

  /// Row-wise softmax over the causal prefix; entries above the diagonal are
  /// set to exactly zero.
  static void causal_softmax(Matrix& scores) {
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      auto prefix = scores.row(i).head(i + 1);
      const Scalar m = prefix.maxCoeff();
      prefix = (prefix.array() - m).exp();
      prefix /= prefix.sum();
      scores.row(i).tail(scores.cols() - i - 1).setZero();
    }
  }

 private:
  ModelConfig config_;
  Matrix embedding_;
  std::vector<LayerWeights> layers_;
};

}  // namespace ehpc
