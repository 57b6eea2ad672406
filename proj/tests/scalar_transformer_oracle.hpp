#pragma once

// Plain-loop re-implementation of the reference model's forward pass, used
// only to cross-check attention rows. It shares nothing with the library but
// the documented weight-stream and architecture description.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ehpc::testing {

class ScalarTransformerOracle {
 public:
  using Mat = std::vector<std::vector<double>>;

  ScalarTransformerOracle(int layers, int heads, int head_dim, int vocab, std::uint64_t seed)
      : layers_(layers), heads_(heads), dk_(head_dim), d_(heads * head_dim), vocab_(vocab) {
    std::mt19937_64 engine(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_));
    auto draw = [&](int rows, int cols) {
      Mat m(static_cast<std::size_t>(rows), std::vector<double>(static_cast<std::size_t>(cols)));
      for (auto& row : m)
        for (auto& v : row) {
          const std::uint64_t x = engine();
          v = (2.0 * (static_cast<double>(x >> 11) / 9007199254740992.0) - 1.0) * scale;
        }
      return m;
    };
    emb_ = draw(vocab_, d_);
    for (int l = 0; l < layers_; ++l) {
      Layer w;
      w.wq = draw(d_, d_);
      w.wk = draw(d_, d_);
      w.wv = draw(d_, d_);
      w.wo = draw(d_, d_);
      w.w1 = draw(d_, 4 * d_);
      w.w2 = draw(4 * d_, d_);
      w_.push_back(std::move(w));
    }
  }

  /// Softmax attention row of `query` for (layer, head).
  std::vector<double> attention_row(const std::vector<int>& tokens, int layer, int head,
                                    int query) const {
    const int n = static_cast<int>(tokens.size());
    Mat x(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d_)));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d_; ++c) {
        const double freq = std::pow(10000.0, -static_cast<double>(2 * (c / 2)) / d_);
        const double pe = (c % 2 == 0) ? std::sin(i * freq) : std::cos(i * freq);
        x[i][c] = emb_[static_cast<std::size_t>(tokens[i])][c] + pe;
      }

    for (int l = 0; l <= layer; ++l) {
      const Layer& w = w_[static_cast<std::size_t>(l)];
      const Mat h = norm(x);
      const Mat q = mul(h, w.wq), k = mul(h, w.wk), v = mul(h, w.wv);
      Mat ctx(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d_), 0.0));
      for (int hd = 0; hd < heads_; ++hd) {
        for (int i = 0; i < n; ++i) {
          std::vector<double> p(static_cast<std::size_t>(n), 0.0);
          double mx = -1e300;
          for (int j = 0; j <= i; ++j) {
            double s = 0;
            for (int c = 0; c < dk_; ++c) s += q[i][hd * dk_ + c] * k[j][hd * dk_ + c];
            p[j] = s / std::sqrt(static_cast<double>(dk_));
            mx = std::max(mx, p[j]);
          }
          double z = 0;
          for (int j = 0; j <= i; ++j) {
            p[j] = std::exp(p[j] - mx);
            z += p[j];
          }
          for (int j = 0; j <= i; ++j) p[j] /= z;
          if (l == layer && hd == head && i == query) return p;
          for (int j = 0; j <= i; ++j)
            for (int c = 0; c < dk_; ++c) ctx[i][hd * dk_ + c] += p[j] * v[j][hd * dk_ + c];
        }
      }
      const Mat attn = mul(ctx, w.wo);
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d_; ++c) x[i][c] += attn[i][c];
      Mat hidden = mul(norm(x), w.w1);
      for (auto& row : hidden)
        for (auto& t : row) {
          t = 0.5 * t * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (t + 0.044715 * t * t * t)));
        }
      const Mat ffn = mul(hidden, w.w2);
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d_; ++c) x[i][c] += ffn[i][c];
    }
    return {};
  }

 private:
  struct Layer {
    Mat wq, wk, wv, wo, w1, w2;
  };

  static Mat mul(const Mat& a, const Mat& b) {
    Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t k = 0; k < b.size(); ++k)
        for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
  }

  static Mat norm(const Mat& x) {
    Mat out = x;
    for (auto& row : out) {
      double mean = 0;
      for (double v : row) mean += v;
      mean /= static_cast<double>(row.size());
      double var = 0;
      for (double v : row) var += (v - mean) * (v - mean);
      var /= static_cast<double>(row.size());
      for (double& v : row) v = (v - mean) / std::sqrt(var + 1e-5);
    }
    return out;
  }

  int layers_, heads_, dk_, d_, vocab_;
  Mat emb_;
  std::vector<Layer> w_;
};

}  // namespace ehpc::testing
