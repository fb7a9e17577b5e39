#include "sca2d/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "sca2d/threading.hpp"

namespace sca2d::nn {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 finalizer, chained over the inputs
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(a ^ mix(b ^ mix(c)));
}

namespace {

double uniform_sym(std::mt19937_64& rng, double limit) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  return dist(rng);
}

// ---------------------------------------------------------------------------
// Conv2d

class Conv2dLayer final : public Layer {
 public:
  Conv2dLayer(int filters, int kh, int kw, double l2, Padding padding)
      : filters_(filters), kh_(kh), kw_(kw), l2_(l2), padding_(padding) {
    if (filters < 1 || kh < 1 || kw < 1)
      throw std::invalid_argument("conv2d geometry must be positive");
  }

  std::string name() const override { return "conv2d"; }

  LayerSpec spec() const override {
    LayerSpec s;
    s.type = LayerType::Conv2d;
    s.filters = filters_;
    s.kh = kh_;
    s.kw = kw_;
    s.l2 = l2_;
    s.padding = padding_;
    return s;
  }

  Shape prepare(Shape in) override {
    in_ = in;
    if (padding_ == Padding::Valid) {
      if (in.h < kh_ || in.w < kw_)
        throw std::invalid_argument("conv2d kernel larger than its input");
      out_ = {in.h - kh_ + 1, in.w - kw_ + 1, filters_};
      pad_top_ = pad_left_ = 0;
    } else {
      out_ = {in.h, in.w, filters_};
      pad_top_ = (kh_ - 1) / 2;
      pad_left_ = (kw_ - 1) / 2;
    }
    n_weights_ = static_cast<std::size_t>(filters_) * kh_ * kw_ * in.c;
    params_.assign(n_weights_ + filters_, 0.0);
    grads_.assign(params_.size(), 0.0);
    return out_;
  }

  void init_params(std::mt19937_64& rng) override {
    const double limit = std::sqrt(6.0 / (static_cast<double>(kh_) * kw_ * in_.c));
    for (std::size_t i = 0; i < n_weights_; ++i) params_[i] = uniform_sym(rng, limit);
    std::fill(params_.begin() + n_weights_, params_.end(), 0.0);
  }

  void forward(const Batch& in, Batch& out, const ForwardCtx&, Aux*) const override {
    out.resize(in.n, out_);
    const int cin = in_.c;
    const std::size_t kvol = static_cast<std::size_t>(kh_) * kw_ * cin;
    const double* bias = params_.data() + n_weights_;
    for (int e = 0; e < in.n; ++e) {
      const double* src = in.example(e);
      double* dst = out.example(e);
      for (int y = 0; y < out_.h; ++y) {
        for (int x = 0; x < out_.w; ++x) {
          double* o = dst + (static_cast<std::size_t>(y) * out_.w + x) * filters_;
          for (int f = 0; f < filters_; ++f) {
            const double* wf = params_.data() + f * kvol;
            double acc = bias[f];
            for (int i = 0; i < kh_; ++i) {
              const int sy = y + i - pad_top_;
              if (sy < 0 || sy >= in_.h) continue;
              for (int j = 0; j < kw_; ++j) {
                const int sx = x + j - pad_left_;
                if (sx < 0 || sx >= in_.w) continue;
                const double* s = src + (static_cast<std::size_t>(sy) * in_.w + sx) * cin;
                const double* w = wf + (static_cast<std::size_t>(i) * kw_ + j) * cin;
                for (int c = 0; c < cin; ++c) acc += s[c] * w[c];
              }
            }
            o[f] = acc;
          }
        }
      }
    }
  }

  void backward(const Batch& in, const Batch& dout, Batch& din, const Aux*) override {
    din.resize(in.n, in_);
    const int cin = in_.c;
    const std::size_t kvol = static_cast<std::size_t>(kh_) * kw_ * cin;
    double* dbias = grads_.data() + n_weights_;
    for (int e = 0; e < in.n; ++e) {
      const double* src = in.example(e);
      const double* do_ = dout.example(e);
      double* di = din.example(e);
      for (int y = 0; y < out_.h; ++y) {
        for (int x = 0; x < out_.w; ++x) {
          const double* g = do_ + (static_cast<std::size_t>(y) * out_.w + x) * filters_;
          for (int f = 0; f < filters_; ++f) {
            const double gf = g[f];
            if (gf == 0.0) continue;
            dbias[f] += gf;
            const double* wf = params_.data() + f * kvol;
            double* dwf = grads_.data() + f * kvol;
            for (int i = 0; i < kh_; ++i) {
              const int sy = y + i - pad_top_;
              if (sy < 0 || sy >= in_.h) continue;
              for (int j = 0; j < kw_; ++j) {
                const int sx = x + j - pad_left_;
                if (sx < 0 || sx >= in_.w) continue;
                const std::size_t soff = (static_cast<std::size_t>(sy) * in_.w + sx) * cin;
                const std::size_t woff = (static_cast<std::size_t>(i) * kw_ + j) * cin;
                for (int c = 0; c < cin; ++c) {
                  dwf[woff + c] += src[soff + c] * gf;
                  di[soff + c] += wf[woff + c] * gf;
                }
              }
            }
          }
        }
      }
    }
  }

  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }
  std::span<double> grads() override { return grads_; }

  double l2_penalty() const override {
    if (l2_ == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n_weights_; ++i) s += params_[i] * params_[i];
    return l2_ * s;
  }

  void add_l2_grads() override {
    if (l2_ == 0.0) return;
    for (std::size_t i = 0; i < n_weights_; ++i) grads_[i] += 2.0 * l2_ * params_[i];
  }

 private:
  int filters_, kh_, kw_;
  double l2_;
  Padding padding_;
  Shape in_, out_;
  int pad_top_ = 0, pad_left_ = 0;
  std::size_t n_weights_ = 0;
  std::vector<double> params_, grads_;
};

// ---------------------------------------------------------------------------
// BatchNorm (per channel over batch and spatial dims)

struct BnAux final : Aux {
  std::vector<double> mean, inv_std;
};

class BatchNormLayer final : public Layer {
 public:
  BatchNormLayer(double momentum, double eps) : momentum_(momentum), eps_(eps) {}

  std::string name() const override { return "batch_norm"; }

  LayerSpec spec() const override {
    LayerSpec s;
    s.type = LayerType::BatchNorm;
    s.momentum = momentum_;
    s.eps = eps_;
    return s;
  }

  Shape prepare(Shape in) override {
    shape_ = in;
    const int c = in.c;
    params_.assign(2 * c, 0.0);
    std::fill(params_.begin(), params_.begin() + c, 1.0);  // gamma
    grads_.assign(2 * c, 0.0);
    running_.assign(2 * c, 0.0);
    std::fill(running_.begin() + c, running_.end(), 1.0);  // running var
    return in;
  }

  std::unique_ptr<Aux> make_aux() const override { return std::make_unique<BnAux>(); }

  void forward(const Batch& in, Batch& out, const ForwardCtx& ctx, Aux* aux) const override {
    out.resize(in.n, shape_);
    const int c = shape_.c;
    const std::size_t spatial = static_cast<std::size_t>(shape_.h) * shape_.w;
    const std::size_t m = static_cast<std::size_t>(in.n) * spatial;
    const double* gamma = params_.data();
    const double* beta = params_.data() + c;

    std::vector<double> mean(c, 0.0), var(c, 0.0), inv_std(c, 0.0);
    if (ctx.training) {
      if (m < 2) throw std::runtime_error("batch of one in train mode");
      for (int e = 0; e < in.n; ++e) {
        const double* src = in.example(e);
        for (std::size_t s = 0; s < spatial; ++s)
          for (int ch = 0; ch < c; ++ch) mean[ch] += src[s * c + ch];
      }
      for (int ch = 0; ch < c; ++ch) mean[ch] /= static_cast<double>(m);
      for (int e = 0; e < in.n; ++e) {
        const double* src = in.example(e);
        for (std::size_t s = 0; s < spatial; ++s)
          for (int ch = 0; ch < c; ++ch) {
            const double d = src[s * c + ch] - mean[ch];
            var[ch] += d * d;
          }
      }
      for (int ch = 0; ch < c; ++ch) var[ch] /= static_cast<double>(m);  // biased
      if (ctx.update_running_stats) {
        for (int ch = 0; ch < c; ++ch) {
          running_[ch] = momentum_ * running_[ch] + (1.0 - momentum_) * mean[ch];
          running_[c + ch] = momentum_ * running_[c + ch] + (1.0 - momentum_) * var[ch];
        }
      }
    } else {
      for (int ch = 0; ch < c; ++ch) {
        mean[ch] = running_[ch];
        var[ch] = running_[c + ch];
      }
    }
    for (int ch = 0; ch < c; ++ch) inv_std[ch] = 1.0 / std::sqrt(var[ch] + eps_);

    for (int e = 0; e < in.n; ++e) {
      const double* src = in.example(e);
      double* dst = out.example(e);
      for (std::size_t s = 0; s < spatial; ++s)
        for (int ch = 0; ch < c; ++ch)
          dst[s * c + ch] = gamma[ch] * (src[s * c + ch] - mean[ch]) * inv_std[ch] + beta[ch];
    }

    if (aux != nullptr) {
      auto& bn = static_cast<BnAux&>(*aux);
      bn.mean = std::move(mean);
      bn.inv_std = std::move(inv_std);
    }
  }

  void backward(const Batch& in, const Batch& dout, Batch& din, const Aux* aux) override {
    if (aux == nullptr) throw std::logic_error("batch_norm backward needs forward aux");
    const auto& bn = static_cast<const BnAux&>(*aux);
    din.resize(in.n, shape_);
    const int c = shape_.c;
    const std::size_t spatial = static_cast<std::size_t>(shape_.h) * shape_.w;
    const double m = static_cast<double>(in.n) * spatial;
    const double* gamma = params_.data();
    double* dgamma = grads_.data();
    double* dbeta = grads_.data() + c;

    // dgamma/dbeta plus the per-channel sums the input gradient needs
    std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
    for (int e = 0; e < in.n; ++e) {
      const double* src = in.example(e);
      const double* dy = dout.example(e);
      for (std::size_t s = 0; s < spatial; ++s)
        for (int ch = 0; ch < c; ++ch) {
          const double xhat = (src[s * c + ch] - bn.mean[ch]) * bn.inv_std[ch];
          sum_dy[ch] += dy[s * c + ch];
          sum_dy_xhat[ch] += dy[s * c + ch] * xhat;
        }
    }
    for (int ch = 0; ch < c; ++ch) {
      dgamma[ch] += sum_dy_xhat[ch];
      dbeta[ch] += sum_dy[ch];
    }
    // dx = gamma * inv_std * (dy - mean(dy) - xhat * mean(dy * xhat))
    for (int e = 0; e < in.n; ++e) {
      const double* src = in.example(e);
      const double* dy = dout.example(e);
      double* dx = din.example(e);
      for (std::size_t s = 0; s < spatial; ++s)
        for (int ch = 0; ch < c; ++ch) {
          const double xhat = (src[s * c + ch] - bn.mean[ch]) * bn.inv_std[ch];
          dx[s * c + ch] = gamma[ch] * bn.inv_std[ch] *
                           (dy[s * c + ch] - sum_dy[ch] / m - xhat * sum_dy_xhat[ch] / m);
        }
    }
  }

  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }
  std::span<double> grads() override { return grads_; }
  std::span<double> extra_state() override { return running_; }
  std::span<const double> extra_state() const override { return running_; }

 private:
  double momentum_, eps_;
  Shape shape_;
  std::vector<double> params_, grads_;
  mutable std::vector<double> running_;  // mean then var; written only while training
};

// ---------------------------------------------------------------------------
// ReLU

class ReluLayer final : public Layer {
 public:
  std::string name() const override { return "relu"; }
  LayerSpec spec() const override {
    LayerSpec s;
    s.type = LayerType::Relu;
    return s;
  }
  Shape prepare(Shape in) override {
    shape_ = in;
    return in;
  }
  void forward(const Batch& in, Batch& out, const ForwardCtx&, Aux*) const override {
    out.resize(in.n, shape_);
    for (std::size_t i = 0; i < in.data.size(); ++i)
      out.data[i] = in.data[i] > 0.0 ? in.data[i] : 0.0;
  }
  void backward(const Batch& in, const Batch& dout, Batch& din, const Aux*) override {
    din.resize(in.n, shape_);
    for (std::size_t i = 0; i < in.data.size(); ++i)
      din.data[i] = in.data[i] > 0.0 ? dout.data[i] : 0.0;
  }

 private:
  Shape shape_;
};

// ---------------------------------------------------------------------------
// MaxPool

struct PoolAux final : Aux {
  std::vector<std::size_t> argmax;  // flat input index per output element
};

class MaxPoolLayer final : public Layer {
 public:
  MaxPoolLayer(int ph, int pw, int sh, int sw)
      : ph_(ph), pw_(pw), sh_(sh < 1 ? ph : sh), sw_(sw < 1 ? pw : sw) {
    if (ph_ < 1 || pw_ < 1) throw std::invalid_argument("pool window must be positive");
  }

  std::string name() const override { return "max_pool"; }

  LayerSpec spec() const override {
    LayerSpec s;
    s.type = LayerType::MaxPool;
    s.ph = ph_;
    s.pw = pw_;
    s.sh = sh_;
    s.sw = sw_;
    return s;
  }

  Shape prepare(Shape in) override {
    in_ = in;
    if (in.h < ph_ || in.w < pw_)
      throw std::invalid_argument("pool window larger than its input");
    out_ = {(in.h - ph_) / sh_ + 1, (in.w - pw_) / sw_ + 1, in.c};
    return out_;
  }

  std::unique_ptr<Aux> make_aux() const override { return std::make_unique<PoolAux>(); }

  void forward(const Batch& in, Batch& out, const ForwardCtx&, Aux* aux) const override {
    out.resize(in.n, out_);
    PoolAux* pa = static_cast<PoolAux*>(aux);
    if (pa != nullptr) pa->argmax.assign(out.data.size(), 0);
    const int c = in_.c;
    for (int e = 0; e < in.n; ++e) {
      const double* src = in.example(e);
      double* dst = out.example(e);
      const std::size_t base = static_cast<std::size_t>(e) * in.example_size();
      for (int y = 0; y < out_.h; ++y)
        for (int x = 0; x < out_.w; ++x)
          for (int ch = 0; ch < c; ++ch) {
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_idx = 0;
            for (int i = 0; i < ph_; ++i)
              for (int j = 0; j < pw_; ++j) {
                const std::size_t idx =
                    (static_cast<std::size_t>(y * sh_ + i) * in_.w + (x * sw_ + j)) * c + ch;
                if (src[idx] > best) {  // first maximum wins ties
                  best = src[idx];
                  best_idx = idx;
                }
              }
            const std::size_t o = (static_cast<std::size_t>(y) * out_.w + x) * c + ch;
            dst[o] = best;
            if (pa != nullptr) pa->argmax[static_cast<std::size_t>(e) * out.example_size() + o] =
                base + best_idx;
          }
    }
  }

  void backward(const Batch& in, const Batch& dout, Batch& din, const Aux* aux) override {
    if (aux == nullptr) throw std::logic_error("max_pool backward needs forward aux");
    const auto& pa = static_cast<const PoolAux&>(*aux);
    din.resize(in.n, in_);
    for (std::size_t o = 0; o < dout.data.size(); ++o) din.data[pa.argmax[o]] += dout.data[o];
  }

 private:
  int ph_, pw_, sh_, sw_;
  Shape in_, out_;
};

// ---------------------------------------------------------------------------
// Dropout (inverted scaling)

struct DropoutAux final : Aux {
  std::vector<double> mask;  // 0 or 1/(1-rate)
};

class DropoutLayer final : public Layer {
 public:
  explicit DropoutLayer(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0,1)");
  }

  std::string name() const override { return "dropout"; }

  LayerSpec spec() const override {
    LayerSpec s;
    s.type = LayerType::Dropout;
    s.rate = rate_;
    return s;
  }

  Shape prepare(Shape in) override {
    shape_ = in;
    return in;
  }

  std::unique_ptr<Aux> make_aux() const override { return std::make_unique<DropoutAux>(); }

  void forward(const Batch& in, Batch& out, const ForwardCtx& ctx, Aux* aux) const override {
    out.resize(in.n, shape_);
    if (!ctx.training || rate_ == 0.0 || ctx.identity_dropout) {
      std::copy(in.data.begin(), in.data.end(), out.data.begin());
      if (aux != nullptr)
        static_cast<DropoutAux*>(aux)->mask.assign(in.data.size(), 1.0);
      return;
    }
    if (ctx.rng == nullptr) throw std::logic_error("dropout needs an rng while training");
    const double keep = 1.0 - rate_;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    DropoutAux* da = static_cast<DropoutAux*>(aux);
    if (da != nullptr) da->mask.resize(in.data.size());
    for (std::size_t i = 0; i < in.data.size(); ++i) {
      const double m = unit(*ctx.rng) < keep ? 1.0 / keep : 0.0;
      out.data[i] = in.data[i] * m;
      if (da != nullptr) da->mask[i] = m;
    }
  }

  void backward(const Batch& in, const Batch& dout, Batch& din, const Aux* aux) override {
    if (aux == nullptr) throw std::logic_error("dropout backward needs forward aux");
    const auto& da = static_cast<const DropoutAux&>(*aux);
    din.resize(in.n, shape_);
    for (std::size_t i = 0; i < dout.data.size(); ++i) din.data[i] = dout.data[i] * da.mask[i];
  }

 private:
  double rate_;
  Shape shape_;
};

// ---------------------------------------------------------------------------
// Flatten

class FlattenLayer final : public Layer {
 public:
  std::string name() const override { return "flatten"; }
  LayerSpec spec() const override {
    LayerSpec s;
    s.type = LayerType::Flatten;
    return s;
  }
  Shape prepare(Shape in) override {
    in_ = in;
    out_ = {1, 1, static_cast<int>(in.size())};
    return out_;
  }
  void forward(const Batch& in, Batch& out, const ForwardCtx&, Aux*) const override {
    out.resize(in.n, out_);
    std::copy(in.data.begin(), in.data.end(), out.data.begin());
  }
  void backward(const Batch& in, const Batch& dout, Batch& din, const Aux*) override {
    din.resize(in.n, in_);
    std::copy(dout.data.begin(), dout.data.end(), din.data.begin());
  }

 private:
  Shape in_, out_;
};

// ---------------------------------------------------------------------------
// Dense

class DenseLayer final : public Layer {
 public:
  DenseLayer(int units, Init init) : units_(units), init_(init) {
    if (units < 1) throw std::invalid_argument("dense units must be positive");
  }

  std::string name() const override { return "dense"; }

  LayerSpec spec() const override {
    LayerSpec s;
    s.type = LayerType::Dense;
    s.units = units_;
    s.init = init_;
    return s;
  }

  Shape prepare(Shape in) override {
    if (in.h != 1 || in.w != 1)
      throw std::invalid_argument("dense expects flattened input");
    fin_ = in.c;
    out_ = {1, 1, units_};
    params_.assign(static_cast<std::size_t>(units_) * fin_ + units_, 0.0);
    grads_.assign(params_.size(), 0.0);
    return out_;
  }

  void init_params(std::mt19937_64& rng) override {
    const double limit = init_ == Init::HeUniform
                             ? std::sqrt(6.0 / fin_)
                             : std::sqrt(6.0 / (static_cast<double>(fin_) + units_));
    const std::size_t nw = static_cast<std::size_t>(units_) * fin_;
    for (std::size_t i = 0; i < nw; ++i) params_[i] = uniform_sym(rng, limit);
    std::fill(params_.begin() + nw, params_.end(), 0.0);
  }

  void forward(const Batch& in, Batch& out, const ForwardCtx&, Aux*) const override {
    out.resize(in.n, out_);
    const double* bias = params_.data() + static_cast<std::size_t>(units_) * fin_;
    for (int e = 0; e < in.n; ++e) {
      const double* x = in.example(e);
      double* y = out.example(e);
      for (int u = 0; u < units_; ++u) {
        const double* w = params_.data() + static_cast<std::size_t>(u) * fin_;
        double acc = bias[u];
        for (int j = 0; j < fin_; ++j) acc += w[j] * x[j];
        y[u] = acc;
      }
    }
  }

  void backward(const Batch& in, const Batch& dout, Batch& din, const Aux*) override {
    din.resize(in.n, {1, 1, fin_});
    double* dbias = grads_.data() + static_cast<std::size_t>(units_) * fin_;
    for (int e = 0; e < in.n; ++e) {
      const double* x = in.example(e);
      const double* dy = dout.example(e);
      double* dx = din.example(e);
      for (int u = 0; u < units_; ++u) {
        const double g = dy[u];
        if (g == 0.0) continue;
        dbias[u] += g;
        const double* w = params_.data() + static_cast<std::size_t>(u) * fin_;
        double* dw = grads_.data() + static_cast<std::size_t>(u) * fin_;
        for (int j = 0; j < fin_; ++j) {
          dw[j] += g * x[j];
          dx[j] += g * w[j];
        }
      }
    }
  }

  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }
  std::span<double> grads() override { return grads_; }

 private:
  int units_, fin_ = 0;
  Init init_;
  Shape out_;
  std::vector<double> params_, grads_;
};

// ---------------------------------------------------------------------------
// Softmax

class SoftmaxLayer final : public Layer {
 public:
  std::string name() const override { return "softmax"; }
  LayerSpec spec() const override {
    LayerSpec s;
    s.type = LayerType::Softmax;
    return s;
  }
  Shape prepare(Shape in) override {
    if (in.h != 1 || in.w != 1) throw std::invalid_argument("softmax expects flattened input");
    shape_ = in;
    return in;
  }
  void forward(const Batch& in, Batch& out, const ForwardCtx&, Aux*) const override {
    out.resize(in.n, shape_);
    const int k = shape_.c;
    for (int e = 0; e < in.n; ++e) {
      const double* z = in.example(e);
      double* p = out.example(e);
      const double zmax = *std::max_element(z, z + k);
      double sum = 0.0;
      for (int i = 0; i < k; ++i) {
        p[i] = std::exp(z[i] - zmax);
        sum += p[i];
      }
      for (int i = 0; i < k; ++i) p[i] /= sum;
    }
  }
  void backward(const Batch& in, const Batch& dout, Batch& din, const Aux*) override {
    // full Jacobian; the training path bypasses this via the fused
    // softmax/cross-entropy gradient
    din.resize(in.n, shape_);
    Batch p;
    forward(in, p, ForwardCtx{}, nullptr);
    const int k = shape_.c;
    for (int e = 0; e < in.n; ++e) {
      const double* pe = p.example(e);
      const double* dy = dout.example(e);
      double* dx = din.example(e);
      double dot = 0.0;
      for (int i = 0; i < k; ++i) dot += dy[i] * pe[i];
      for (int i = 0; i < k; ++i) dx[i] = pe[i] * (dy[i] - dot);
    }
  }

 private:
  Shape shape_;
};

}  // namespace

// ---------------------------------------------------------------------------
// factories

std::unique_ptr<Layer> conv2d(int filters, int kh, int kw, double l2, Padding padding) {
  return std::make_unique<Conv2dLayer>(filters, kh, kw, l2, padding);
}
std::unique_ptr<Layer> batch_norm(double momentum, double eps) {
  return std::make_unique<BatchNormLayer>(momentum, eps);
}
std::unique_ptr<Layer> relu() { return std::make_unique<ReluLayer>(); }
std::unique_ptr<Layer> max_pool(int ph, int pw, int sh, int sw) {
  return std::make_unique<MaxPoolLayer>(ph, pw, sh, sw);
}
std::unique_ptr<Layer> dropout(double rate) { return std::make_unique<DropoutLayer>(rate); }
std::unique_ptr<Layer> flatten() { return std::make_unique<FlattenLayer>(); }
std::unique_ptr<Layer> dense(int units, Init init) {
  return std::make_unique<DenseLayer>(units, init);
}
std::unique_ptr<Layer> softmax() { return std::make_unique<SoftmaxLayer>(); }

std::unique_ptr<Layer> make_layer(const LayerSpec& s) {
  switch (s.type) {
    case LayerType::Conv2d: return conv2d(s.filters, s.kh, s.kw, s.l2, s.padding);
    case LayerType::BatchNorm: return batch_norm(s.momentum, s.eps);
    case LayerType::Relu: return relu();
    case LayerType::MaxPool: return max_pool(s.ph, s.pw, s.sh, s.sw);
    case LayerType::Dropout: return dropout(s.rate);
    case LayerType::Flatten: return flatten();
    case LayerType::Dense: return dense(s.units, s.init);
    case LayerType::Softmax: return softmax();
  }
  throw std::invalid_argument("unknown layer type");
}

// ---------------------------------------------------------------------------
// Network

void Network::add(std::unique_ptr<Layer> layer) {
  if (built_) throw std::logic_error("network already built");
  layers_.push_back(std::move(layer));
}

void Network::build(Shape input, std::uint64_t seed) {
  if (layers_.empty()) throw std::logic_error("empty network");
  input_ = input;
  Shape s = input;
  for (auto& l : layers_) s = l->prepare(s);
  output_ = s;
  std::mt19937_64 rng(seed);
  for (auto& l : layers_) l->init_params(rng);
  acts_.assign(layers_.size() + 1, Batch{});
  auxs_.clear();
  for (auto& l : layers_) auxs_.push_back(l->make_aux());
  built_ = true;
}

double Network::penalty() const {
  double s = 0.0;
  for (const auto& l : layers_) s += l->l2_penalty();
  return s;
}

std::vector<LayerSpec> Network::describe() const {
  std::vector<LayerSpec> out;
  out.reserve(layers_.size());
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

void Network::forward(const Batch& in, Batch& out, const ForwardCtx& ctx) const {
  if (!built_) throw std::logic_error("network not built");
  Batch a = in, b;
  for (const auto& l : layers_) {
    l->forward(a, b, ctx, nullptr);
    std::swap(a, b);
  }
  out = std::move(a);
}

namespace {

// Numerically safe mean cross-entropy straight from the logits.
double mean_nll_from_logits(const Batch& logits, const std::vector<std::uint8_t>& labels) {
  const int k = static_cast<int>(logits.example_size());
  double total = 0.0;
  for (int e = 0; e < logits.n; ++e) {
    const double* z = logits.example(e);
    const double zmax = *std::max_element(z, z + k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += std::exp(z[i] - zmax);
    total += (zmax + std::log(sum)) - z[labels[e]];
  }
  return total / logits.n;
}

}  // namespace

double Network::forward_loss(const Batch& in, const std::vector<std::uint8_t>& labels,
                             const ForwardCtx& ctx) {
  if (!built_) throw std::logic_error("network not built");
  if (labels.size() != static_cast<std::size_t>(in.n))
    throw std::invalid_argument("one label per example");
  if (layers_.empty() || layers_.back()->spec().type != LayerType::Softmax)
    throw std::logic_error("loss expects a softmax head");
  acts_[0] = in;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->forward(acts_[i], acts_[i + 1], ctx, auxs_[i].get());
  return mean_nll_from_logits(acts_[layers_.size() - 1], labels) + penalty();
}

void Network::backward(const Batch& in, const std::vector<std::uint8_t>& labels) {
  (void)in;  // activations were captured by forward_loss
  const std::size_t nl = layers_.size();
  for (auto& l : layers_) l->zero_grads();

  // fused softmax + cross-entropy: dL/dlogits = (p - onehot) / n
  const Batch& probs = acts_[nl];
  Batch& dlogits = dact_a_;
  dlogits.resize(probs.n, probs.shape);
  const int k = static_cast<int>(probs.example_size());
  for (int e = 0; e < probs.n; ++e) {
    const double* p = probs.example(e);
    double* d = dlogits.example(e);
    for (int i = 0; i < k; ++i) d[i] = p[i] / probs.n;
    d[labels[e]] -= 1.0 / probs.n;
  }

  Batch* dout = &dact_a_;
  Batch* din = &dact_b_;
  for (std::size_t i = nl - 1; i-- > 0;) {  // softmax (last layer) is fused away
    layers_[i]->backward(acts_[i], *dout, *din, auxs_[i].get());
    std::swap(dout, din);
  }
  for (auto& l : layers_) l->add_l2_grads();
}

Posteriors Network::predict_proba(const ImageSet& images) const {
  if (!built_) throw std::logic_error("network not built");
  const Shape expect{images.height, images.width, images.channels};
  if (!(expect == input_)) throw std::invalid_argument("image shape differs from network input");
  if (output_.size() != static_cast<std::size_t>(kNumClasses))
    throw std::logic_error("network head is not 256-way");

  Posteriors out;
  out.rows = images.count;
  out.p.assign(images.count * kNumClasses, 0.0);
  const ForwardCtx ctx;  // inference: running stats, no dropout

  parallel_for(images.count, [&](std::size_t begin, std::size_t end) {
    constexpr std::size_t kChunk = 64;  // bounds activation memory
    Batch in, result;
    for (std::size_t at = begin; at < end; at += kChunk) {
      const std::size_t n = std::min(kChunk, end - at);
      in.resize(static_cast<int>(n), input_);
      for (std::size_t i = 0; i < n; ++i)
        std::copy(images.example(at + i), images.example(at + i) + images.example_size(),
                  in.example(static_cast<int>(i)));
      forward(in, result, ctx);
      std::copy(result.data.begin(), result.data.end(), out.row(at));
    }
  });
  return out;
}

std::vector<double> Network::snapshot() const {
  std::vector<double> snap;
  for (const auto& l : layers_) {
    auto p = std::as_const(*l).params();
    snap.insert(snap.end(), p.begin(), p.end());
    auto e = std::as_const(*l).extra_state();
    snap.insert(snap.end(), e.begin(), e.end());
  }
  return snap;
}

void Network::restore(const std::vector<double>& snap) {
  std::size_t at = 0;
  for (auto& l : layers_) {
    for (double& v : l->params()) v = snap.at(at++);
    for (double& v : l->extra_state()) v = snap.at(at++);
  }
  if (at != snap.size()) throw std::invalid_argument("snapshot size mismatch");
}

Network network_from_specs(const std::vector<LayerSpec>& specs) {
  Network net;
  for (const LayerSpec& s : specs) net.add(make_layer(s));
  return net;
}

Network make_table_cnn(Shape input) {
  const bool one_d = input.h == 1;
  const int k1h = one_d ? 1 : 5, k2h = one_d ? 1 : 3;
  const int p_h = one_d ? 1 : 2;

  Network net;
  net.add(conv2d(8, k1h, 5, 0.01));
  net.add(batch_norm());
  net.add(relu());
  net.add(max_pool(p_h, 2));
  net.add(dropout(0.5));
  net.add(conv2d(16, k2h, 3, 0.01));
  net.add(batch_norm());
  net.add(relu());
  net.add(max_pool(p_h, 2));
  net.add(dropout(0.5));
  net.add(flatten());
  net.add(dense(250, Init::HeUniform));
  net.add(relu());
  net.add(batch_norm());
  net.add(dropout(0.3));
  net.add(dense(kNumClasses, Init::GlorotUniform));
  net.add(softmax());
  return net;
}

// ---------------------------------------------------------------------------
// Adam

AdamOptimizer::AdamOptimizer(Network& net, double lr, double beta1, double beta2, double eps)
    : net_(net), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const std::size_t n = net.layer(i).params().size();
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t li = 0; li < net_.layer_count(); ++li) {
    auto p = net_.layer(li).params();
    auto g = net_.layer(li).grads();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[li][i] = beta1_ * m_[li][i] + (1.0 - beta1_) * g[i];
      v_[li][i] = beta2_ * v_[li][i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m_[li][i] / bc1;
      const double vhat = v_[li][i] / bc2;
      p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

// ---------------------------------------------------------------------------
// training loop

namespace {

// Validation loss in inference mode, evaluated in slices to bound memory.
double eval_loss(const Network& net, const ImageSet& data, const std::vector<std::size_t>& idx) {
  const Shape in_shape = net.input_shape();
  const ForwardCtx ctx;
  double total = 0.0;
  constexpr std::size_t kChunk = 256;
  Batch in, probs;
  for (std::size_t at = 0; at < idx.size(); at += kChunk) {
    const std::size_t n = std::min(kChunk, idx.size() - at);
    in.resize(static_cast<int>(n), in_shape);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(data.example(idx[at + i]), data.example(idx[at + i]) + data.example_size(),
                in.example(static_cast<int>(i)));
      labels[i] = data.labels[idx[at + i]];
    }
    net.forward(in, probs, ctx);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::max(probs.example(static_cast<int>(i))[labels[i]], 1e-300);
      total += -std::log(p);
    }
  }
  return total / static_cast<double>(idx.size()) + net.penalty();
}

}  // namespace

TrainHistory train(Network& net, const ImageSet& data, const TrainConfig& cfg) {
  if (!net.built()) throw std::logic_error("build the network before training");
  if (!data.has_labels) throw std::invalid_argument("training data must be labelled");
  if (data.count < 2) throw std::invalid_argument("too few training examples");
  if (cfg.batch_size < 2) throw std::invalid_argument("batch size must be at least 2");
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
    throw std::invalid_argument("val_fraction must be in [0,1)");

  std::mt19937_64 rng(mix_seed(cfg.seed, 0x7261696e));  // epoch shuffles + dropout

  std::vector<std::size_t> order(data.count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * data.count));
  if (cfg.val_fraction > 0.0 && n_val == 0) n_val = 1;
  if (n_val >= data.count) throw std::invalid_argument("validation split leaves no train data");
  std::vector<std::size_t> val_idx(order.end() - n_val, order.end());
  std::vector<std::size_t> train_idx(order.begin(), order.end() - n_val);
  const bool has_val = !val_idx.empty();

  const Shape in_shape = net.input_shape();
  AdamOptimizer opt(net, cfg.lr);
  TrainHistory hist;
  std::vector<double> best_snap;
  int since_best = 0;

  Batch batch;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double nll_sum = 0.0;
    std::size_t seen = 0;

    for (std::size_t at = 0; at < train_idx.size(); at += cfg.batch_size) {
      const std::size_t n = std::min<std::size_t>(cfg.batch_size, train_idx.size() - at);
      if (n < 2) continue;  // batchnorm needs batch statistics
      batch.resize(static_cast<int>(n), in_shape);
      std::vector<std::uint8_t> labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = train_idx[at + i];
        labels[i] = data.labels[idx];
        if (cfg.augmenter) {
          const ImageTensor aug =
              cfg.augmenter(data.tensor(idx), mix_seed(cfg.seed, epoch + 1, idx));
          if (aug.data.size() != data.example_size())
            throw std::invalid_argument("augmenter changed the image shape");
          std::copy(aug.data.begin(), aug.data.end(), batch.example(static_cast<int>(i)));
        } else {
          std::copy(data.example(idx), data.example(idx) + data.example_size(),
                    batch.example(static_cast<int>(i)));
        }
      }
      ForwardCtx ctx;
      ctx.training = true;
      ctx.rng = &rng;
      const double loss = net.forward_loss(batch, labels, ctx);
      net.backward(batch, labels);
      opt.step();
      nll_sum += (loss - net.penalty()) * n;
      seen += n;
    }
    if (seen == 0) throw std::invalid_argument("no usable training batches");

    hist.train_loss.push_back(nll_sum / seen + net.penalty());
    const double val = has_val ? eval_loss(net, data, val_idx) : hist.train_loss.back();
    hist.val_loss.push_back(val);
    hist.epochs_run = epoch + 1;
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %3d  train %.4f  val %.4f\n", epoch + 1,
                   hist.train_loss.back(), val);

    if (hist.best_epoch < 0 || val < hist.best_val_loss) {
      hist.best_epoch = epoch;
      hist.best_val_loss = val;
      best_snap = net.snapshot();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  if (!best_snap.empty()) net.restore(best_snap);
  return hist;
}

// ---------------------------------------------------------------------------
// gradient checking

GradCheckResult gradient_check(Network& net, const Batch& x,
                               const std::vector<std::uint8_t>& labels, double h) {
  if (!net.built()) throw std::logic_error("build the network first");
  ForwardCtx ctx;
  ctx.training = true;
  ctx.identity_dropout = true;
  ctx.update_running_stats = false;

  net.forward_loss(x, labels, ctx);
  net.backward(x, labels);
  std::vector<std::vector<double>> analytic;
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    auto g = net.layer(li).grads();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckResult result;
  for (std::size_t li = 0; li < net.layer_count(); ++li) {
    auto p = net.layer(li).params();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p[i];
      p[i] = orig + h;
      const double lp = net.forward_loss(x, labels, ctx);
      p[i] = orig - h;
      const double lm = net.forward_loss(x, labels, ctx);
      p[i] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = analytic[li][i];
      // the absolute floor keeps loss roundoff (~1e-11 after the /2h) from
      // masquerading as gradient error on near-zero coordinates
      const double rel = std::abs(an - fd) / std::max(std::max(std::abs(an), std::abs(fd)), 1e-4);
      result.max_rel_err = std::max(result.max_rel_err, rel);
      ++result.n_params;
    }
  }
  return result;
}

}  // namespace sca2d::nn
