#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fdw/common/rng.hpp"
#include "fdw/nn/ops.hpp"
#include "fdw/nn/tensor.hpp"

namespace fdw::nn {

enum class Mode { kTrain, kEval };

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

/// 2D convolution with cached input for backward. Weight grads accumulate
/// until zero_grad().
template <typename T>
class Conv2d {
 public:
  Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t pad)
      : pad_(pad), w({out_ch, in_ch, k, k}), b({out_ch}), dw(w.shape()), db(b.shape()) {}

  Tensor<T> forward(const Tensor<T>& x) {
    cached_ = x;
    has_cache_ = true;
    return conv2d_forward(x, w, b, pad_);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    if (!has_cache_) throw std::logic_error("conv2d: backward before forward");
    auto g = conv2d_backward(cached_, w, gy, pad_);
    accumulate(dw, g.dw);
    accumulate(db, g.db);
    has_cache_ = false;
    return std::move(g.dx);
  }

  void params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, &dw});
    out.push_back({prefix + ".b", &b, &db});
  }

  std::size_t pad() const { return pad_; }

 private:
  static void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  std::size_t pad_;
  Tensor<T> cached_;
  bool has_cache_ = false;

 public:
  Tensor<T> w, b, dw, db;
};

template <typename T>
class Dense {
 public:
  Dense(std::size_t in_f, std::size_t out_f)
      : w({out_f, in_f}), b({out_f}), dw(w.shape()), db(b.shape()) {}

  Tensor<T> forward(const Tensor<T>& x) {
    cached_ = x;
    return dense_forward(x, w, b);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    auto g = dense_backward(cached_, w, gy);
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += g.dw[i];
    for (std::size_t i = 0; i < db.size(); ++i) db[i] += g.db[i];
    return std::move(g.dx);
  }

  void params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, &dw});
    out.push_back({prefix + ".b", &b, &db});
  }

  Tensor<T> w, b, dw, db;

 private:
  Tensor<T> cached_;
};

/// Batch normalization over N*C (1-d) or N*C*H*W (2-d); statistics per
/// channel, eps 1e-5, running-stat momentum 0.1.
template <typename T>
class BatchNorm {
 public:
  explicit BatchNorm(std::size_t channels)
      : gamma({channels}), beta({channels}), dgamma({channels}), dbeta({channels}),
        running_mean({channels}), running_var({channels}) {
    gamma.fill(T(1));
    running_var.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    const std::size_t C = gamma.dim(0);
    if (x.rank() != 2 && x.rank() != 4)
      throw std::invalid_argument("batchnorm: rank-2 or rank-4 input expected");
    if (x.dim(1) != C) throw std::invalid_argument("batchnorm: channel mismatch");
    const std::size_t N = x.dim(0);
    const std::size_t L = x.size() / (N * C);
    if (mode == Mode::kTrain && N < 2)
      throw std::invalid_argument("batchnorm: train mode needs batch size >= 2");

    Tensor<T> out(x.shape());
    if (mode == Mode::kTrain) {
      xhat_ = Tensor<T>(x.shape());
      invstd_ = Tensor<T>({C});
      const double m = static_cast<double>(N * L);
      for (std::size_t c = 0; c < C; ++c) {
        double sum = 0;
        for (std::size_t n = 0; n < N; ++n) {
          const T* p = x.data() + (n * C + c) * L;
          for (std::size_t i = 0; i < L; ++i) sum += p[i];
        }
        const double mean = sum / m;
        double vs = 0;
        for (std::size_t n = 0; n < N; ++n) {
          const T* p = x.data() + (n * C + c) * L;
          for (std::size_t i = 0; i < L; ++i) {
            const double d = p[i] - mean;
            vs += d * d;
          }
        }
        const double var = vs / m;
        const double inv = 1.0 / std::sqrt(var + kEps);
        invstd_[c] = T(inv);
        for (std::size_t n = 0; n < N; ++n) {
          const T* p = x.data() + (n * C + c) * L;
          T* xh = xhat_.data() + (n * C + c) * L;
          T* op = out.data() + (n * C + c) * L;
          for (std::size_t i = 0; i < L; ++i) {
            xh[i] = T((p[i] - mean) * inv);
            op[i] = gamma[c] * xh[i] + beta[c];
          }
        }
        running_mean[c] = T(0.9) * running_mean[c] + T(0.1) * T(mean);
        const double unbiased = m > 1 ? var * m / (m - 1.0) : var;
        running_var[c] = T(0.9) * running_var[c] + T(0.1) * T(unbiased);
      }
      train_cached_ = true;
    } else {
      for (std::size_t c = 0; c < C; ++c) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + kEps);
        for (std::size_t n = 0; n < N; ++n) {
          const T* p = x.data() + (n * C + c) * L;
          T* op = out.data() + (n * C + c) * L;
          for (std::size_t i = 0; i < L; ++i)
            op[i] = gamma[c] * T((p[i] - running_mean[c]) * inv) + beta[c];
        }
      }
      train_cached_ = false;
      eval_input_ = x;
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t C = gamma.dim(0);
    const std::size_t N = gy.dim(0);
    const std::size_t L = gy.size() / (N * C);
    Tensor<T> dx(gy.shape());
    if (train_cached_) {
      const double m = static_cast<double>(N * L);
      for (std::size_t c = 0; c < C; ++c) {
        double sg = 0, sgx = 0;
        for (std::size_t n = 0; n < N; ++n) {
          const T* g = gy.data() + (n * C + c) * L;
          const T* xh = xhat_.data() + (n * C + c) * L;
          for (std::size_t i = 0; i < L; ++i) {
            sg += g[i];
            sgx += g[i] * xh[i];
          }
        }
        dgamma[c] += T(sgx);
        dbeta[c] += T(sg);
        const double k = gamma[c] * invstd_[c];
        for (std::size_t n = 0; n < N; ++n) {
          const T* g = gy.data() + (n * C + c) * L;
          const T* xh = xhat_.data() + (n * C + c) * L;
          T* d = dx.data() + (n * C + c) * L;
          for (std::size_t i = 0; i < L; ++i)
            d[i] = T(k * (g[i] - sg / m - xh[i] * (sgx / m)));
        }
      }
    } else {
      // eval mode: running stats are constants
      for (std::size_t c = 0; c < C; ++c) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + kEps);
        const double k = gamma[c] * inv;
        for (std::size_t n = 0; n < N; ++n) {
          const T* g = gy.data() + (n * C + c) * L;
          const T* p = eval_input_.data() + (n * C + c) * L;
          T* d = dx.data() + (n * C + c) * L;
          double sg = 0;
          for (std::size_t i = 0; i < L; ++i) {
            d[i] = T(k * g[i]);
            sg += g[i];
            dgamma[c] += T(g[i] * (p[i] - running_mean[c]) * inv);
          }
          dbeta[c] += T(sg);
        }
      }
    }
    return dx;
  }

  void params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma, &dgamma});
    out.push_back({prefix + ".beta", &beta, &dbeta});
  }

  static constexpr double kEps = 1e-5;
  Tensor<T> gamma, beta, dgamma, dbeta;
  Tensor<T> running_mean, running_var;

 private:
  Tensor<T> xhat_, invstd_, eval_input_;
  bool train_cached_ = false;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    cached_ = x;
    return relu_forward(x);
  }
  Tensor<T> backward(const Tensor<T>& gy) { return relu_backward(cached_, gy); }

 private:
  Tensor<T> cached_;
};

template <typename T>
class MaxPool2d {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    H_ = x.dim(2);
    W_ = x.dim(3);
    auto [out, arg] = maxpool2d_forward(x);
    arg_ = std::move(arg);
    return std::move(out);
  }
  Tensor<T> backward(const Tensor<T>& gy) { return maxpool2d_backward(arg_, gy, H_, W_); }

 private:
  Tensor<std::uint32_t> arg_;
  std::size_t H_ = 0, W_ = 0;
};

template <typename T>
class Dropout {
 public:
  explicit Dropout(double rate) : rate_(rate) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng& rng) {
    auto [out, mask] = dropout_forward(x, rate_, mode == Mode::kTrain, rng);
    mask_ = std::move(mask);
    return std::move(out);
  }
  Tensor<T> backward(const Tensor<T>& gy) { return dropout_backward(mask_, gy); }

  double rate() const { return rate_; }

 private:
  double rate_;
  Tensor<T> mask_;
};

template <typename T>
class LogSoftmax {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    logp_ = log_softmax_forward(x);
    return logp_;
  }
  Tensor<T> backward(const Tensor<T>& gy) { return log_softmax_backward(logp_, gy); }

 private:
  Tensor<T> logp_;
};

/// Learnable per-class embedding applied pixel-wise to an integer class
/// plane. Input: N*H*W of integral values; output: N*E*H*W.
template <typename T>
class Embedding {
 public:
  Embedding(std::size_t n_classes, std::size_t dim)
      : table({n_classes, dim}), dtable({n_classes, dim}) {}

  Tensor<T> forward(const Tensor<T>& classes) {
    const std::size_t N = classes.dim(0), H = classes.dim(1), W = classes.dim(2);
    const std::size_t E = table.dim(1), NC = table.dim(0);
    cached_ = classes;
    Tensor<T> out({N, E, H, W});
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < H * W; ++i) {
        const auto cls = static_cast<std::size_t>(classes.data()[n * H * W + i]);
        if (cls >= NC)
          throw std::invalid_argument("embedding: class " + std::to_string(cls) +
                                      " out of range (table size " + std::to_string(NC) + ")");
        for (std::size_t e = 0; e < E; ++e)
          out.data()[(n * E + e) * H * W + i] = table.at(cls, e);
      }
    }
    return out;
  }

  /// Accumulates into the table gradient; returns nothing (class plane is
  /// not differentiable).
  void backward(const Tensor<T>& gy) { backward_with(cached_, gy); }

  /// Same, against an explicit class plane (recurrent reuse across steps).
  void backward_with(const Tensor<T>& classes, const Tensor<T>& gy) {
    const std::size_t N = classes.dim(0), H = classes.dim(1), W = classes.dim(2);
    const std::size_t E = table.dim(1);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < H * W; ++i) {
        const auto cls = static_cast<std::size_t>(classes.data()[n * H * W + i]);
        for (std::size_t e = 0; e < E; ++e)
          dtable.at(cls, e) += gy.data()[(n * E + e) * H * W + i];
      }
    }
  }

  void params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".table", &table, &dtable});
  }

  Tensor<T> table, dtable;

 private:
  Tensor<T> cached_;
};

}  // namespace fdw::nn
