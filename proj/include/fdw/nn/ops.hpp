#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fdw/common/rng.hpp"
#include "fdw/nn/tensor.hpp"

// Free-function kernels over batched tensors (leading dim N). Every output
// element is produced by exactly one loop iteration with a fixed inner
// summation order, so parallelising the outer loops cannot change results.

namespace fdw::nn {

// ---------------------------------------------------------------- conv2d

/// x: N*C*H*W, w: O*C*K*K, b: O. Cross-correlation, stride 1.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         std::size_t pad) {
  if (x.rank() != 4 || w.rank() != 4)
    throw std::invalid_argument("conv2d: need 4-d input and weights");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), K = w.dim(2);
  if (w.dim(1) != C)
    throw std::invalid_argument("conv2d: input has " + std::to_string(C) +
                                " channels but weights expect " + std::to_string(w.dim(1)));
  if (w.dim(3) != K || K % 2 == 0) throw std::invalid_argument("conv2d: kernel must be square and odd");
  if (H + 2 * pad < K || W + 2 * pad < K)
    throw std::invalid_argument("conv2d: input smaller than kernel");
  const std::size_t Ho = H + 2 * pad - K + 1, Wo = W + 2 * pad - K + 1;

  Tensor<T> out({N, O, Ho, Wo});
  const T* xb = x.data();
  const T* wb = w.data();
  T* ob = out.data();
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      T* dst = ob + (n * O + o) * Ho * Wo;
      const T bias = b[o];
      for (std::size_t i = 0; i < Ho * Wo; ++i) dst[i] = bias;
      for (std::size_t c = 0; c < C; ++c) {
        const T* src = xb + (n * C + c) * H * W;
        const T* wk = wb + (o * C + c) * K * K;
        for (std::size_t ky = 0; ky < K; ++ky) {
          for (std::size_t kx = 0; kx < K; ++kx) {
            const T wv = wk[ky * K + kx];
            // valid output x-range for this (ky,kx)
            const std::ptrdiff_t oy0 = std::max<std::ptrdiff_t>(0, (std::ptrdiff_t)pad - (std::ptrdiff_t)ky);
            const std::ptrdiff_t oy1 = std::min<std::ptrdiff_t>(Ho, H + pad - ky);
            const std::ptrdiff_t ox0 = std::max<std::ptrdiff_t>(0, (std::ptrdiff_t)pad - (std::ptrdiff_t)kx);
            const std::ptrdiff_t ox1 = std::min<std::ptrdiff_t>(Wo, W + pad - kx);
            for (std::ptrdiff_t y = oy0; y < oy1; ++y) {
              const T* row = src + (y + ky - pad) * W + (kx - pad);
              T* orow = dst + y * Wo;
              for (std::ptrdiff_t xx = ox0; xx < ox1; ++xx) orow[xx] += wv * row[xx];
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
struct Conv2dGrads {
  Tensor<T> dx, dw, db;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w,
                               const Tensor<T>& gy, std::size_t pad) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), K = w.dim(2);
  const std::size_t Ho = gy.dim(2), Wo = gy.dim(3);
  if (gy.dim(0) != N || gy.dim(1) != O)
    throw std::invalid_argument("conv2d_backward: upstream grad shape mismatch");

  Conv2dGrads<T> g{Tensor<T>({N, C, H, W}), Tensor<T>({O, C, K, K}), Tensor<T>({O})};
  const T* xb = x.data();
  const T* wb = w.data();
  const T* gb = gy.data();

  // input gradient: each (n,c) slab owned by one iteration
  T* dxb = g.dx.data();
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      T* dst = dxb + (n * C + c) * H * W;
      for (std::size_t o = 0; o < O; ++o) {
        const T* gsrc = gb + (n * O + o) * Ho * Wo;
        const T* wk = wb + (o * C + c) * K * K;
        for (std::size_t ky = 0; ky < K; ++ky) {
          for (std::size_t kx = 0; kx < K; ++kx) {
            const T wv = wk[ky * K + kx];
            const std::ptrdiff_t oy0 = std::max<std::ptrdiff_t>(0, (std::ptrdiff_t)pad - (std::ptrdiff_t)ky);
            const std::ptrdiff_t oy1 = std::min<std::ptrdiff_t>(Ho, H + pad - ky);
            const std::ptrdiff_t ox0 = std::max<std::ptrdiff_t>(0, (std::ptrdiff_t)pad - (std::ptrdiff_t)kx);
            const std::ptrdiff_t ox1 = std::min<std::ptrdiff_t>(Wo, W + pad - kx);
            for (std::ptrdiff_t y = oy0; y < oy1; ++y) {
              T* drow = dst + (y + ky - pad) * W + (kx - pad);
              const T* grow = gsrc + y * Wo;
              for (std::ptrdiff_t xx = ox0; xx < ox1; ++xx) drow[xx] += wv * grow[xx];
            }
          }
        }
      }
    }
  }

  // weight/bias gradients: each o owned by one iteration
  T* dwb = g.dw.data();
  T* dbb = g.db.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t o = 0; o < O; ++o) {
    T bsum = 0;
    for (std::size_t n = 0; n < N; ++n) {
      const T* gsrc = gb + (n * O + o) * Ho * Wo;
      for (std::size_t i = 0; i < Ho * Wo; ++i) bsum += gsrc[i];
      for (std::size_t c = 0; c < C; ++c) {
        const T* src = xb + (n * C + c) * H * W;
        T* wk = dwb + (o * C + c) * K * K;
        for (std::size_t ky = 0; ky < K; ++ky) {
          for (std::size_t kx = 0; kx < K; ++kx) {
            const std::ptrdiff_t oy0 = std::max<std::ptrdiff_t>(0, (std::ptrdiff_t)pad - (std::ptrdiff_t)ky);
            const std::ptrdiff_t oy1 = std::min<std::ptrdiff_t>(Ho, H + pad - ky);
            const std::ptrdiff_t ox0 = std::max<std::ptrdiff_t>(0, (std::ptrdiff_t)pad - (std::ptrdiff_t)kx);
            const std::ptrdiff_t ox1 = std::min<std::ptrdiff_t>(Wo, W + pad - kx);
            T acc = 0;
            for (std::ptrdiff_t y = oy0; y < oy1; ++y) {
              const T* row = src + (y + ky - pad) * W + (kx - pad);
              const T* grow = gsrc + y * Wo;
              for (std::ptrdiff_t xx = ox0; xx < ox1; ++xx) acc += row[xx] * grow[xx];
            }
            wk[ky * K + kx] += acc;
          }
        }
      }
    }
    dbb[o] = bsum;
  }
  return g;
}

// -------------------------------------------------------------- maxpool2d

/// 2x2 window, stride 2; trailing odd row/column dropped. Returns pooled
/// values and the flat in-plane argmax index per output (first max wins).
template <typename T>
std::pair<Tensor<T>, Tensor<std::uint32_t>> maxpool2d_forward(const Tensor<T>& x) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H < 2 || W < 2) throw std::invalid_argument("maxpool2d: input smaller than window");
  const std::size_t Ho = H / 2, Wo = W / 2;
  Tensor<T> out({N, C, Ho, Wo});
  Tensor<std::uint32_t> arg({N, C, Ho, Wo});
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const T* src = x.data() + (n * C + c) * H * W;
      T* dst = out.data() + (n * C + c) * Ho * Wo;
      std::uint32_t* adst = arg.data() + (n * C + c) * Ho * Wo;
      for (std::size_t y = 0; y < Ho; ++y) {
        for (std::size_t xx = 0; xx < Wo; ++xx) {
          std::uint32_t best = static_cast<std::uint32_t>(2 * y * W + 2 * xx);
          T bv = src[best];
          const std::uint32_t cand[3] = {static_cast<std::uint32_t>(2 * y * W + 2 * xx + 1),
                                         static_cast<std::uint32_t>((2 * y + 1) * W + 2 * xx),
                                         static_cast<std::uint32_t>((2 * y + 1) * W + 2 * xx + 1)};
          for (std::uint32_t idx : cand) {
            if (src[idx] > bv) {
              bv = src[idx];
              best = idx;
            }
          }
          dst[y * Wo + xx] = bv;
          adst[y * Wo + xx] = best;
        }
      }
    }
  }
  return {std::move(out), std::move(arg)};
}

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<std::uint32_t>& arg, const Tensor<T>& gy,
                             std::size_t H, std::size_t W) {
  const std::size_t N = gy.dim(0), C = gy.dim(1), Ho = gy.dim(2), Wo = gy.dim(3);
  Tensor<T> dx({N, C, H, W});
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      const T* gsrc = gy.data() + (n * C + c) * Ho * Wo;
      const std::uint32_t* asrc = arg.data() + (n * C + c) * Ho * Wo;
      T* dst = dx.data() + (n * C + c) * H * W;
      for (std::size_t i = 0; i < Ho * Wo; ++i) dst[asrc[i]] += gsrc[i];
    }
  }
  return dx;
}

// -------------------------------------------------------------- relu

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& gy) {
  Tensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? gy[i] : T(0);
  return dx;
}

// -------------------------------------------------------------- dense

/// x: N*I, w: O*I, b: O -> N*O.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const std::size_t N = x.dim(0), I = x.dim(1), O = w.dim(0);
  if (w.dim(1) != I)
    throw std::invalid_argument("dense: input features " + std::to_string(I) +
                                " vs weight columns " + std::to_string(w.dim(1)));
  Tensor<T> out({N, O});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t n = 0; n < N; ++n) {
    const T* xr = x.data() + n * I;
    T* orow = out.data() + n * O;
    for (std::size_t o = 0; o < O; ++o) {
      const T* wr = w.data() + o * I;
      T acc = b[o];
      for (std::size_t i = 0; i < I; ++i) acc += wr[i] * xr[i];
      orow[o] = acc;
    }
  }
  return out;
}

template <typename T>
struct DenseGrads {
  Tensor<T> dx, dw, db;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy) {
  const std::size_t N = x.dim(0), I = x.dim(1), O = w.dim(0);
  DenseGrads<T> g{Tensor<T>({N, I}), Tensor<T>({O, I}), Tensor<T>({O})};
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t n = 0; n < N; ++n) {
    const T* gr = gy.data() + n * O;
    T* dxr = g.dx.data() + n * I;
    for (std::size_t o = 0; o < O; ++o) {
      const T* wr = w.data() + o * I;
      const T gv = gr[o];
      for (std::size_t i = 0; i < I; ++i) dxr[i] += gv * wr[i];
    }
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::size_t o = 0; o < O; ++o) {
    T* dwr = g.dw.data() + o * I;
    T bsum = 0;
    for (std::size_t n = 0; n < N; ++n) {
      const T gv = gy.data()[n * O + o];
      const T* xr = x.data() + n * I;
      bsum += gv;
      for (std::size_t i = 0; i < I; ++i) dwr[i] += gv * xr[i];
    }
    g.db[o] = bsum;
  }
  return g;
}

// -------------------------------------------------------------- dropout

/// Inverted-scaling dropout. Mask generation is serial on the supplied rng
/// stream; p = 0 or eval mode is the identity.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> dropout_forward(const Tensor<T>& x, double p, bool train,
                                                Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  Tensor<T> mask(x.shape());
  if (!train || p == 0.0) {
    mask.fill(T(1));
    return {x, std::move(mask)};
  }
  const T scale = T(1.0 / (1.0 - p));
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T m = rng.uniform() < p ? T(0) : scale;
    mask[i] = m;
    out[i] = x[i] * m;
  }
  return {std::move(out), std::move(mask)};
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& mask, const Tensor<T>& gy) {
  Tensor<T> dx(gy.shape());
  for (std::size_t i = 0; i < gy.size(); ++i) dx[i] = gy[i] * mask[i];
  return dx;
}

// -------------------------------------------------------------- log-softmax

/// Row-wise stabilized log-softmax on N*K.
template <typename T>
Tensor<T> log_softmax_forward(const Tensor<T>& x) {
  const std::size_t N = x.dim(0), K = x.dim(1);
  Tensor<T> out({N, K});
  for (std::size_t n = 0; n < N; ++n) {
    const T* xr = x.data() + n * K;
    T* orow = out.data() + n * K;
    T mx = xr[0];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, xr[k]);
    T sum = 0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(xr[k] - mx);
    const T lse = mx + std::log(sum);
    for (std::size_t k = 0; k < K; ++k) orow[k] = xr[k] - lse;
  }
  return out;
}

/// dx = dy - softmax * rowsum(dy), where softmax = exp(logp).
template <typename T>
Tensor<T> log_softmax_backward(const Tensor<T>& logp, const Tensor<T>& gy) {
  const std::size_t N = logp.dim(0), K = logp.dim(1);
  Tensor<T> dx({N, K});
  for (std::size_t n = 0; n < N; ++n) {
    T s = 0;
    for (std::size_t k = 0; k < K; ++k) s += gy.data()[n * K + k];
    for (std::size_t k = 0; k < K; ++k)
      dx.data()[n * K + k] = gy.data()[n * K + k] - std::exp(logp.data()[n * K + k]) * s;
  }
  return dx;
}

/// Fused two-class log-softmax + NLL. Labels: fire = 0, no-fire = 1.
/// Returns mean loss and the gradient w.r.t. the logits.
template <typename T>
std::pair<T, Tensor<T>> log_softmax_nll(const Tensor<T>& logits,
                                        const std::vector<int>& labels) {
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  if (K != 2) throw std::invalid_argument("log_softmax_nll: two classes expected");
  if (labels.size() != N) throw std::invalid_argument("log_softmax_nll: label count mismatch");
  Tensor<T> grad({N, K});
  T loss = 0;
  for (std::size_t n = 0; n < N; ++n) {
    const int lab = labels[n];
    if (lab != 0 && lab != 1)
      throw std::invalid_argument("log_softmax_nll: label outside {0,1} at row " +
                                  std::to_string(n));
    const T* xr = logits.data() + n * K;
    const T mx = std::max(xr[0], xr[1]);
    const T lse = mx + std::log(std::exp(xr[0] - mx) + std::exp(xr[1] - mx));
    loss -= (xr[lab] - lse) / T(N);
    for (std::size_t k = 0; k < K; ++k) {
      const T p = std::exp(xr[k] - lse);
      grad.data()[n * K + k] = (p - (static_cast<int>(k) == lab ? T(1) : T(0))) / T(N);
    }
  }
  return {loss, std::move(grad)};
}

}  // namespace fdw::nn
