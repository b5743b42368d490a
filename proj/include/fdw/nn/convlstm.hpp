#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "fdw/nn/layers.hpp"
#include "fdw/nn/ops.hpp"
#include "fdw/nn/tensor.hpp"

namespace fdw::nn {

/// Convolutional LSTM cell. Gates i, f, o use sigmoid, candidate g uses
/// tanh; all four are computed by one same-padded convolution over the
/// concatenated [input, hidden]. Gate order in the weight tensor: i, f, g, o.
template <typename T>
class ConvLstmCell {
 public:
  ConvLstmCell(std::size_t in_ch, std::size_t filters, std::size_t k)
      : in_ch_(in_ch), filters_(filters), k_(k), pad_((k - 1) / 2),
        w({4 * filters, in_ch + filters, k, k}), b({4 * filters}),
        dw(w.shape()), db(b.shape()) {
    if (k % 2 == 0) throw std::invalid_argument("convlstm: kernel must be odd for same padding");
  }

  struct State {
    Tensor<T> h, c;  // N*F*H*W each
  };

  State initial_state(std::size_t n, std::size_t h, std::size_t w_) const {
    return {Tensor<T>({n, filters_, h, w_}), Tensor<T>({n, filters_, h, w_})};
  }

  /// One recurrent step. Caches everything needed for backward_step; steps
  /// must later be unwound in reverse order.
  State step(const Tensor<T>& x, const State& prev) {
    const std::size_t N = x.dim(0), H = x.dim(2), W = x.dim(3);
    if (x.dim(1) != in_ch_) throw std::invalid_argument("convlstm: input channel mismatch");
    if (prev.h.dim(2) != H || prev.h.dim(3) != W)
      throw std::invalid_argument("convlstm: spatial dimensions drifted between steps");

    StepCache sc;
    sc.concat = Tensor<T>({N, in_ch_ + filters_, H, W});
    for (std::size_t n = 0; n < N; ++n) {
      std::copy(x.data() + n * in_ch_ * H * W, x.data() + (n + 1) * in_ch_ * H * W,
                sc.concat.data() + n * (in_ch_ + filters_) * H * W);
      std::copy(prev.h.data() + n * filters_ * H * W, prev.h.data() + (n + 1) * filters_ * H * W,
                sc.concat.data() + (n * (in_ch_ + filters_) + in_ch_) * H * W);
    }
    Tensor<T> pre = conv2d_forward(sc.concat, w, b, pad_);

    const std::size_t plane = H * W;
    State next{Tensor<T>({N, filters_, H, W}), Tensor<T>({N, filters_, H, W})};
    sc.i = Tensor<T>({N, filters_, H, W});
    sc.f = Tensor<T>({N, filters_, H, W});
    sc.g = Tensor<T>({N, filters_, H, W});
    sc.o = Tensor<T>({N, filters_, H, W});
    sc.tanh_c = Tensor<T>({N, filters_, H, W});
    sc.c_prev = prev.c;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t f = 0; f < filters_; ++f) {
        const T* pi = pre.data() + (n * 4 * filters_ + f) * plane;
        const T* pf = pre.data() + (n * 4 * filters_ + filters_ + f) * plane;
        const T* pg = pre.data() + (n * 4 * filters_ + 2 * filters_ + f) * plane;
        const T* po = pre.data() + (n * 4 * filters_ + 3 * filters_ + f) * plane;
        const T* cp = prev.c.data() + (n * filters_ + f) * plane;
        T* iv = sc.i.data() + (n * filters_ + f) * plane;
        T* fv = sc.f.data() + (n * filters_ + f) * plane;
        T* gv = sc.g.data() + (n * filters_ + f) * plane;
        T* ov = sc.o.data() + (n * filters_ + f) * plane;
        T* tc = sc.tanh_c.data() + (n * filters_ + f) * plane;
        T* cn = next.c.data() + (n * filters_ + f) * plane;
        T* hn = next.h.data() + (n * filters_ + f) * plane;
        for (std::size_t p = 0; p < plane; ++p) {
          iv[p] = sigmoid(pi[p]);
          fv[p] = sigmoid(pf[p]);
          gv[p] = std::tanh(pg[p]);
          ov[p] = sigmoid(po[p]);
          cn[p] = fv[p] * cp[p] + iv[p] * gv[p];
          tc[p] = std::tanh(cn[p]);
          hn[p] = ov[p] * tc[p];
        }
      }
    }
    caches_.push_back(std::move(sc));
    return next;
  }

  /// Unwind the most recent cached step. Accumulates weight grads; returns
  /// grads for the step input and the previous state.
  std::pair<Tensor<T>, State> backward_step(const Tensor<T>& dh, const Tensor<T>& dc_in) {
    if (caches_.empty()) throw std::logic_error("convlstm: backward before forward");
    StepCache sc = std::move(caches_.back());
    caches_.pop_back();

    const std::size_t N = dh.dim(0), H = dh.dim(2), W = dh.dim(3);
    const std::size_t plane = H * W;
    Tensor<T> dpre({N, 4 * filters_, H, W});
    State dprev{Tensor<T>({N, filters_, H, W}), Tensor<T>({N, filters_, H, W})};
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t f = 0; f < filters_; ++f) {
        const std::size_t off = (n * filters_ + f) * plane;
        const T* dhp = dh.data() + off;
        const T* dci = dc_in.data() + off;
        const T* iv = sc.i.data() + off;
        const T* fv = sc.f.data() + off;
        const T* gv = sc.g.data() + off;
        const T* ov = sc.o.data() + off;
        const T* tc = sc.tanh_c.data() + off;
        const T* cp = sc.c_prev.data() + off;
        T* dpi = dpre.data() + (n * 4 * filters_ + f) * plane;
        T* dpf = dpre.data() + (n * 4 * filters_ + filters_ + f) * plane;
        T* dpg = dpre.data() + (n * 4 * filters_ + 2 * filters_ + f) * plane;
        T* dpo = dpre.data() + (n * 4 * filters_ + 3 * filters_ + f) * plane;
        T* dcp = dprev.c.data() + off;
        for (std::size_t p = 0; p < plane; ++p) {
          const T dov = dhp[p] * tc[p];
          const T dc = dci[p] + dhp[p] * ov[p] * (T(1) - tc[p] * tc[p]);
          dpo[p] = dov * ov[p] * (T(1) - ov[p]);
          dpi[p] = dc * gv[p] * iv[p] * (T(1) - iv[p]);
          dpf[p] = dc * cp[p] * fv[p] * (T(1) - fv[p]);
          dpg[p] = dc * iv[p] * (T(1) - gv[p] * gv[p]);
          dcp[p] = dc * fv[p];
        }
      }
    }

    auto g = conv2d_backward(sc.concat, w, dpre, pad_);
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] += g.dw[i];
    for (std::size_t i = 0; i < db.size(); ++i) db[i] += g.db[i];

    Tensor<T> dx({N, in_ch_, H, W});
    for (std::size_t n = 0; n < N; ++n) {
      std::copy(g.dx.data() + n * (in_ch_ + filters_) * plane,
                g.dx.data() + (n * (in_ch_ + filters_) + in_ch_) * plane,
                dx.data() + n * in_ch_ * plane);
      std::copy(g.dx.data() + (n * (in_ch_ + filters_) + in_ch_) * plane,
                g.dx.data() + (n + 1) * (in_ch_ + filters_) * plane,
                dprev.h.data() + n * filters_ * plane);
    }
    return {std::move(dx), std::move(dprev)};
  }

  void reset() { caches_.clear(); }
  std::size_t pending_steps() const { return caches_.size(); }

  void params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".w", &w, &dw});
    out.push_back({prefix + ".b", &b, &db});
  }

  std::size_t in_channels() const { return in_ch_; }
  std::size_t filters() const { return filters_; }
  std::size_t kernel() const { return k_; }

  Tensor<T> w, b, dw, db;

 private:
  static T sigmoid(T v) { return T(1) / (T(1) + std::exp(-v)); }

  struct StepCache {
    Tensor<T> concat, i, f, g, o, tanh_c, c_prev;
  };

  std::size_t in_ch_, filters_, k_, pad_;
  std::vector<StepCache> caches_;
};

}  // namespace fdw::nn
