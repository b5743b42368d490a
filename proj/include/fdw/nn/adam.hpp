#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fdw/nn/layers.hpp"
#include "fdw/nn/tensor.hpp"

namespace fdw::nn {

/// ADAM with bias correction. Moment buffers are keyed by position in the
/// parameter list, which must stay stable across steps.
template <typename T>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<ParamRef<T>>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value->shape());
        v_.emplace_back(p.value->shape());
      }
    }
    if (m_.size() != params.size())
      throw std::logic_error("adam: parameter list changed between steps");
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, step_);
    const double bc2 = 1.0 - std::pow(beta2_, step_);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Tensor<T>& g = *params[k].grad;
      Tensor<T>& p = *params[k].value;
      if (!g.all_finite())
        throw std::runtime_error("adam: non-finite gradient for parameter " + params[k].name);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m_[k][i] = T(beta1_ * m_[k][i] + (1.0 - beta1_) * g[i]);
        v_[k][i] = T(beta2_ * v_[k][i] + (1.0 - beta2_) * g[i] * g[i]);
        const double mhat = m_[k][i] / bc1;
        const double vhat = v_[k][i] / bc2;
        p[i] = T(p[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  long step_count() const { return step_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

template <typename T>
void zero_grads(const std::vector<ParamRef<T>>& params) {
  for (const auto& p : params) p.grad->fill(T(0));
}

/// Reduce-on-plateau learning-rate schedule over a lower-is-better metric.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, int patience = 10, double factor = 0.1,
                   double min_lr = 1e-6, double threshold = 0.0)
      : lr_(lr), patience_(patience), factor_(factor), min_lr_(min_lr),
        threshold_(threshold) {}

  /// Feed one epoch metric; returns true when the rate was reduced.
  bool update(double metric) {
    if (metric < best_ - threshold_) {
      best_ = metric;
      since_improvement_ = 0;
      return false;
    }
    ++since_improvement_;
    if (since_improvement_ >= patience_) {
      lr_ = std::max(lr_ * factor_, min_lr_);
      since_improvement_ = 0;
      return true;
    }
    return false;
  }

  double lr() const { return lr_; }
  double best() const { return best_; }
  int epochs_since_improvement() const { return since_improvement_; }

 private:
  double lr_;
  int patience_;
  double factor_, min_lr_, threshold_;
  double best_ = std::numeric_limits<double>::infinity();
  int since_improvement_ = 0;
};

}  // namespace fdw::nn
