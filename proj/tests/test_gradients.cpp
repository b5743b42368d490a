#include <doctest.h>

#include <cmath>
#include <functional>

#include "fdw/nn/convlstm.hpp"
#include "fdw/nn/gradcheck.hpp"
#include "fdw/nn/layers.hpp"
#include "fdw/nn/ops.hpp"

using namespace fdw::nn;
using fdw::Rng;

namespace {

Tensor<double> randt(std::vector<std::size_t> shape, Rng& rng, double lo = -1, double hi = 1) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Central-difference check of the gradient w.r.t. an input tensor.
double input_fd_max_rel_err(Tensor<double>& x, const Tensor<double>& dx,
                            const std::function<double()>& loss, std::size_t n_checks,
                            Rng& rng, double step = 1e-4) {
  double worst = 0;
  for (std::size_t t = 0; t < n_checks; ++t) {
    const std::size_t i = rng.index(x.size());
    const double keep = x[i];
    x[i] = keep + step;
    const double up = loss();
    x[i] = keep - step;
    const double down = loss();
    x[i] = keep;
    const double fd = (up - down) / (2 * step);
    const double rel = std::abs(fd - dx[i]) / std::max({std::abs(fd), std::abs(dx[i]), 1e-4});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

TEST_CASE("dense gradients are exact up to rounding") {
  Rng rng(1);
  Dense<double> layer(7, 4);
  layer.w = randt({4, 7}, rng);
  layer.b = randt({4}, rng);
  auto x = randt({3, 7}, rng);
  auto r = randt({3, 4}, rng);

  auto loss = [&] { return dot(layer.forward(x), r); };
  loss();
  layer.backward(r);
  std::vector<ParamRef<double>> refs;
  layer.params("dense", refs);
  auto res = grad_check(refs, loss, 1000, 5);
  CHECK(res.max_rel_err <= 1e-9);
}

TEST_CASE("conv2d zero upstream grad gives zero parameter grads") {
  Rng rng(2);
  Conv2d<double> layer(2, 3, 3, 1);
  layer.w = randt({3, 2, 3, 3}, rng);
  auto x = randt({1, 2, 5, 5}, rng);
  auto y = layer.forward(x);
  Tensor<double> gy(y.shape());
  layer.backward(gy);
  for (std::size_t i = 0; i < layer.dw.size(); ++i) CHECK(layer.dw[i] == 0.0);
  for (std::size_t i = 0; i < layer.db.size(); ++i) CHECK(layer.db[i] == 0.0);
}

TEST_CASE("conv2d 1x1 scalar case: grad w = x, grad input = w") {
  Conv2d<double> layer(1, 1, 1, 0);
  layer.w[0] = 0.3;
  Tensor<double> x({1, 1, 1, 1}, {2.5});
  layer.forward(x);
  Tensor<double> gy({1, 1, 1, 1}, {1.0});
  auto dx = layer.backward(gy);
  CHECK(layer.dw[0] == doctest::Approx(2.5));
  CHECK(dx[0] == doctest::Approx(0.3));
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(3);
  Conv2d<double> layer(2, 3, 3, 1);
  layer.w = randt({3, 2, 3, 3}, rng);
  layer.b = randt({3}, rng);
  auto x = randt({2, 2, 6, 6}, rng);
  auto r = randt({2, 3, 6, 6}, rng);

  auto loss = [&] { return dot(layer.forward(x), r); };
  loss();
  auto dx = layer.backward(r);
  std::vector<ParamRef<double>> refs;
  layer.params("conv", refs);
  auto res = grad_check(refs, loss, 1000, 5);
  CHECK(res.max_rel_err <= 1e-5);
  CHECK(input_fd_max_rel_err(x, dx, loss, 40, rng) <= 1e-5);
}

TEST_CASE("maxpool gradient matches finite differences") {
  Rng rng(4);
  MaxPool2d<double> pool;
  auto x = randt({1, 2, 6, 6}, rng);
  auto r = randt({1, 2, 3, 3}, rng);
  auto loss = [&] { return dot(pool.forward(x), r); };
  loss();
  auto dx = pool.backward(r);
  CHECK(input_fd_max_rel_err(x, dx, loss, 30, rng, 1e-6) <= 1e-4);
}

TEST_CASE("batchnorm gradients match finite differences in train mode") {
  Rng rng(5);
  BatchNorm<double> bn(3);
  bn.gamma = randt({3}, rng, 0.5, 1.5);
  bn.beta = randt({3}, rng);
  auto x = randt({6, 3, 4, 4}, rng);
  auto r = randt({6, 3, 4, 4}, rng);

  auto loss = [&] { return dot(bn.forward(x, Mode::kTrain), r); };
  loss();
  bn.dgamma.fill(0);
  bn.dbeta.fill(0);
  auto dx = bn.backward(r);
  std::vector<ParamRef<double>> refs;
  bn.params("bn", refs);
  auto res = grad_check(refs, loss, 200, 6);
  CHECK(res.max_rel_err <= 1e-5);
  CHECK(input_fd_max_rel_err(x, dx, loss, 40, rng) <= 1e-5);
}

TEST_CASE("log-softmax + nll gradient matches finite differences") {
  Rng rng(6);
  auto logits = randt({8, 2}, rng, -3, 3);
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) labels.push_back((int)rng.index(2));
  auto [l0, grad] = log_softmax_nll(logits, labels);
  auto loss = [&] { return log_softmax_nll(logits, labels).first; };
  CHECK(input_fd_max_rel_err(logits, grad, loss, 16, rng) <= 1e-6);
}

TEST_CASE("embedding table gradient matches finite differences") {
  Rng rng(7);
  Embedding<double> emb(5, 4);
  emb.table = randt({5, 4}, rng);
  Tensor<double> classes({2, 3, 3});
  for (std::size_t i = 0; i < classes.size(); ++i) classes[i] = (double)rng.index(5);
  auto r = randt({2, 4, 3, 3}, rng);

  auto loss = [&] { return dot(emb.forward(classes), r); };
  loss();
  emb.dtable.fill(0);
  emb.backward(r);
  std::vector<ParamRef<double>> refs;
  emb.params("emb", refs);
  auto res = grad_check(refs, loss, 20, 8);
  CHECK(res.max_rel_err <= 1e-9);
}

TEST_CASE("convlstm gradients over a 3-step unroll match finite differences") {
  Rng rng(8);
  ConvLstmCell<double> cell(2, 3, 3);
  cell.w = randt({12, 5, 3, 3}, rng, -0.3, 0.3);
  cell.b = randt({12}, rng, -0.1, 0.1);
  std::vector<Tensor<double>> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(randt({1, 2, 4, 4}, rng));
  auto r = randt({1, 3, 4, 4}, rng);

  auto loss = [&] {
    cell.reset();
    auto s = cell.initial_state(1, 4, 4);
    for (auto& x : xs) s = cell.step(x, s);
    return dot(s.h, r);
  };
  loss();
  cell.dw.fill(0);
  cell.db.fill(0);
  Tensor<double> dh = r;
  Tensor<double> dc({1, 3, 4, 4});
  while (cell.pending_steps() > 0) {
    auto [dx, dprev] = cell.backward_step(dh, dc);
    dh = std::move(dprev.h);
    dc = std::move(dprev.c);
  }
  std::vector<ParamRef<double>> refs;
  cell.params("cell", refs);
  auto res = grad_check(refs, loss, 400, 9);
  CHECK(res.max_rel_err <= 1e-4);
}
