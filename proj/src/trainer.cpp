#include "fdw/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "fdw/nn/adam.hpp"

namespace fdw::trainer {

using nn::Mode;
using nn::Tensor;

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("trainer: epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("trainer: batch size must be >= 2 (batchnorm)");
  if (lr <= 0 || plateau_factor <= 0 || plateau_factor >= 1 || min_lr <= 0)
    throw std::invalid_argument("trainer: invalid learning-rate schedule");
  if (plateau_patience < 1) throw std::invalid_argument("trainer: patience must be >= 1");
}

void EnsembleSpec::validate() const {
  if (init_seeds.empty()) throw std::invalid_argument("ensemble: at least one member");
  for (std::size_t i = 0; i < init_seeds.size(); ++i)
    for (std::size_t j = i + 1; j < init_seeds.size(); ++j)
      if (init_seeds[i] == init_seeds[j])
        throw std::invalid_argument("ensemble: member seeds must be pairwise distinct");
  train.validate();
}

Metrics compute_metrics(const Tensor<float>& logp, const std::vector<int>& labels) {
  if (logp.rank() != 2 || logp.dim(1) != 2 || logp.dim(0) != labels.size())
    throw std::invalid_argument("metrics: N x 2 log-probabilities expected");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const bool pred_fire = std::exp((double)logp.at(n, 0)) > 0.5;
    const bool is_fire = labels[n] == sampling::kLabelFire;
    if (pred_fire && is_fire) ++tp;
    else if (pred_fire && !is_fire) ++fp;
    else if (!pred_fire && is_fire) ++fn;
  }
  Metrics m;
  m.recall = tp + fn == 0 ? 0.0 : (double)tp / (double)(tp + fn);
  m.precision = tp + fp == 0 ? 0.0 : (double)tp / (double)(tp + fp);
  m.f1 = m.recall + m.precision == 0 ? 0.0
                                     : 2.0 * m.recall * m.precision / (m.recall + m.precision);
  return m;
}

namespace {

Tensor<float> make_batch(const sampling::Dataset& ds, const std::vector<std::size_t>& order,
                         std::size_t start, std::size_t count, std::vector<int>* labels) {
  std::vector<std::size_t> shape = ds.patches[0].shape();
  shape.insert(shape.begin(), count);
  Tensor<float> batch(shape);
  const std::size_t stride = ds.patches[0].size();
  labels->clear();
  for (std::size_t i = 0; i < count; ++i) {
    const auto& p = ds.patches[order[start + i]];
    std::copy(p.data(), p.data() + stride, batch.data() + i * stride);
    labels->push_back(ds.labels[order[start + i]]);
  }
  return batch;
}

/// Batch boundaries; a trailing singleton is folded into the previous batch
/// so batchnorm always sees at least two rows.
std::vector<std::pair<std::size_t, std::size_t>> batch_plan(std::size_t n, std::size_t bs) {
  std::vector<std::pair<std::size_t, std::size_t>> plan;
  for (std::size_t s = 0; s < n; s += bs) plan.push_back({s, std::min(bs, n - s)});
  if (plan.size() > 1 && plan.back().second == 1) {
    plan.pop_back();
    ++plan.back().second;
  }
  return plan;
}

struct EvalResult {
  double loss = 0;
  Tensor<float> logp;
};

EvalResult evaluate(models::ModelBundle& model, const sampling::Dataset& ds,
                    std::size_t batch_size) {
  std::vector<std::size_t> order(ds.patches.size());
  std::iota(order.begin(), order.end(), 0);
  EvalResult res;
  res.logp = Tensor<float>({ds.patches.size(), 2});
  Rng unused(0);
  double total = 0;
  std::vector<int> labels;
  for (std::size_t s = 0; s < order.size(); s += batch_size) {
    const std::size_t count = std::min(batch_size, order.size() - s);
    auto batch = make_batch(ds, order, s, count, &labels);
    auto logp = model.forward(batch, Mode::kEval, unused);
    for (std::size_t i = 0; i < count; ++i) {
      total -= logp.at(i, (std::size_t)labels[i]);
      res.logp.at(s + i, 0) = logp.at(i, 0);
      res.logp.at(s + i, 1) = logp.at(i, 1);
    }
  }
  res.loss = total / (double)order.size();
  return res;
}

}  // namespace

TrainResult train(models::ModelBundle model, const sampling::Dataset& train_ds,
                  const sampling::Dataset& val_ds, const TrainConfig& cfg) {
  cfg.validate();
  if (train_ds.patches.empty() || val_ds.patches.empty())
    throw std::invalid_argument("trainer: empty dataset");
  if (train_ds.labels.size() != train_ds.patches.size())
    throw std::invalid_argument("trainer: label/patch count mismatch");

  auto params = model.params();
  nn::Adam<float> adam(cfg.lr);
  nn::PlateauScheduler sched(cfg.lr, cfg.plateau_patience, cfg.plateau_factor, cfg.min_lr);

  TrainHistory history;
  std::vector<std::vector<float>> best_state;
  const std::size_t n = train_ds.patches.size();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(Rng::derive(cfg.shuffle_seed, epoch));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(Rng::derive(cfg.dropout_seed, epoch));

    double epoch_loss = 0;
    std::vector<int> labels;
    const auto plan = batch_plan(n, cfg.batch_size);
    for (std::size_t b = 0; b < plan.size(); ++b) {
      const auto [start, count] = plan[b];
      auto batch = make_batch(train_ds, order, start, count, &labels);
      auto logp = model.forward(batch, Mode::kTrain, dropout_rng);
      Tensor<float> dlogp(logp.shape());
      double loss = 0;
      for (std::size_t i = 0; i < count; ++i) {
        loss -= logp.at(i, (std::size_t)labels[i]);
        dlogp.at(i, (std::size_t)labels[i]) = -1.0f / (float)count;
      }
      loss /= (double)count;
      if (!std::isfinite(loss))
        throw NumericError("trainer: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b));
      model.backward(dlogp);
      try {
        adam.step(params);
      } catch (const std::runtime_error& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                           ": " + e.what());
      }
      nn::zero_grads(params);
      epoch_loss += loss * (double)count;
    }
    epoch_loss /= (double)n;

    auto val = evaluate(model, val_ds, cfg.batch_size);
    auto metrics = compute_metrics(val.logp, val_ds.labels);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss;
    rec.val_loss = val.loss;
    rec.recall = metrics.recall;
    rec.precision = metrics.precision;
    rec.f1 = metrics.f1;
    rec.lr = adam.lr();
    history.records.push_back(rec);

    if (val.loss < history.best_val_loss) {
      history.best_val_loss = val.loss;
      history.best_epoch = epoch;
      best_state.clear();
      for (auto& [name, value] : model.state_arrays()) best_state.push_back(value->vec());
    }

    sched.update(val.loss);
    adam.set_lr(sched.lr());
  }

  TrainResult result{models::ModelBundle(model.config), std::move(history)};
  auto state = result.best.state_arrays();
  for (std::size_t i = 0; i < state.size(); ++i) state[i].second->vec() = best_state[i];
  result.best.provenance.init_seed = model.provenance.init_seed;
  result.best.provenance.epochs_trained = cfg.epochs;
  result.best.provenance.best_epoch = result.history.best_epoch;
  return result;
}

std::vector<TrainResult> train_ensemble(const models::ModelConfig& model_cfg,
                                        const EnsembleSpec& spec,
                                        const sampling::Dataset& train_ds,
                                        const sampling::Dataset& val_ds) {
  spec.validate();
  std::vector<TrainResult> out;
  for (std::size_t i = 0; i < spec.init_seeds.size(); ++i) {
    auto cfg = model_cfg;
    cfg.init_seed = spec.init_seeds[i];
    try {
      out.push_back(train(models::build_model(cfg), train_ds, val_ds, spec.train));
    } catch (const NumericError& e) {
      throw NumericError("ensemble member " + std::to_string(i) + " failed: " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("ensemble member " + std::to_string(i) + " failed: " + e.what());
    }
  }
  return out;
}

void save_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write history: " + path.string());
  out << "epoch,train_loss,val_loss,recall,precision,f1,lr\n";
  out.precision(10);
  for (const auto& r : history.records)
    out << r.epoch << "," << r.train_loss << "," << r.val_loss << "," << r.recall << ","
        << r.precision << "," << r.f1 << "," << r.lr << "\n";
}

}  // namespace fdw::trainer
