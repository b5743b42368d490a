#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "fdw/models.hpp"
#include "fdw/sampling.hpp"

namespace fdw::trainer {

/// Non-finite loss or gradient; surfaced as its own exit code by the CLI.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 256;
  double lr = 1e-3;
  int plateau_patience = 10;
  double plateau_factor = 0.1;
  double min_lr = 1e-6;
  std::uint64_t shuffle_seed = 17;
  std::uint64_t dropout_seed = 23;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double recall = 0;
  double precision = 0;
  double f1 = 0;
  double lr = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

struct Metrics {
  double recall = 0, precision = 0, f1 = 0;
};

/// Fire-class metrics under the FDI > 0.5 decision rule; 0/0 counts as 0.
Metrics compute_metrics(const nn::Tensor<float>& logp, const std::vector<int>& labels);

struct TrainResult {
  models::ModelBundle best;
  TrainHistory history;
};

/// Full training loop: per-epoch shuffle, per-batch ADAM steps on the NLL,
/// plateau schedule on the epoch-averaged validation loss, best snapshot
/// by lowest validation loss (earliest on ties).
TrainResult train(models::ModelBundle model, const sampling::Dataset& train_ds,
                  const sampling::Dataset& val_ds, const TrainConfig& cfg);

struct EnsembleSpec {
  std::vector<std::uint64_t> init_seeds = {101, 102, 103, 104, 105, 106, 107};
  TrainConfig train;

  void validate() const;
};

/// Independent members differing only in their init seed.
std::vector<TrainResult> train_ensemble(const models::ModelConfig& model_cfg,
                                        const EnsembleSpec& spec,
                                        const sampling::Dataset& train_ds,
                                        const sampling::Dataset& val_ds);

/// `epoch,train_loss,val_loss,recall,precision,f1,lr` with LF endings.
void save_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace fdw::trainer
