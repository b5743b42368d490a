#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fdw/common/rng.hpp"
#include "fdw/cube/cube.hpp"
#include "fdw/nn/convlstm.hpp"
#include "fdw/nn/layers.hpp"
#include "fdw/nn/tensor.hpp"

namespace fdw::models {

enum class ArchitectureId { kBasicCnn, kDeeperCnn1, kDeeperCnn2, kConvLstm };

std::string to_string(ArchitectureId id);
ArchitectureId architecture_from_string(const std::string& s);

/// Expected learnable-parameter total for the default configuration of each
/// architecture; builds warn when they land more than 25% away.
std::size_t parameter_budget(ArchitectureId id);

struct ModelConfig {
  ArchitectureId architecture = ArchitectureId::kBasicCnn;
  std::size_t conv_width = 16;  // first block width; later blocks double it
  /// Classifier hidden widths; empty selects the per-architecture default.
  std::vector<std::size_t> classifier_widths;
  double dropout_rate = 0.2;
  std::size_t convlstm_filters = 76;
  std::size_t convlstm_head_width = 32;
  std::size_t embedding_dim = 10;
  std::size_t clc_classes = 15;
  std::size_t patch_size = 25;
  std::uint64_t init_seed = 1;

  std::size_t temporal_len() const {
    return architecture == ArchitectureId::kConvLstm ? 10 : 1;
  }
  std::size_t input_channels() const { return cube::kNumChannels + embedding_dim; }
  std::size_t conv_block_count() const;
  std::vector<std::size_t> resolved_classifier_widths() const;
  void validate() const;
};

std::size_t count_params(const ModelConfig& cfg);

template <typename T>
struct ConvBlock {
  ConvBlock(std::size_t in_ch, std::size_t out_ch)
      : conv(in_ch, out_ch, 3, 1), bn(out_ch) {}
  nn::Conv2d<T> conv;
  nn::BatchNorm<T> bn;
  nn::ReLU<T> relu;
  nn::MaxPool2d<T> pool;

  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Mode mode) {
    return pool.forward(relu.forward(bn.forward(conv.forward(x), mode)));
  }
  nn::Tensor<T> backward(const nn::Tensor<T>& gy) {
    return conv.backward(bn.backward(relu.backward(pool.backward(gy))));
  }
};

template <typename T>
struct DenseBlock {
  DenseBlock(std::size_t in_f, std::size_t out_f, double rate)
      : fc(in_f, out_f), bn(out_f), drop(rate) {}
  nn::Dense<T> fc;
  nn::BatchNorm<T> bn;
  nn::ReLU<T> relu;
  nn::Dropout<T> drop;

  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Mode mode, Rng& rng) {
    return drop.forward(relu.forward(bn.forward(fc.forward(x), mode)), mode, rng);
  }
  nn::Tensor<T> backward(const nn::Tensor<T>& gy) {
    return fc.backward(bn.backward(relu.backward(drop.backward(gy))));
  }
};

struct Provenance {
  std::uint64_t init_seed = 0;
  std::size_t epochs_trained = 0;
  std::size_t best_epoch = 0;
};

/// One classifier: embedding + (optional recurrent cell) + conv blocks +
/// dense blocks + 2-way log-softmax head. T is float in production and
/// double for gradient checks.
template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  /// CNNs take N x 15 x P x P (channel 14 is the raw CLC plane); the
  /// recurrent variant takes N x 10 x 15 x P x P, oldest frame first.
  /// Returns N x 2 log-probabilities, fire first.
  nn::Tensor<T> forward(const nn::Tensor<T>& batch, nn::Mode mode, Rng& dropout_rng);

  /// Accumulates parameter gradients from the log-probability gradient of
  /// the most recent forward.
  void backward(const nn::Tensor<T>& dlogp);

  std::vector<nn::ParamRef<T>> params();
  std::size_t param_count();

  /// Learnable parameters plus batchnorm running statistics: everything a
  /// serialized model needs for eval-mode inference.
  std::vector<std::pair<std::string, nn::Tensor<T>*>> state_arrays();

  void init_weights(std::uint64_t seed);

  ModelConfig config;
  Provenance provenance;
  std::vector<std::string> build_warnings;

  nn::Embedding<T> embedding;
  std::unique_ptr<nn::ConvLstmCell<T>> cell;
  std::vector<ConvBlock<T>> conv_blocks;
  std::vector<DenseBlock<T>> dense_blocks;
  nn::Dense<T> head;
  nn::LogSoftmax<T> log_softmax;

 private:
  nn::Tensor<T> embed_frame(const nn::Tensor<T>& frame, nn::Tensor<T>* clc_out);
  nn::Tensor<T> classify(nn::Tensor<T> x, nn::Mode mode, Rng& rng);

  std::vector<std::size_t> conv_input_shape_;  // for reshaping the flat grad
  std::vector<nn::Tensor<T>> clc_steps_;       // recurrent path only
  std::size_t last_batch_ = 0;
};

/// Builds and seeds a model; records a warning when the parameter count
/// strays more than 25% from the architecture's budget.
template <typename T = float>
Model<T> build_model(const ModelConfig& cfg);

using ModelBundle = Model<float>;

/// model.json (config, provenance, array manifest with per-array CRC-64)
/// plus weights.f32, little-endian arrays in parameter order.
void save_weights(ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_weights(const std::filesystem::path& dir);
ModelBundle load_weights(const std::filesystem::path& dir, ArchitectureId expected);

extern template class Model<float>;
extern template class Model<double>;
extern template Model<float> build_model<float>(const ModelConfig&);
extern template Model<double> build_model<double>(const ModelConfig&);

}  // namespace fdw::models
