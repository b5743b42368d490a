#include "fdw/models.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fdw/common/crc64.hpp"

namespace fdw::models {

using nlohmann::json;
using nn::Mode;
using nn::Tensor;

std::string to_string(ArchitectureId id) {
  switch (id) {
    case ArchitectureId::kBasicCnn: return "basic_cnn";
    case ArchitectureId::kDeeperCnn1: return "deeper_cnn1";
    case ArchitectureId::kDeeperCnn2: return "deeper_cnn2";
    case ArchitectureId::kConvLstm: return "convlstm";
  }
  throw std::logic_error("unknown architecture id");
}

ArchitectureId architecture_from_string(const std::string& s) {
  if (s == "basic_cnn") return ArchitectureId::kBasicCnn;
  if (s == "deeper_cnn1") return ArchitectureId::kDeeperCnn1;
  if (s == "deeper_cnn2") return ArchitectureId::kDeeperCnn2;
  if (s == "convlstm") return ArchitectureId::kConvLstm;
  throw std::invalid_argument("unknown architecture: " + s);
}

std::size_t parameter_budget(ArchitectureId id) {
  switch (id) {
    case ArchitectureId::kBasicCnn: return 40'600;
    case ArchitectureId::kDeeperCnn1: return 66'500;
    case ArchitectureId::kDeeperCnn2: return 111'000;
    case ArchitectureId::kConvLstm: return 371'000;
  }
  throw std::logic_error("unknown architecture id");
}

std::size_t ModelConfig::conv_block_count() const {
  switch (architecture) {
    case ArchitectureId::kBasicCnn: return 1;
    case ArchitectureId::kDeeperCnn1: return 3;
    case ArchitectureId::kDeeperCnn2: return 4;
    case ArchitectureId::kConvLstm: return 1;  // the head block after the cell
  }
  throw std::logic_error("unknown architecture id");
}

void ModelConfig::validate() const {
  if (conv_width == 0) throw std::invalid_argument("model: conv width must be positive");
  if (embedding_dim == 0) throw std::invalid_argument("model: embedding dim must be positive");
  if (clc_classes == 0) throw std::invalid_argument("model: CLC class count must be positive");
  if (patch_size % 2 == 0 || patch_size < 4)
    throw std::invalid_argument("model: patch size must be odd and >= 5");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("model: dropout rate must be in [0,1)");
  if (architecture == ArchitectureId::kConvLstm &&
      (convlstm_filters == 0 || convlstm_head_width == 0))
    throw std::invalid_argument("model: recurrent filter counts must be positive");
  for (auto w : classifier_widths)
    if (w == 0) throw std::invalid_argument("model: classifier widths must be positive");
}

namespace {

struct LayerPlan {
  // (in, out) per conv block, including the recurrent head block
  std::vector<std::pair<std::size_t, std::size_t>> conv;
  std::vector<std::pair<std::size_t, std::size_t>> dense;  // hidden blocks
  std::size_t head_in = 0;
  std::size_t flat = 0;
};

LayerPlan plan_layers(const ModelConfig& cfg) {
  LayerPlan plan;
  std::size_t spatial = cfg.patch_size;
  std::size_t ch = cfg.architecture == ArchitectureId::kConvLstm ? cfg.convlstm_filters
                                                                 : cfg.input_channels();
  for (std::size_t i = 0; i < cfg.conv_block_count(); ++i) {
    const std::size_t out = cfg.architecture == ArchitectureId::kConvLstm
                                ? cfg.convlstm_head_width
                                : cfg.conv_width << i;
    plan.conv.push_back({ch, out});
    ch = out;
    spatial /= 2;  // same-pad conv then 2x2 maxpool
    if (spatial == 0)
      throw std::invalid_argument("model: patch too small for the conv stack");
  }
  plan.flat = ch * spatial * spatial;
  std::size_t in = plan.flat;
  for (auto w : cfg.resolved_classifier_widths()) {
    plan.dense.push_back({in, w});
    in = w;
  }
  plan.head_in = in;
  return plan;
}

}  // namespace

std::vector<std::size_t> ModelConfig::resolved_classifier_widths() const {
  if (!classifier_widths.empty()) return classifier_widths;
  switch (architecture) {
    case ArchitectureId::kBasicCnn: return {16, 16};
    case ArchitectureId::kDeeperCnn1: return {64, 32};
    case ArchitectureId::kDeeperCnn2: return {64, 32};
    case ArchitectureId::kConvLstm: return {16, 16};
  }
  throw std::logic_error("unknown architecture id");
}

std::size_t count_params(const ModelConfig& cfg) {
  cfg.validate();
  const auto plan = plan_layers(cfg);
  std::size_t n = cfg.clc_classes * cfg.embedding_dim;
  if (cfg.architecture == ArchitectureId::kConvLstm) {
    const std::size_t f = cfg.convlstm_filters;
    n += 4 * f * (cfg.input_channels() + f) * 9 + 4 * f;
  }
  for (auto [in, out] : plan.conv) n += in * out * 9 + out + 2 * out;
  for (auto [in, out] : plan.dense) n += in * out + out + 2 * out;
  n += plan.head_in * 2 + 2;
  return n;
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg)
    : config(cfg), embedding(cfg.clc_classes, cfg.embedding_dim),
      head([&] {
        cfg.validate();
        return plan_layers(cfg).head_in;
      }(), 2) {
  const auto plan = plan_layers(cfg);
  if (cfg.architecture == ArchitectureId::kConvLstm)
    cell = std::make_unique<nn::ConvLstmCell<T>>(cfg.input_channels(), cfg.convlstm_filters, 3);
  for (auto [in, out] : plan.conv) conv_blocks.emplace_back(in, out);
  for (auto [in, out] : plan.dense) dense_blocks.emplace_back(in, out, cfg.dropout_rate);
}

template <typename T>
std::vector<nn::ParamRef<T>> Model<T>::params() {
  std::vector<nn::ParamRef<T>> out;
  embedding.params("embedding", out);
  if (cell) cell->params("cell", out);
  for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
    const std::string p = "conv" + std::to_string(i);
    conv_blocks[i].conv.params(p, out);
    conv_blocks[i].bn.params(p + ".bn", out);
  }
  for (std::size_t i = 0; i < dense_blocks.size(); ++i) {
    const std::string p = "fc" + std::to_string(i);
    dense_blocks[i].fc.params(p, out);
    dense_blocks[i].bn.params(p + ".bn", out);
  }
  head.params("head", out);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, nn::Tensor<T>*>> Model<T>::state_arrays() {
  std::vector<std::pair<std::string, nn::Tensor<T>*>> out;
  for (auto& p : params()) out.push_back({p.name, p.value});
  for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
    auto& bn = conv_blocks[i].bn;
    out.push_back({"conv" + std::to_string(i) + ".bn.running_mean", &bn.running_mean});
    out.push_back({"conv" + std::to_string(i) + ".bn.running_var", &bn.running_var});
  }
  for (std::size_t i = 0; i < dense_blocks.size(); ++i) {
    auto& bn = dense_blocks[i].bn;
    out.push_back({"fc" + std::to_string(i) + ".bn.running_mean", &bn.running_mean});
    out.push_back({"fc" + std::to_string(i) + ".bn.running_var", &bn.running_var});
  }
  return out;
}

template <typename T>
std::size_t Model<T>::param_count() {
  std::size_t n = 0;
  for (const auto& p : params()) n += p.value->size();
  return n;
}

template <typename T>
void Model<T>::init_weights(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params()) {
    Tensor<T>& v = *p.value;
    const auto& name = p.name;
    auto ends_with = [&](const char* suf) {
      const std::size_t n = std::strlen(suf);
      return name.size() >= n && name.compare(name.size() - n, n, suf) == 0;
    };
    if (name == "embedding.table") {
      for (auto& x : v.vec()) x = T(rng.uniform(-0.1, 0.1));
    } else if (ends_with(".gamma")) {
      v.fill(T(1));
    } else if (ends_with(".w")) {
      std::size_t fan_in = v.dim(1);
      if (v.rank() == 4) fan_in *= v.dim(2) * v.dim(3);
      const double bound = std::sqrt(6.0 / (double)fan_in);
      for (auto& x : v.vec()) x = T(rng.uniform(-bound, bound));
    } else {
      v.fill(T(0));  // biases, batchnorm shifts
    }
  }
  provenance.init_seed = seed;
}

template <typename T>
Tensor<T> Model<T>::embed_frame(const Tensor<T>& frame, Tensor<T>* clc_out) {
  const std::size_t N = frame.dim(0), P = config.patch_size;
  const std::size_t C = cube::kNumChannels, E = config.embedding_dim;
  const std::size_t plane = P * P;
  Tensor<T> clc({N, P, P});
  for (std::size_t n = 0; n < N; ++n)
    std::copy(frame.data() + (n * (C + 1) + C) * plane, frame.data() + (n * (C + 1) + C + 1) * plane,
              clc.data() + n * plane);
  Tensor<T> emb = embedding.forward(clc);
  Tensor<T> x({N, C + E, P, P});
  for (std::size_t n = 0; n < N; ++n) {
    std::copy(frame.data() + n * (C + 1) * plane, frame.data() + (n * (C + 1) + C) * plane,
              x.data() + n * (C + E) * plane);
    std::copy(emb.data() + n * E * plane, emb.data() + (n + 1) * E * plane,
              x.data() + (n * (C + E) + C) * plane);
  }
  if (clc_out) *clc_out = std::move(clc);
  return x;
}

template <typename T>
Tensor<T> Model<T>::classify(Tensor<T> x, Mode mode, Rng& rng) {
  for (auto& block : conv_blocks) x = block.forward(x, mode);
  conv_input_shape_ = x.shape();
  x.reshape({x.dim(0), x.size() / x.dim(0)});
  for (auto& block : dense_blocks) x = block.forward(x, mode, rng);
  return log_softmax.forward(head.forward(x));
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& batch, Mode mode, Rng& dropout_rng) {
  const std::size_t P = config.patch_size;
  const std::size_t F = cube::kNumChannels + 1;  // 14 continuous + raw CLC
  last_batch_ = batch.dim(0);
  if (config.architecture != ArchitectureId::kConvLstm) {
    nn::require_shape(batch, {last_batch_, F, P, P}, "model input");
    return classify(embed_frame(batch, nullptr), mode, dropout_rng);
  }
  const std::size_t Tn = config.temporal_len();
  nn::require_shape(batch, {last_batch_, Tn, F, P, P}, "model input");
  cell->reset();
  clc_steps_.clear();
  auto state = cell->initial_state(last_batch_, P, P);
  const std::size_t frame_sz = F * P * P;
  for (std::size_t t = 0; t < Tn; ++t) {
    Tensor<T> frame({last_batch_, F, P, P});
    for (std::size_t n = 0; n < last_batch_; ++n)
      std::copy(batch.data() + (n * Tn + t) * frame_sz, batch.data() + (n * Tn + t + 1) * frame_sz,
                frame.data() + n * frame_sz);
    Tensor<T> clc;
    Tensor<T> x = embed_frame(frame, &clc);
    clc_steps_.push_back(std::move(clc));
    state = cell->step(x, state);
  }
  return classify(std::move(state.h), mode, dropout_rng);
}

template <typename T>
void Model<T>::backward(const Tensor<T>& dlogp) {
  Tensor<T> g = head.backward(log_softmax.backward(dlogp));
  for (auto it = dense_blocks.rbegin(); it != dense_blocks.rend(); ++it) g = it->backward(g);
  g.reshape(conv_input_shape_);
  for (auto it = conv_blocks.rbegin(); it != conv_blocks.rend(); ++it) g = it->backward(g);

  const std::size_t N = last_batch_, P = config.patch_size;
  const std::size_t C = cube::kNumChannels, E = config.embedding_dim;
  const std::size_t plane = P * P;
  auto embedding_slice = [&](const Tensor<T>& dx) {
    Tensor<T> demb({N, E, P, P});
    for (std::size_t n = 0; n < N; ++n)
      std::copy(dx.data() + (n * (C + E) + C) * plane, dx.data() + (n + 1) * (C + E) * plane,
                demb.data() + n * E * plane);
    return demb;
  };

  if (config.architecture != ArchitectureId::kConvLstm) {
    embedding.backward(embedding_slice(g));
    return;
  }
  Tensor<T> dh = std::move(g);
  Tensor<T> dc(dh.shape());
  for (std::size_t t = config.temporal_len(); t-- > 0;) {
    auto [dx, dprev] = cell->backward_step(dh, dc);
    embedding.backward_with(clc_steps_[t], embedding_slice(dx));
    dh = std::move(dprev.h);
    dc = std::move(dprev.c);
  }
}

template <typename T>
Model<T> build_model(const ModelConfig& cfg) {
  Model<T> model(cfg);
  model.init_weights(cfg.init_seed);
  const std::size_t budget = parameter_budget(cfg.architecture);
  const std::size_t got = model.param_count();
  const double dev = std::abs((double)got - (double)budget) / (double)budget;
  if (dev > 0.25)
    model.build_warnings.push_back(
        "parameter count " + std::to_string(got) + " deviates " +
        std::to_string((int)(dev * 100)) + "% from the target " + std::to_string(budget));
  return model;
}

template class Model<float>;
template class Model<double>;
template Model<float> build_model<float>(const ModelConfig&);
template Model<double> build_model<double>(const ModelConfig&);

namespace {

json config_to_json(const ModelConfig& c) {
  return json{{"architecture", to_string(c.architecture)},
              {"conv_width", c.conv_width},
              {"classifier_widths", c.classifier_widths},
              {"dropout_rate", c.dropout_rate},
              {"convlstm_filters", c.convlstm_filters},
              {"convlstm_head_width", c.convlstm_head_width},
              {"embedding_dim", c.embedding_dim},
              {"clc_classes", c.clc_classes},
              {"patch_size", c.patch_size},
              {"init_seed", c.init_seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  c.conv_width = j.at("conv_width").get<std::size_t>();
  c.classifier_widths = j.at("classifier_widths").get<std::vector<std::size_t>>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.convlstm_filters = j.at("convlstm_filters").get<std::size_t>();
  c.convlstm_head_width = j.at("convlstm_head_width").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.clc_classes = j.at("clc_classes").get<std::size_t>();
  c.patch_size = j.at("patch_size").get<std::size_t>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_weights(ModelBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest = json::array();
  std::ofstream wf(dir / "weights.f32", std::ios::trunc | std::ios::binary);
  if (!wf) throw std::runtime_error("cannot write " + (dir / "weights.f32").string());
  for (auto& [name, value] : bundle.state_arrays()) {
    const auto& v = *value;
    if (!v.all_finite())
      throw std::runtime_error("refusing to save non-finite parameter " + name);
    manifest.push_back({{"name", name},
                        {"shape", v.shape()},
                        {"crc64", Crc64::to_hex(Crc64::of(v.data(), v.size() * sizeof(float)))}});
    wf.write(reinterpret_cast<const char*>(v.data()),
             (std::streamsize)(v.size() * sizeof(float)));
  }
  json j{{"format_version", 1},
         {"config", config_to_json(bundle.config)},
         {"provenance",
          {{"init_seed", bundle.provenance.init_seed},
           {"epochs_trained", bundle.provenance.epochs_trained},
           {"best_epoch", bundle.provenance.best_epoch}}},
         {"arrays", manifest}};
  std::ofstream(dir / "model.json", std::ios::trunc) << j.dump(2) << "\n";
}

ModelBundle load_weights(const std::filesystem::path& dir) {
  std::ifstream jf(dir / "model.json");
  if (!jf) throw std::runtime_error("cannot read " + (dir / "model.json").string());
  json j = json::parse(jf);
  if (j.at("format_version").get<int>() != 1)
    throw std::runtime_error("model format version mismatch in " + dir.string());
  ModelBundle bundle(config_from_json(j.at("config")));
  const auto& prov = j.at("provenance");
  bundle.provenance.init_seed = prov.at("init_seed").get<std::uint64_t>();
  bundle.provenance.epochs_trained = prov.at("epochs_trained").get<std::size_t>();
  bundle.provenance.best_epoch = prov.at("best_epoch").get<std::size_t>();

  std::ifstream wf(dir / "weights.f32", std::ios::binary);
  if (!wf) throw std::runtime_error("cannot read " + (dir / "weights.f32").string());
  auto state = bundle.state_arrays();
  const auto& arrays = j.at("arrays");
  if (arrays.size() != state.size())
    throw std::runtime_error("model manifest lists " + std::to_string(arrays.size()) +
                             " arrays, expected " + std::to_string(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& entry = arrays.at(i);
    auto& [name, value] = state[i];
    auto& v = *value;
    if (entry.at("name").get<std::string>() != name ||
        entry.at("shape").get<std::vector<std::size_t>>() != v.shape())
      throw std::runtime_error("model manifest mismatch at array " + name);
    wf.read(reinterpret_cast<char*>(v.data()), (std::streamsize)(v.size() * sizeof(float)));
    if ((std::size_t)wf.gcount() != v.size() * sizeof(float))
      throw std::runtime_error("weights payload truncated at array " + name);
    const auto crc = Crc64::of(v.data(), v.size() * sizeof(float));
    if (Crc64::to_hex(crc) != entry.at("crc64").get<std::string>())
      throw std::runtime_error("weights checksum mismatch at array " + name);
  }
  return bundle;
}

ModelBundle load_weights(const std::filesystem::path& dir, ArchitectureId expected) {
  auto bundle = load_weights(dir);
  if (bundle.config.architecture != expected)
    throw std::runtime_error("architecture mismatch: stored " +
                             to_string(bundle.config.architecture) + ", expected " +
                             to_string(expected));
  return bundle;
}

}  // namespace fdw::models
