#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fdw/inference.hpp"
#include "fdw/cube/patch.hpp"

using namespace fdw;
using namespace fdw::inference;
namespace fs = std::filesystem;

namespace {

cube::DataCube random_cube(std::size_t hw = 30, std::size_t days = 12, std::uint64_t seed = 6) {
  cube::DataCube c;
  c.header.height = hw;
  c.header.width = hw;
  c.header.days = days;
  c.header.days_per_year = days;
  c.header.start_date = "2011-01-01";
  c.header.channels = cube::channel_schema();
  c.header.clc_classes = 15;
  Rng rng(seed);
  c.channels.assign(cube::kNumChannels, std::vector<float>(days * hw * hw));
  for (auto& ch : c.channels)
    for (auto& v : ch) v = (float)rng.normal();
  c.clc.resize(hw * hw);
  for (auto& v : c.clc) v = (std::uint16_t)rng.index(15);
  c.susceptible.assign(hw * hw, 0);
  for (std::size_t i = 0; i < hw * hw; ++i) c.susceptible[i] = rng.bernoulli(0.5);
  c.burn.assign(days * hw * hw, 0);
  return c;
}

models::ModelBundle tiny_model() {
  models::ModelConfig cfg;
  cfg.architecture = models::ArchitectureId::kBasicCnn;
  cfg.conv_width = 4;
  cfg.classifier_widths = {8};
  cfg.init_seed = 3;
  return models::build_model(cfg);
}

cube::Normalizer flat_normalizer() {
  cube::Normalizer n;
  n.mean.assign(cube::kNumChannels, 0.0);
  n.stddev.assign(cube::kNumChannels, 1.0);
  return n;
}

}  // namespace

TEST_CASE("a single susceptible pixel reproduces the standalone forward") {
  auto c = random_cube();
  c.susceptible.assign(c.susceptible.size(), 0);
  c.susceptible[15 * 30 + 14] = 1;
  auto model = tiny_model();
  auto norm = flat_normalizer();
  auto map = full_map_inference(model, c, 5, norm);
  CHECK(map.valid_count() == 1);

  auto patch = cube::extract_patch(c, 5, 14, 15);
  norm.apply(patch);
  auto shape = patch.shape();
  shape.insert(shape.begin(), 1);
  nn::Tensor<float> batch(shape, patch.vec());
  Rng rng(0);
  const float expected = std::exp(model.forward(batch, nn::Mode::kEval, rng).at(0, 0));
  CHECK(map.at(15, 14) == expected);
  CHECK(map.at(0, 0) == 0.0f);
}

TEST_CASE("an all-water mask yields an empty valid set") {
  auto c = random_cube();
  c.susceptible.assign(c.susceptible.size(), 0);
  auto model = tiny_model();
  auto norm = flat_normalizer();
  auto map = full_map_inference(model, c, 3, norm);
  CHECK(map.valid_count() == 0);
  for (auto v : map.values) CHECK(v == 0.0f);
}

TEST_CASE("batched inference equals a per-pixel sequential loop bitwise") {
  auto c = random_cube(30, 12, 8);
  auto model = tiny_model();
  auto norm = flat_normalizer();
  auto map = full_map_inference(model, c, 7, norm, 37);

  for (std::size_t y = 0; y < 30; ++y)
    for (std::size_t x = 0; x < 30; ++x) {
      if (!map.valid(y, x)) {
        CHECK(map.at(y, x) == 0.0f);
        continue;
      }
      auto patch = cube::extract_patch(c, 7, x, y);
      norm.apply(patch);
      auto shape = patch.shape();
      shape.insert(shape.begin(), 1);
      nn::Tensor<float> batch(shape, patch.vec());
      Rng rng(0);
      CHECK(map.at(y, x) == std::exp(model.forward(batch, nn::Mode::kEval, rng).at(0, 0)));
    }
}

TEST_CASE("inference is a pure function of its inputs") {
  auto c = random_cube();
  auto model = tiny_model();
  auto norm = flat_normalizer();
  auto a = full_map_inference(model, c, 4, norm, 64);
  auto b = full_map_inference(model, c, 4, norm, 11);
  CHECK(a.values == b.values);
}

TEST_CASE("out-of-range and pre-window dates are rejected") {
  auto c = random_cube();
  auto model = tiny_model();
  auto norm = flat_normalizer();
  CHECK_THROWS_AS(full_map_inference(model, c, 12, norm), std::invalid_argument);

  models::ModelConfig rc;
  rc.architecture = models::ArchitectureId::kConvLstm;
  rc.convlstm_filters = 2;
  rc.convlstm_head_width = 4;
  rc.classifier_widths = {8};
  auto recurrent = models::build_model(rc);
  CHECK_THROWS_AS(full_map_inference(recurrent, c, 5, norm), std::invalid_argument);
}

TEST_CASE("averaging identical members is the identity") {
  auto c = random_cube();
  auto model = tiny_model();
  auto norm = flat_normalizer();
  auto map = full_map_inference(model, c, 6, norm);
  auto avg = ensemble_average({map, map, map});
  CHECK(avg.values == map.values);
}

TEST_CASE("two members at 0 and 1 average to one half") {
  FdiMap a, b;
  a.height = b.height = 2;
  a.width = b.width = 2;
  a.date = b.date = 0;
  a.mask = b.mask = {1, 1, 1, 0};
  a.values = {0, 0, 0, 0};
  b.values = {1, 1, 1, 0};
  auto avg = ensemble_average({a, b});
  CHECK(avg.values[0] == 0.5f);
  CHECK(avg.values[2] == 0.5f);
  CHECK(avg.values[3] == 0.0f);
}

TEST_CASE("seven random members match a double-precision mean") {
  Rng rng(19);
  std::vector<FdiMap> members(7);
  for (auto& m : members) {
    m.height = m.width = 8;
    m.date = 2;
    m.mask.assign(64, 1);
    m.values.resize(64);
    for (auto& v : m.values) v = (float)rng.uniform();
  }
  auto avg = ensemble_average(members);
  for (std::size_t i = 0; i < 64; ++i) {
    double sum = 0;
    float lo = 1, hi = 0;
    for (const auto& m : members) {
      sum += m.values[i];
      lo = std::min(lo, m.values[i]);
      hi = std::max(hi, m.values[i]);
    }
    CHECK(std::abs(avg.values[i] - sum / 7.0) <= 1e-7);
    CHECK(avg.values[i] >= lo);
    CHECK(avg.values[i] <= hi);
  }
}

TEST_CASE("mask disagreement between members is rejected") {
  FdiMap a, b;
  a.height = b.height = 1;
  a.width = b.width = 2;
  a.date = b.date = 0;
  a.mask = {1, 0};
  b.mask = {1, 1};
  a.values = b.values = {0.5f, 0.5f};
  CHECK_THROWS_AS(ensemble_average({a, b}), std::invalid_argument);
}

TEST_CASE("rendered graymap follows the quantization rule") {
  FdiMap m;
  m.height = 1;
  m.width = 4;
  m.date = 9;
  m.model_id = "t";
  m.mask = {1, 1, 1, 0};
  m.values = {0.0f, 0.5f, 1.0f, 0.7f};
  auto dir = fs::temp_directory_path() / "fdw_map_render";
  fs::remove_all(dir);
  save_map(m, dir);
  std::ifstream f(dir / "fdi_9.pgm", std::ios::binary);
  std::string header;
  std::getline(f, header);
  CHECK(header == "P5");
  std::string dims, maxval;
  std::getline(f, dims);
  std::getline(f, maxval);
  CHECK(dims == "4 1");
  CHECK(maxval == "255");
  unsigned char px[4];
  f.read((char*)px, 4);
  CHECK(px[0] == 1);
  CHECK(px[1] == 128);
  CHECK(px[2] == 255);
  CHECK(px[3] == 0);
  fs::remove_all(dir);
}

TEST_CASE("sidecar round-trip restores exact values") {
  auto c = random_cube();
  auto model = tiny_model();
  auto norm = flat_normalizer();
  auto map = full_map_inference(model, c, 6, norm);
  auto dir = fs::temp_directory_path() / "fdw_map_rt";
  fs::remove_all(dir);
  save_map(map, dir);
  auto loaded = load_map(dir, 6, map.mask, map.height, map.width);
  CHECK(loaded.values == map.values);
  CHECK(loaded.model_id == map.model_id);

  auto wrong_mask = map.mask;
  wrong_mask[0] ^= 1;
  CHECK_THROWS_WITH_AS(load_map(dir, 6, wrong_mask, map.height, map.width),
                       doctest::Contains("CRC"), std::runtime_error);
  fs::remove_all(dir);
}
