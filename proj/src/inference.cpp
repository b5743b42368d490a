#include "fdw/inference.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fdw/common/crc64.hpp"
#include "fdw/cube/patch.hpp"

namespace fdw::inference {

using nlohmann::json;

std::size_t FdiMap::valid_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += m != 0;
  return n;
}

FdiMap full_map_inference(models::ModelBundle& model, const cube::DataCube& cube,
                          std::size_t date, const cube::Normalizer& norm,
                          std::size_t batch_size, std::string model_id) {
  if (date >= cube.header.days)
    throw std::invalid_argument("inference: date " + std::to_string(date) +
                                " outside the cube (" + std::to_string(cube.header.days) +
                                " days)");
  const std::size_t temporal = model.config.temporal_len();
  if (date + 1 < temporal)
    throw std::invalid_argument("inference: date " + std::to_string(date) +
                                " precedes the first full temporal window");
  if (batch_size == 0) throw std::invalid_argument("inference: batch size must be positive");

  FdiMap map;
  map.height = cube.header.height;
  map.width = cube.header.width;
  map.date = date;
  map.model_id = model_id.empty()
                     ? models::to_string(model.config.architecture) + "#" +
                           std::to_string(model.provenance.init_seed)
                     : std::move(model_id);
  map.values.assign(map.height * map.width, 0.0f);
  map.mask.assign(cube.susceptible.begin(), cube.susceptible.end());

  std::vector<std::pair<std::size_t, std::size_t>> pixels;  // (x, y), row-major
  for (std::size_t y = 0; y < map.height; ++y)
    for (std::size_t x = 0; x < map.width; ++x)
      if (map.mask[y * map.width + x]) pixels.push_back({x, y});

  Rng unused(0);
  for (std::size_t start = 0; start < pixels.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, pixels.size() - start);
    nn::Tensor<float> batch;
    for (std::size_t i = 0; i < count; ++i) {
      const auto [x, y] = pixels[start + i];
      auto patch = cube::extract_patch(cube, date, x, y, model.config.patch_size, temporal);
      norm.apply(patch);
      if (i == 0) {
        auto shape = patch.shape();
        shape.insert(shape.begin(), count);
        batch = nn::Tensor<float>(shape);
      }
      std::copy(patch.data(), patch.data() + patch.size(), batch.data() + i * patch.size());
    }
    auto logp = model.forward(batch, nn::Mode::kEval, unused);
    for (std::size_t i = 0; i < count; ++i) {
      const auto [x, y] = pixels[start + i];
      map.values[y * map.width + x] = std::exp(logp.at(i, 0));
    }
  }
  return map;
}

FdiMap ensemble_average(const std::vector<FdiMap>& members, std::string model_id) {
  if (members.empty()) throw std::invalid_argument("ensemble average: no members");
  const auto& first = members.front();
  for (const auto& m : members)
    if (m.mask != first.mask || m.date != first.date || m.height != first.height ||
        m.width != first.width)
      throw std::invalid_argument("ensemble average: member masks or dates disagree");

  FdiMap out = first;
  out.model_id = std::move(model_id);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!out.mask[i]) continue;
    double sum = 0.0;
    for (const auto& m : members) sum += m.values[i];
    out.values[i] = (float)(sum / (double)members.size());
  }
  return out;
}

void save_map(const FdiMap& map, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string stem = "fdi_" + std::to_string(map.date);

  {
    std::ofstream f(dir / (stem + ".f32"), std::ios::trunc | std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / (stem + ".f32")).string());
    f.write(reinterpret_cast<const char*>(map.values.data()),
            (std::streamsize)(map.values.size() * sizeof(float)));
  }
  {
    json j{{"date", map.date},
           {"model_id", map.model_id},
           {"height", map.height},
           {"width", map.width},
           {"mask_crc64", Crc64::to_hex(Crc64::of(map.mask.data(), map.mask.size()))},
           {"values_crc64",
            Crc64::to_hex(Crc64::of(map.values.data(), map.values.size() * sizeof(float)))}};
    std::ofstream(dir / (stem + ".json"), std::ios::trunc) << j.dump(2) << "\n";
  }
  {
    std::ofstream f(dir / (stem + ".pgm"), std::ios::trunc | std::ios::binary);
    f << "P5\n" << map.width << " " << map.height << "\n255\n";
    for (std::size_t i = 0; i < map.values.size(); ++i) {
      unsigned char px = 0;
      if (map.mask[i])
        px = (unsigned char)(1 + (int)std::lround((double)map.values[i] * 254.0));
      f.put((char)px);
    }
  }
}

FdiMap load_map(const std::filesystem::path& dir, std::size_t date,
                const std::vector<std::uint8_t>& mask, std::size_t height, std::size_t width) {
  const std::string stem = "fdi_" + std::to_string(date);
  std::ifstream jf(dir / (stem + ".json"));
  if (!jf) throw std::runtime_error("cannot read " + (dir / (stem + ".json")).string());
  json j = json::parse(jf);

  FdiMap map;
  map.date = j.at("date").get<std::size_t>();
  map.model_id = j.at("model_id").get<std::string>();
  map.height = j.at("height").get<std::size_t>();
  map.width = j.at("width").get<std::size_t>();
  if (map.date != date || map.height != height || map.width != width)
    throw std::runtime_error("fdi map metadata mismatch in " + dir.string());
  if (Crc64::to_hex(Crc64::of(mask.data(), mask.size())) !=
      j.at("mask_crc64").get<std::string>())
    throw std::runtime_error("fdi map mask does not match the stored CRC");
  map.mask = mask;

  map.values.assign(height * width, 0.0f);
  std::ifstream f(dir / (stem + ".f32"), std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + (dir / (stem + ".f32")).string());
  f.read(reinterpret_cast<char*>(map.values.data()),
         (std::streamsize)(map.values.size() * sizeof(float)));
  if ((std::size_t)f.gcount() != map.values.size() * sizeof(float))
    throw std::runtime_error("fdi map payload truncated: " + (dir / (stem + ".f32")).string());
  if (Crc64::to_hex(Crc64::of(map.values.data(), map.values.size() * sizeof(float))) !=
      j.at("values_crc64").get<std::string>())
    throw std::runtime_error("fdi map values do not match the stored CRC");
  return map;
}

}  // namespace fdw::inference
