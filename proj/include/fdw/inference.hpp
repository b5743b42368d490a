#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fdw/cube/cube.hpp"
#include "fdw/cube/normalizer.hpp"
#include "fdw/models.hpp"

namespace fdw::inference {

/// Dense fire-danger map for one day. Values are meaningful only where the
/// mask (susceptible pixels) is set; everything else stays 0.
struct FdiMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t date = 0;
  std::string model_id;
  std::vector<float> values;        // H*W row-major, in [0,1] where valid
  std::vector<std::uint8_t> mask;   // H*W

  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  bool valid(std::size_t y, std::size_t x) const { return mask[y * width + x] != 0; }
  std::size_t valid_count() const;
};

/// Slides the patch over every susceptible pixel and writes
/// exp(log-probability of fire) back to the center. Tiles are batched;
/// batching cannot change per-pixel results in eval mode.
FdiMap full_map_inference(models::ModelBundle& model, const cube::DataCube& cube,
                          std::size_t date, const cube::Normalizer& norm,
                          std::size_t batch_size = 256, std::string model_id = "");

/// Pixel-wise mean over members in list order; masks and dates must agree.
FdiMap ensemble_average(const std::vector<FdiMap>& members,
                        std::string model_id = "ensemble_mean");

/// fdi_<date>.f32 (row-major little-endian), fdi_<date>.json (date, model
/// id, mask CRC) and an 8-bit P5 graymap view with 0 reserved for invalid.
void save_map(const FdiMap& map, const std::filesystem::path& dir);

/// Reads a saved map back; the caller supplies the validity mask, which is
/// verified against the stored CRC.
FdiMap load_map(const std::filesystem::path& dir, std::size_t date,
                const std::vector<std::uint8_t>& mask, std::size_t height, std::size_t width);

}  // namespace fdw::inference
