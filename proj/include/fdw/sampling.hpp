#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fdw/cube/cube.hpp"
#include "fdw/cube/normalizer.hpp"
#include "fdw/cube/patch.hpp"
#include "fdw/nn/tensor.hpp"

namespace fdw::sampling {

constexpr int kLabelFire = 0;
constexpr int kLabelNoFire = 1;

struct SampleIndex {
  std::size_t date = 0;  // cube day index
  std::size_t x = 0;
  std::size_t y = 0;
  int label = kLabelFire;
  std::size_t year = 0;

  bool operator==(const SampleIndex&) const = default;
};

struct SamplingConfig {
  std::size_t negative_ratio = 2;  // no-fire per fire, per year
  std::size_t patch_size = cube::kPatchSize;
  /// A CLC class admits fire samples iff it hosts at least this fraction of
  /// all fires.
  double clc_share_threshold = 0.01;
  std::uint64_t seed = 7;

  std::size_t margin() const { return (patch_size - 1) / 2; }
  void validate() const;
};

/// Counts burn-mask pixels grouped by the CLC class at that pixel.
std::vector<std::size_t> fire_clc_histogram(const cube::DataCube& cube);

/// CLC classes whose fire share passes the threshold.
std::vector<bool> admitted_classes(const cube::DataCube& cube, const SamplingConfig& cfg);

/// One fire sample per burn pixel in an admitted class, deduplicated to one
/// (year,x,y), interior centers only. Throws if the result is empty.
std::vector<SampleIndex> select_fire_samples(const cube::DataCube& cube,
                                             const SamplingConfig& cfg);

/// The six-rule negative sampling strategy; deterministic under the config
/// seed with per-year child streams.
std::vector<SampleIndex> select_nofire_samples(const cube::DataCube& cube,
                                               const std::vector<SampleIndex>& fires,
                                               const SamplingConfig& cfg);

struct DatasetSplit {
  std::vector<SampleIndex> train, val, test;
  std::vector<std::size_t> train_years, val_years, test_years;
};

DatasetSplit chronological_split(const std::vector<SampleIndex>& samples,
                                 std::vector<std::size_t> train_years,
                                 std::vector<std::size_t> val_years,
                                 std::vector<std::size_t> test_years);

/// Materialized labeled tensors: standardized channels + raw CLC plane.
struct Dataset {
  std::vector<nn::Tensor<float>> patches;
  std::vector<int> labels;
  std::vector<SampleIndex> index;
  std::size_t dropped_early = 0;  // temporal samples inside the first 9 days
};

Dataset assemble_dataset(const cube::DataCube& cube, const std::vector<SampleIndex>& samples,
                         const cube::Normalizer& norm, std::size_t temporal_len);

/// CSV manifest: `year,date_index,x,y,label`, LF line endings.
void save_manifest(const std::vector<SampleIndex>& samples, const std::filesystem::path& path);
std::vector<SampleIndex> load_manifest(const std::filesystem::path& path);

}  // namespace fdw::sampling
