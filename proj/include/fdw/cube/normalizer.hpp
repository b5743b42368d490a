#pragma once

#include <filesystem>
#include <vector>

#include "fdw/cube/cube.hpp"
#include "fdw/nn/tensor.hpp"

namespace fdw::cube {

/// Per-channel z-score statistics, fit on the training day range only. The
/// integer CLC plane (patch channel 14) is never standardized.
struct Normalizer {
  std::vector<double> mean;  // one per continuous channel
  std::vector<double> stddev;

  /// Fits over days [day_lo, day_hi], inclusive. Std is floored at 1e-6.
  static Normalizer fit(const DataCube& cube, std::size_t day_lo, std::size_t day_hi);

  /// Standardizes the leading 14 channels of a patch in place. Accepts the
  /// (15,25,25) layout or the (t,15,25,25) stack.
  void apply(nn::Tensor<float>& patch) const;

  void save(const std::filesystem::path& path) const;
  static Normalizer load(const std::filesystem::path& path);
};

}  // namespace fdw::cube
