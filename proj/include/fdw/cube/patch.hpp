#pragma once

#include "fdw/cube/cube.hpp"
#include "fdw/nn/tensor.hpp"

namespace fdw::cube {

constexpr std::size_t kPatchSize = 25;
constexpr std::size_t kPatchMargin = (kPatchSize - 1) / 2;

/// Reflect-101 index for map-border reads (the edge pixel is not repeated).
inline std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) i = -i;
  if (i >= (std::ptrdiff_t)n) i = 2 * (std::ptrdiff_t)n - 2 - i;
  return (std::size_t)i;
}

/// Raw (un-normalized) patch centered on (x,y): 14 continuous channels plus
/// the integer CLC plane as channel 14, per timestep. temporal_len 1 yields
/// (15,25,25); temporal_len 10 yields (10,15,25,25) with the event day last.
/// Out-of-bounds spatial reads use mirror padding.
nn::Tensor<float> extract_patch(const DataCube& cube, std::size_t date, std::size_t x,
                                std::size_t y, std::size_t size = kPatchSize,
                                std::size_t temporal_len = 1);

}  // namespace fdw::cube
