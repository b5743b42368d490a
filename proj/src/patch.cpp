#include "fdw/cube/patch.hpp"

#include <stdexcept>

namespace fdw::cube {

nn::Tensor<float> extract_patch(const DataCube& cube, std::size_t date, std::size_t x,
                                std::size_t y, std::size_t size, std::size_t temporal_len) {
  if (temporal_len != 1 && temporal_len != 10)
    throw std::invalid_argument("extract_patch: temporal length must be 1 or 10");
  if (date >= cube.header.days) throw std::invalid_argument("extract_patch: date out of range");
  if (date + 1 < temporal_len)
    throw std::invalid_argument("extract_patch: date " + std::to_string(date) +
                                " precedes the " + std::to_string(temporal_len) +
                                "-day history window");
  if (size % 2 == 0) throw std::invalid_argument("extract_patch: size must be odd");

  const std::size_t H = cube.header.height, W = cube.header.width;
  const std::size_t half = size / 2;
  const std::size_t C = kNumChannels + 1;
  nn::Tensor<float> out(temporal_len == 1
                            ? std::vector<std::size_t>{C, size, size}
                            : std::vector<std::size_t>{temporal_len, C, size, size});
  float* data = out.data();
  for (std::size_t step = 0; step < temporal_len; ++step) {
    const std::size_t day = date + 1 - temporal_len + step;  // oldest first
    for (std::size_t py = 0; py < size; ++py) {
      const std::size_t iy = mirror_index((std::ptrdiff_t)y + (std::ptrdiff_t)py - (std::ptrdiff_t)half, H);
      for (std::size_t px = 0; px < size; ++px) {
        const std::size_t ix = mirror_index((std::ptrdiff_t)x + (std::ptrdiff_t)px - (std::ptrdiff_t)half, W);
        for (std::size_t c = 0; c < kNumChannels; ++c)
          data[((step * C + c) * size + py) * size + px] = cube.chan(c, day, iy, ix);
        data[((step * C + kNumChannels) * size + py) * size + px] = (float)cube.clc_at(iy, ix);
      }
    }
  }
  return out;
}

}  // namespace fdw::cube
