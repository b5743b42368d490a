#include "fdw/cube/cube.hpp"

#include <cmath>
#include <stdexcept>

namespace fdw::cube {

const std::vector<std::string>& channel_schema() {
  static const std::vector<std::string> names = {
      "ndvi",      "lst_day",  "lst_night", "dewpoint_max", "t2m_max",
      "sp_max",    "tp_max",   "wind_max",  "rh_min",       "elevation",
      "slope",     "road_dist", "water_dist", "pop_density",
  };
  return names;
}

void CubeHeader::validate() const {
  if (channels != channel_schema())
    throw std::runtime_error("cube header: channel names deviate from the fixed schema");
  if (days < 1) throw std::runtime_error("cube header: day count must be >= 1");
  if (height == 0 || width == 0) throw std::runtime_error("cube header: empty grid");
  if (days_per_year == 0 || days % days_per_year != 0)
    throw std::runtime_error("cube header: days must be a whole number of years");
}

void DataCube::validate() const {
  header.validate();
  const std::size_t p = plane();
  if (channels.size() != kNumChannels) throw std::runtime_error("cube: channel count mismatch");
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != header.days * p)
      throw std::runtime_error("cube: raster size mismatch in channel " + header.channels[c]);
    for (float v : channels[c])
      if (!std::isfinite(v))
        throw std::runtime_error("cube: non-finite value in channel " + header.channels[c]);
  }
  if (clc.size() != p || susceptible.size() != p || burn.size() != header.days * p)
    throw std::runtime_error("cube: mask size mismatch");
  for (std::uint16_t cls : clc)
    if (cls >= header.clc_classes) throw std::runtime_error("cube: CLC class out of range");
  for (std::size_t t = 0; t < header.days; ++t)
    for (std::size_t i = 0; i < p; ++i)
      if (burn[t * p + i] && !susceptible[i])
        throw std::runtime_error("cube: burn mask fires on a non-susceptible pixel");
}

}  // namespace fdw::cube
