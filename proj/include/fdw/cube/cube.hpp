#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fdw::cube {

/// The 14 retained continuous predictors, in storage order.
const std::vector<std::string>& channel_schema();
constexpr std::size_t kNumChannels = 14;

// schema indices
enum Channel : std::size_t {
  kNdvi = 0,
  kLstDay,
  kLstNight,
  kDewpointMax,
  kT2mMax,
  kPressureMax,
  kPrecipMax,
  kWindMax,
  kRhMin,
  kElevation,
  kSlope,
  kRoadDist,
  kWaterDist,
  kPopDensity,
};

struct CubeHeader {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t days = 0;
  std::size_t days_per_year = 0;  // uniform synthetic year length
  std::string start_date;         // ISO-8601
  std::vector<std::string> channels;
  std::size_t clc_classes = 0;
  int version = 1;
  std::optional<std::uint64_t> generator_seed;  // absent for ingested cubes

  void validate() const;
};

/// Spatiotemporal raster stack. Immutable after construction; concurrent
/// readers are safe.
struct DataCube {
  CubeHeader header;
  // per channel, day-major T*H*W
  std::vector<std::vector<float>> channels;
  std::vector<std::uint16_t> clc;         // H*W
  std::vector<std::uint8_t> susceptible;  // H*W
  std::vector<std::uint8_t> burn;         // day-major T*H*W

  std::size_t plane() const { return header.height * header.width; }

  float chan(std::size_t c, std::size_t day, std::size_t y, std::size_t x) const {
    return channels[c][day * plane() + y * header.width + x];
  }
  bool burned(std::size_t day, std::size_t y, std::size_t x) const {
    return burn[day * plane() + y * header.width + x] != 0;
  }
  bool is_susceptible(std::size_t y, std::size_t x) const {
    return susceptible[y * header.width + x] != 0;
  }
  std::uint16_t clc_at(std::size_t y, std::size_t x) const {
    return clc[y * header.width + x];
  }
  std::size_t year_of(std::size_t day) const { return day / header.days_per_year; }
  std::size_t years() const { return header.days / header.days_per_year; }

  /// Checks the cross-field invariants (fires only on susceptible pixels,
  /// classes below the class count, finite rasters). Throws on violation.
  void validate() const;
};

}  // namespace fdw::cube
