#pragma once

#include <cstdint>
#include <vector>

#include "fdw/cube/cube.hpp"

namespace fdw::cube {

/// Desk-scale stand-in for the real datacube: smooth random fields, a
/// seasonal weather cycle with an autocorrelated regional driver, and a
/// planted logistic fire process over the standardized channels.
struct SyntheticConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t years = 3;
  std::size_t days_per_year = 120;
  std::size_t fire_window_start = 20;  // day-of-year, inclusive
  std::size_t fire_window_end = 110;   // inclusive
  std::size_t target_fires_per_year = 300;
  std::size_t clc_classes = 15;
  std::vector<int> susceptible_classes = {4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<double> coefficients;  // one weight per continuous channel
  double intercept = -2.0;
  double noise_scale = 0.5;
  std::uint64_t seed = 1234;

  static std::vector<double> default_coefficients();
  void validate() const;
};

DataCube generate_synthetic_cube(const SyntheticConfig& cfg);

/// Noise-free planted hazard z(t,x), recomputed from the stored channels and
/// the config coefficients; sigma(z) is the Bayes-optimal fire score.
std::vector<double> planted_hazard(const DataCube& cube, const SyntheticConfig& cfg);

}  // namespace fdw::cube
