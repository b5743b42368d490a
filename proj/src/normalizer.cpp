#include "fdw/cube/normalizer.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace fdw::cube {

Normalizer Normalizer::fit(const DataCube& cube, std::size_t day_lo, std::size_t day_hi) {
  if (day_hi < day_lo || day_hi >= cube.header.days)
    throw std::invalid_argument("normalizer: empty or out-of-range day range");
  const std::size_t P = cube.plane();
  const std::size_t n = (day_hi - day_lo + 1) * P;
  Normalizer norm;
  norm.mean.resize(kNumChannels);
  norm.stddev.resize(kNumChannels);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    double s = 0;
    for (std::size_t t = day_lo; t <= day_hi; ++t)
      for (std::size_t i = 0; i < P; ++i) s += cube.channels[c][t * P + i];
    const double mean = s / (double)n;
    double v = 0;
    for (std::size_t t = day_lo; t <= day_hi; ++t)
      for (std::size_t i = 0; i < P; ++i) {
        const double d = cube.channels[c][t * P + i] - mean;
        v += d * d;
      }
    norm.mean[c] = mean;
    norm.stddev[c] = std::max(std::sqrt(v / (double)n), 1e-6);
  }
  return norm;
}

void Normalizer::apply(nn::Tensor<float>& patch) const {
  const std::size_t rank = patch.rank();
  if (rank != 3 && rank != 4) throw std::invalid_argument("normalizer: patch rank must be 3 or 4");
  const std::size_t steps = rank == 4 ? patch.dim(0) : 1;
  const std::size_t C = patch.dim(rank - 3);
  if (C != kNumChannels + 1)
    throw std::invalid_argument("normalizer: patch must carry 14 channels + CLC plane");
  const std::size_t plane = patch.dim(rank - 2) * patch.dim(rank - 1);
  float* data = patch.data();
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      float* p = data + (t * C + c) * plane;
      const float m = (float)mean[c];
      const float inv = (float)(1.0 / stddev[c]);
      for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - m) * inv;
    }
}

void Normalizer::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["mean"] = mean;
  j["stddev"] = stddev;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write normalizer: " + path.string());
  out << j.dump(2) << "\n";
}

Normalizer Normalizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read normalizer: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  Normalizer n;
  n.mean = j.at("mean").get<std::vector<double>>();
  n.stddev = j.at("stddev").get<std::vector<double>>();
  if (n.mean.size() != kNumChannels || n.stddev.size() != kNumChannels)
    throw std::runtime_error("normalizer: wrong channel count in " + path.string());
  return n;
}

}  // namespace fdw::cube
