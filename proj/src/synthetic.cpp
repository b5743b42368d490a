#include "fdw/cube/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdw/common/rng.hpp"

namespace fdw::cube {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Smooth 2-d field from a handful of random low-frequency cosine waves,
/// scaled to roughly unit variance.
std::vector<double> smooth_field(std::size_t h, std::size_t w, Rng& rng) {
  constexpr int kWaves = 6;
  double ax[kWaves], fx[kWaves], fy[kWaves], ph[kWaves];
  double power = 0;
  for (int k = 0; k < kWaves; ++k) {
    ax[k] = rng.uniform(0.5, 1.0);
    fx[k] = rng.uniform(-3.0, 3.0);
    fy[k] = rng.uniform(-3.0, 3.0);
    ph[k] = rng.uniform(0.0, kTwoPi);
    power += 0.5 * ax[k] * ax[k];
  }
  const double norm = 1.0 / std::sqrt(power);
  std::vector<double> f(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double v = 0;
      for (int k = 0; k < kWaves; ++k)
        v += ax[k] * std::cos(kTwoPi * (fx[k] * (double)x / (double)w +
                                        fy[k] * (double)y / (double)h) + ph[k]);
      f[y * w + x] = v * norm;
    }
  return f;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ChannelTraits {
  double seasonal_load;  // coupling to the seasonal cycle + regional driver
  double ar_scale;       // own daily anomaly
  double pixel_noise;
};

// per-channel coupling; negative loads move against the hot/dry driver
ChannelTraits traits_for(std::size_t c) {
  switch (c) {
    case kLstDay: return {1.0, 0.4, 0.3};
    case kLstNight: return {0.6, 0.4, 0.3};
    case kDewpointMax: return {0.5, 0.4, 0.3};
    case kT2mMax: return {1.2, 0.3, 0.2};
    case kPressureMax: return {0.3, 0.5, 0.2};
    case kPrecipMax: return {-0.8, 0.6, 0.4};
    case kWindMax: return {0.6, 0.7, 0.4};
    case kRhMin: return {-1.2, 0.3, 0.2};
    default: return {0.0, 0.0, 0.0};
  }
}

}  // namespace

std::vector<double> SyntheticConfig::default_coefficients() {
  std::vector<double> c(kNumChannels, 0.0);
  c[kNdvi] = -0.4;
  c[kLstDay] = 0.5;
  c[kLstNight] = 0.2;
  c[kDewpointMax] = 0.3;
  c[kT2mMax] = 1.5;
  c[kPressureMax] = 0.2;
  c[kPrecipMax] = -0.5;
  c[kWindMax] = 0.8;
  c[kRhMin] = -1.5;
  c[kElevation] = -0.3;
  c[kSlope] = 0.3;
  c[kRoadDist] = -0.2;
  c[kWaterDist] = 0.2;
  c[kPopDensity] = -0.2;
  return c;
}

void SyntheticConfig::validate() const {
  if (height == 0 || width == 0 || years == 0 || days_per_year == 0)
    throw std::invalid_argument("synthetic config: empty dimensions");
  if (fire_window_end < fire_window_start || fire_window_end >= days_per_year)
    throw std::invalid_argument("synthetic config: empty or out-of-range fire window");
  if (!coefficients.empty() && coefficients.size() != kNumChannels)
    throw std::invalid_argument("synthetic config: coefficient vector must have one weight per channel");
  for (double c : coefficients)
    if (!std::isfinite(c)) throw std::invalid_argument("synthetic config: non-finite coefficient");
  if (noise_scale < 0) throw std::invalid_argument("synthetic config: negative noise scale");
  if (susceptible_classes.empty())
    throw std::invalid_argument("synthetic config: susceptible class set is empty");
  for (int c : susceptible_classes)
    if (c < 0 || (std::size_t)c >= clc_classes)
      throw std::invalid_argument("synthetic config: susceptible class out of range");
}

DataCube generate_synthetic_cube(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::vector<double> coef =
      cfg.coefficients.empty() ? SyntheticConfig::default_coefficients() : cfg.coefficients;

  Rng rng(cfg.seed);
  const std::size_t H = cfg.height, W = cfg.width, P = H * W;
  const std::size_t T = cfg.years * cfg.days_per_year;

  DataCube cube;
  cube.header.height = H;
  cube.header.width = W;
  cube.header.days = T;
  cube.header.days_per_year = cfg.days_per_year;
  cube.header.start_date = "2009-01-01";
  cube.header.channels = channel_schema();
  cube.header.clc_classes = cfg.clc_classes;
  cube.header.generator_seed = cfg.seed;

  // CLC blobs: nearest-site Voronoi, classes assigned round-robin over sites
  const std::size_t n_sites = cfg.clc_classes * 4;
  std::vector<double> sx(n_sites), sy(n_sites);
  std::vector<std::uint16_t> scls(n_sites);
  for (std::size_t s = 0; s < n_sites; ++s) {
    sx[s] = rng.uniform(0.0, (double)W);
    sy[s] = rng.uniform(0.0, (double)H);
    scls[s] = (std::uint16_t)(s % cfg.clc_classes);
  }
  cube.clc.resize(P);
  cube.susceptible.resize(P);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      double best = 1e30;
      std::uint16_t cls = 0;
      for (std::size_t s = 0; s < n_sites; ++s) {
        const double d = (sx[s] - x) * (sx[s] - x) + (sy[s] - y) * (sy[s] - y);
        if (d < best) {
          best = d;
          cls = scls[s];
        }
      }
      cube.clc[y * W + x] = cls;
      const bool susc = std::find(cfg.susceptible_classes.begin(), cfg.susceptible_classes.end(),
                                  (int)cls) != cfg.susceptible_classes.end();
      cube.susceptible[y * W + x] = susc ? 1 : 0;
    }

  // static channels
  cube.channels.assign(kNumChannels, std::vector<float>(T * P));
  auto elevation = smooth_field(H, W, rng);
  auto slope_f = smooth_field(H, W, rng);
  auto road_f = smooth_field(H, W, rng);
  auto water_f = smooth_field(H, W, rng);
  auto pop_f = smooth_field(H, W, rng);
  std::vector<std::vector<double>> statics(kNumChannels);
  statics[kElevation] = elevation;
  statics[kSlope].resize(P);
  statics[kRoadDist].resize(P);
  statics[kWaterDist].resize(P);
  statics[kPopDensity].resize(P);
  for (std::size_t i = 0; i < P; ++i) {
    statics[kSlope][i] = std::abs(slope_f[i]);
    statics[kRoadDist][i] = std::abs(road_f[i]);
    statics[kWaterDist][i] = std::abs(water_f[i]);
    statics[kPopDensity][i] = std::exp(0.8 * pop_f[i]);
  }

  // spatial base pattern per dynamic channel
  std::vector<std::vector<double>> base(kNumChannels);
  for (std::size_t c = 0; c < kNumChannels; ++c)
    if (statics[c].empty()) base[c] = smooth_field(H, W, rng);

  // regional hot/dry driver, AR(1)
  std::vector<double> driver(T);
  double d = 0;
  for (std::size_t t = 0; t < T; ++t) {
    d = 0.8 * d + 0.6 * rng.normal();
    driver[t] = d;
  }
  // per-channel daily anomaly, AR(1)
  std::vector<std::vector<double>> anomaly(kNumChannels, std::vector<double>(T, 0.0));
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (traits_for(c).ar_scale == 0.0) continue;
    double a = 0;
    for (std::size_t t = 0; t < T; ++t) {
      a = 0.7 * a + 0.7 * rng.normal();
      anomaly[c][t] = a;
    }
  }

  const double mid = 0.5 * (cfg.fire_window_start + cfg.fire_window_end);
  const double span = 0.5 * (double)(cfg.fire_window_end - cfg.fire_window_start + 1);
  auto seasonal = [&](std::size_t t) {
    const double doy = (double)(t % cfg.days_per_year);
    const double u = (doy - mid) / span;
    return std::exp(-u * u);
  };

  // fill channels
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    auto& out = cube.channels[c];
    if (!statics[c].empty()) {
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < P; ++i) out[t * P + i] = (float)statics[c][i];
      continue;
    }
    if (c == kNdvi) {
      // slow vegetation signal on a 10-day update cadence
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t block = t / 10;
        const double dryness = seasonal(block * 10) + 0.3 * driver[std::min(block * 10, T - 1)];
        for (std::size_t i = 0; i < P; ++i)
          out[t * P + i] = (float)(base[c][i] - 0.6 * dryness);
      }
      continue;
    }
    const ChannelTraits tr = traits_for(c);
    for (std::size_t t = 0; t < T; ++t) {
      const double level = tr.seasonal_load * (seasonal(t) * 2.0 + driver[t]) +
                           tr.ar_scale * anomaly[c][t];
      for (std::size_t i = 0; i < P; ++i) {
        const double px = base[c][i] + level + tr.pixel_noise * rng.normal();
        out[t * P + i] = (float)px;
      }
    }
  }

  // planted logistic fire process over standardized channels
  const std::vector<double> z = [&] {
    SyntheticConfig with_coef = cfg;
    with_coef.coefficients = coef;
    return planted_hazard(cube, with_coef);
  }();

  const std::size_t win_lo = cfg.fire_window_start, win_hi = cfg.fire_window_end;
  std::size_t susceptible_count = 0;
  for (std::size_t i = 0; i < P; ++i) susceptible_count += cube.susceptible[i];
  const std::size_t window_days = win_hi - win_lo + 1;
  if (cfg.target_fires_per_year > susceptible_count * window_days)
    throw std::invalid_argument("synthetic config: target fire count exceeds susceptible pixel-days");

  std::vector<double> prob(T * P, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t doy = t % cfg.days_per_year;
    if (doy < win_lo || doy > win_hi) continue;
    for (std::size_t i = 0; i < P; ++i) {
      if (!cube.susceptible[i]) continue;
      const double noisy = z[t * P + i] + cfg.noise_scale * rng.normal();
      prob[t * P + i] = sigmoid(noisy);
    }
  }

  cube.burn.assign(T * P, 0);
  for (std::size_t yr = 0; yr < cfg.years; ++yr) {
    double sum = 0;
    const std::size_t t0 = yr * cfg.days_per_year, t1 = t0 + cfg.days_per_year;
    for (std::size_t t = t0; t < t1; ++t)
      for (std::size_t i = 0; i < P; ++i) sum += prob[t * P + i];
    const double alpha = sum > 0 ? (double)cfg.target_fires_per_year / sum : 0.0;
    for (std::size_t t = t0; t < t1; ++t)
      for (std::size_t i = 0; i < P; ++i) {
        const double p = std::min(1.0, alpha * prob[t * P + i]);
        if (p > 0 && rng.bernoulli(p)) cube.burn[t * P + i] = 1;
      }
  }

  cube.validate();
  return cube;
}

std::vector<double> planted_hazard(const DataCube& cube, const SyntheticConfig& cfg) {
  const std::vector<double> coef =
      cfg.coefficients.empty() ? SyntheticConfig::default_coefficients() : cfg.coefficients;
  const std::size_t P = cube.plane(), T = cube.header.days;
  std::vector<double> mean(kNumChannels, 0.0), sd(kNumChannels, 0.0);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    double s = 0;
    for (float v : cube.channels[c]) s += v;
    mean[c] = s / (double)(T * P);
    double v2 = 0;
    for (float v : cube.channels[c]) {
      const double dd = v - mean[c];
      v2 += dd * dd;
    }
    sd[c] = std::max(std::sqrt(v2 / (double)(T * P)), 1e-6);
  }
  std::vector<double> z(T * P, cfg.intercept);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (coef[c] == 0.0) continue;
    const double k = coef[c] / sd[c];
    for (std::size_t j = 0; j < T * P; ++j) z[j] += k * (cube.channels[c][j] - mean[c]);
  }
  return z;
}

}  // namespace fdw::cube
