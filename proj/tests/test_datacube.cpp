#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fdw/cube/io.hpp"
#include "fdw/cube/normalizer.hpp"
#include "fdw/cube/patch.hpp"
#include "fdw/cube/synthetic.hpp"

using namespace fdw::cube;
namespace fs = std::filesystem;

namespace {

SyntheticConfig small_config() {
  SyntheticConfig cfg;
  cfg.height = 20;
  cfg.width = 20;
  cfg.years = 2;
  cfg.days_per_year = 40;
  cfg.fire_window_start = 5;
  cfg.fire_window_end = 35;
  cfg.target_fires_per_year = 60;
  cfg.seed = 99;
  return cfg;
}

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("synthetic generation is deterministic under seed") {
  auto cfg = small_config();
  auto a = generate_synthetic_cube(cfg);
  auto b = generate_synthetic_cube(cfg);
  CHECK(a.clc == b.clc);
  CHECK(a.susceptible == b.susceptible);
  CHECK(a.burn == b.burn);
  for (std::size_t c = 0; c < kNumChannels; ++c) CHECK(a.channels[c] == b.channels[c]);
}

TEST_CASE("different seeds give different cubes") {
  auto cfg = small_config();
  auto a = generate_synthetic_cube(cfg);
  cfg.seed = 100;
  auto b = generate_synthetic_cube(cfg);
  CHECK(a.burn != b.burn);
}

TEST_CASE("flat planted process is thinned to the yearly fire target") {
  SyntheticConfig cfg;
  cfg.height = 32;
  cfg.width = 32;
  cfg.years = 1;
  cfg.days_per_year = 80;
  cfg.fire_window_start = 10;
  cfg.fire_window_end = 69;
  cfg.target_fires_per_year = 1000;
  cfg.coefficients.assign(kNumChannels, 0.0);
  cfg.intercept = 0.0;
  cfg.noise_scale = 0.0;
  cfg.seed = 5;
  auto cube = generate_synthetic_cube(cfg);
  std::size_t fires = 0;
  for (auto b : cube.burn) fires += b;
  CHECK(fires >= 900);
  CHECK(fires <= 1100);
}

TEST_CASE("fires never fall outside the susceptibility mask") {
  auto cube = generate_synthetic_cube(small_config());
  const std::size_t P = cube.plane();
  std::size_t outside = 0;
  for (std::size_t t = 0; t < cube.header.days; ++t)
    for (std::size_t i = 0; i < P; ++i)
      if (cube.burn[t * P + i] && !cube.susceptible[i]) ++outside;
  CHECK(outside == 0);
}

TEST_CASE("infeasible fire target is rejected") {
  auto cfg = small_config();
  cfg.target_fires_per_year = 10'000'000;
  CHECK_THROWS_AS(generate_synthetic_cube(cfg), std::invalid_argument);
}

TEST_CASE("cube save/load round-trip is bit-identical") {
  auto cube = generate_synthetic_cube(small_config());
  auto dir = temp_dir("fdw_cube_rt");
  save_cube(cube, dir);
  auto loaded = load_cube(dir);
  CHECK(loaded.clc == cube.clc);
  CHECK(loaded.susceptible == cube.susceptible);
  CHECK(loaded.burn == cube.burn);
  for (std::size_t c = 0; c < kNumChannels; ++c) CHECK(loaded.channels[c] == cube.channels[c]);
  CHECK(loaded.header.generator_seed == cube.header.generator_seed);
  fs::remove_all(dir);
}

TEST_CASE("corrupted payload byte raises a checksum error") {
  auto cube = generate_synthetic_cube(small_config());
  auto dir = temp_dir("fdw_cube_corrupt");
  save_cube(cube, dir);
  {
    std::fstream f(dir / "burn.u8", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(10);
    char b;
    f.seekg(10);
    f.get(b);
    b = (char)(b ^ 1);
    f.seekp(10);
    f.put(b);
  }
  CHECK_THROWS_AS(load_cube(dir), ChecksumError);
  fs::remove_all(dir);
}

TEST_CASE("truncated payload raises a truncation error") {
  auto cube = generate_synthetic_cube(small_config());
  auto dir = temp_dir("fdw_cube_trunc");
  save_cube(cube, dir);
  fs::resize_file(dir / "clc.u16", 16);
  CHECK_THROWS_AS(load_cube(dir), TruncatedPayloadError);
  fs::remove_all(dir);
}

TEST_CASE("format version mismatch is a distinct error") {
  auto cube = generate_synthetic_cube(small_config());
  auto dir = temp_dir("fdw_cube_ver");
  save_cube(cube, dir);
  std::string txt;
  {
    std::ifstream in(dir / "header.json");
    txt.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto pos = txt.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  txt.replace(pos, 19, "\"format_version\": 9");
  std::ofstream(dir / "header.json", std::ios::trunc) << txt;
  CHECK_THROWS_AS(load_cube(dir), VersionMismatchError);
  fs::remove_all(dir);
}

TEST_CASE("normalizer floors the std of a constant channel") {
  auto cube = generate_synthetic_cube(small_config());
  std::fill(cube.channels[kElevation].begin(), cube.channels[kElevation].end(), 3.0f);
  auto norm = Normalizer::fit(cube, 0, 39);
  CHECK(norm.stddev[kElevation] == 1e-6);
  auto patch = extract_patch(cube, 12, 10, 10);
  norm.apply(patch);
  for (std::size_t i = 0; i < 25 * 25; ++i)
    CHECK(patch.data()[kElevation * 625 + i] == 0.0f);
}

TEST_CASE("re-fitting standardized data gives mean 0 and std 1") {
  auto cube = generate_synthetic_cube(small_config());
  auto norm = Normalizer::fit(cube, 0, 39);
  const std::size_t n = 40 * cube.plane();
  for (std::size_t c = 0; c < kNumChannels; ++c)
    for (std::size_t j = 0; j < n; ++j)
      cube.channels[c][j] = (float)((cube.channels[c][j] - norm.mean[c]) / norm.stddev[c]);
  auto refit = Normalizer::fit(cube, 0, 39);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    CHECK(std::abs(refit.mean[c]) <= 1e-5);
    CHECK(std::abs(refit.stddev[c] - 1.0) <= 1e-5);
  }
}

TEST_CASE("normalizer statistics ignore frames outside the declared range") {
  auto cube = generate_synthetic_cube(small_config());
  auto before = Normalizer::fit(cube, 0, 39);
  const std::size_t P = cube.plane();
  for (std::size_t c = 0; c < kNumChannels; ++c)
    for (std::size_t t = 40; t < cube.header.days; ++t)
      for (std::size_t i = 0; i < P; ++i) cube.channels[c][t * P + i] = 1e6f;
  auto after = Normalizer::fit(cube, 0, 39);
  CHECK(before.mean == after.mean);
  CHECK(before.stddev == after.stddev);
}

TEST_CASE("normalizer rejects an empty day range") {
  auto cube = generate_synthetic_cube(small_config());
  CHECK_THROWS_AS(Normalizer::fit(cube, 20, 10), std::invalid_argument);
}

TEST_CASE("normalizer json round-trip") {
  auto cube = generate_synthetic_cube(small_config());
  auto norm = Normalizer::fit(cube, 0, 39);
  auto dir = temp_dir("fdw_norm");
  fs::create_directories(dir);
  norm.save(dir / "normalizer.json");
  auto loaded = Normalizer::load(dir / "normalizer.json");
  CHECK(loaded.mean == norm.mean);
  CHECK(loaded.stddev == norm.stddev);
  fs::remove_all(dir);
}

TEST_CASE("patch center pixel equals the cube value for every channel") {
  auto cube = generate_synthetic_cube(small_config());
  auto patch = extract_patch(cube, 15, 9, 11);
  for (std::size_t c = 0; c < kNumChannels; ++c)
    CHECK(patch.at(c, 12, 12) == cube.chan(c, 15, 11, 9));
  CHECK(patch.at(kNumChannels, 12, 12) == (float)cube.clc_at(11, 9));
}

TEST_CASE("patch corner reads use reflect-101 mirroring") {
  auto cube = generate_synthetic_cube(small_config());
  auto patch = extract_patch(cube, 15, 0, 0);
  // patch (0,0) maps to cube (-12,-12) -> mirrored (12,12)
  CHECK(patch.at(0, 0, 0) == cube.chan(0, 15, 12, 12));
  CHECK(patch.at(0, 0, 12) == cube.chan(0, 15, 12, 0));
}

TEST_CASE("temporal plane k holds day d-9+k, oldest first") {
  auto cube = generate_synthetic_cube(small_config());
  const std::size_t d = 20;
  auto patch = extract_patch(cube, d, 10, 10, kPatchSize, 10);
  REQUIRE(patch.shape() == std::vector<std::size_t>({10, 15, 25, 25}));
  for (std::size_t k = 0; k < 10; ++k)
    CHECK(patch.at(k, 4, 12, 12) == cube.chan(4, d - 9 + k, 10, 10));
}

TEST_CASE("temporal extraction before day 9 is rejected") {
  auto cube = generate_synthetic_cube(small_config());
  CHECK_THROWS_AS(extract_patch(cube, 5, 10, 10, kPatchSize, 10), std::invalid_argument);
  CHECK_NOTHROW(extract_patch(cube, 9, 10, 10, kPatchSize, 10));
}

TEST_CASE("patch extraction is pure") {
  auto cube = generate_synthetic_cube(small_config());
  auto a = extract_patch(cube, 17, 6, 7, kPatchSize, 10);
  auto b = extract_patch(cube, 17, 6, 7, kPatchSize, 10);
  CHECK(a.vec() == b.vec());
}
