#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fdw/cube/synthetic.hpp"
#include "fdw/sampling.hpp"
#include "support/rule_audit.hpp"

using namespace fdw::sampling;
using namespace fdw::cube;
namespace fs = std::filesystem;

namespace {

SyntheticConfig gen_config() {
  SyntheticConfig cfg;
  cfg.height = 40;
  cfg.width = 40;
  cfg.years = 3;
  cfg.days_per_year = 60;
  cfg.fire_window_start = 10;
  cfg.fire_window_end = 50;
  cfg.target_fires_per_year = 80;
  cfg.seed = 31;
  return cfg;
}

/// Hand-built minimal cube: one susceptible class everywhere, constant
/// channels.
DataCube manual_cube(std::size_t hw = 30, std::size_t days = 20) {
  DataCube cube;
  cube.header.height = hw;
  cube.header.width = hw;
  cube.header.days = days;
  cube.header.days_per_year = days;
  cube.header.start_date = "2009-01-01";
  cube.header.channels = channel_schema();
  cube.header.clc_classes = 8;
  cube.channels.assign(kNumChannels, std::vector<float>(days * hw * hw, 1.0f));
  cube.clc.assign(hw * hw, 3);
  cube.susceptible.assign(hw * hw, 1);
  cube.burn.assign(days * hw * hw, 0);
  return cube;
}

}  // namespace

TEST_CASE("fire histogram of a fireless cube is all zero") {
  auto cube = manual_cube();
  auto hist = fire_clc_histogram(cube);
  for (auto h : hist) CHECK(h == 0);
}

TEST_CASE("single fire lands in its CLC bin") {
  auto cube = manual_cube();
  cube.clc[5 * 30 + 7] = 7;
  cube.burn[2 * 900 + 5 * 30 + 7] = 1;
  auto hist = fire_clc_histogram(cube);
  CHECK(hist[7] == 1);
  for (std::size_t c = 0; c < hist.size(); ++c)
    if (c != 7) CHECK(hist[c] == 0);
}

TEST_CASE("fire histogram sums to the burn-pixel count") {
  auto cube = generate_synthetic_cube(gen_config());
  auto hist = fire_clc_histogram(cube);
  std::size_t total = 0, burns = 0;
  for (auto h : hist) total += h;
  for (auto b : cube.burn) burns += b;
  CHECK(total == burns);
}

TEST_CASE("fire selection matches an independent filter-and-dedupe oracle") {
  auto cube = generate_synthetic_cube(gen_config());
  SamplingConfig cfg;
  cfg.clc_share_threshold = 0.01;
  auto fires = select_fire_samples(cube, cfg);

  // oracle: recompute admitted classes and walk the burn mask
  auto hist = fire_clc_histogram(cube);
  std::size_t total = 0;
  for (auto h : hist) total += h;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> expected;
  const std::size_t P = cube.plane(), W = cube.header.width, H = cube.header.height;
  for (std::size_t t = 0; t < cube.header.days; ++t)
    for (std::size_t y = 12; y < H - 12; ++y)
      for (std::size_t x = 12; x < W - 12; ++x)
        if (cube.burn[t * P + y * W + x] &&
            (double)hist[cube.clc_at(y, x)] / (double)total >= 0.01)
          expected.insert({cube.year_of(t), x, y});
  CHECK(fires.size() == expected.size());
  for (const auto& s : fires) {
    CHECK(expected.count({s.year, s.x, s.y}) == 1);
    CHECK(s.label == kLabelFire);
  }
}

TEST_CASE("a class below the share threshold contributes no fire samples") {
  auto cube = manual_cube();
  // 99 fires in class 3, one in class 7
  std::size_t placed = 0;
  for (std::size_t y = 12; y < 18 && placed < 99; ++y)
    for (std::size_t x = 12; x < 18 && placed < 99; ++x, ++placed)
      cube.burn[3 * 900 + y * 30 + x] = 1;
  for (std::size_t t = 4; placed < 99; ++t)
    for (std::size_t y = 12; y < 18 && placed < 99; ++y)
      for (std::size_t x = 12; x < 18 && placed < 99; ++x, ++placed)
        cube.burn[t * 900 + y * 30 + x] = 1;
  cube.clc[14 * 30 + 14] = 7;
  cube.burn[5 * 900 + 14 * 30 + 14] = 1;

  SamplingConfig cfg;
  cfg.clc_share_threshold = 0.05;  // class 7 hosts ~1% of fires
  auto fires = select_fire_samples(cube, cfg);
  for (const auto& s : fires) CHECK(cube.clc_at(s.y, s.x) != 7);
}

TEST_CASE("fire selection with nothing admitted is a hard error") {
  auto cube = manual_cube();
  CHECK_THROWS_AS(select_fire_samples(cube, SamplingConfig{}), std::runtime_error);
}

TEST_CASE("negative sampling satisfies all six rules") {
  auto cube = generate_synthetic_cube(gen_config());
  SamplingConfig cfg;
  auto fires = select_fire_samples(cube, cfg);
  auto nofires = select_nofire_samples(cube, fires, cfg);
  auto violations = oracle::audit_sampling_rules(cube, fires, nofires, cfg.negative_ratio);
  for (const auto& v : violations) MESSAGE(v);
  CHECK(violations.empty());
}

TEST_CASE("negative count is exactly ratio times the year's fire count") {
  auto cube = generate_synthetic_cube(gen_config());
  SamplingConfig cfg;
  cfg.negative_ratio = 2;
  auto fires = select_fire_samples(cube, cfg);
  auto nofires = select_nofire_samples(cube, fires, cfg);
  for (std::size_t year = 0; year < cube.years(); ++year) {
    std::size_t nf = 0, nn = 0;
    for (const auto& s : fires)
      if (s.year == year) ++nf;
    for (const auto& s : nofires)
      if (s.year == year) ++nn;
    CHECK(nn == 2 * nf);
  }
}

TEST_CASE("fires on every in-season date exhaust the rule-3 pool") {
  auto cube = manual_cube(30, 10);
  // fire every day from day 2 to day 7, all interior
  for (std::size_t t = 2; t <= 7; ++t) cube.burn[t * 900 + (12 + t) * 30 + 13] = 1;
  SamplingConfig cfg;
  cfg.clc_share_threshold = 0.0;
  auto fires = select_fire_samples(cube, cfg);
  CHECK_THROWS_WITH_AS(select_nofire_samples(cube, fires, cfg),
                       doctest::Contains("year 0"), std::runtime_error);
}

TEST_CASE("sampling is deterministic and seeds vary only the negatives") {
  auto cube = generate_synthetic_cube(gen_config());
  SamplingConfig cfg;
  auto f1 = select_fire_samples(cube, cfg);
  auto f2 = select_fire_samples(cube, cfg);
  CHECK(f1 == f2);
  auto n1 = select_nofire_samples(cube, f1, cfg);
  auto n1b = select_nofire_samples(cube, f1, cfg);
  CHECK(n1 == n1b);
  cfg.seed = 8;
  auto n2 = select_nofire_samples(cube, f1, cfg);
  CHECK(n1 != n2);
}

TEST_CASE("every sample center is at least 12 px from each edge") {
  auto cube = generate_synthetic_cube(gen_config());
  SamplingConfig cfg;
  auto fires = select_fire_samples(cube, cfg);
  auto nofires = select_nofire_samples(cube, fires, cfg);
  auto check_margin = [&](const SampleIndex& s) {
    CHECK(s.x >= 12);
    CHECK(s.y >= 12);
    CHECK(s.x < cube.header.width - 12);
    CHECK(s.y < cube.header.height - 12);
  };
  for (const auto& s : fires) check_margin(s);
  for (const auto& s : nofires) check_margin(s);
}

TEST_CASE("chronological split partitions by year") {
  std::vector<SampleIndex> samples = {{5, 1, 1, 0, 0}, {65, 2, 2, 0, 1}, {125, 3, 3, 1, 2}};
  auto split = chronological_split(samples, {0}, {1}, {2});
  CHECK(split.train.size() == 1);
  CHECK(split.val.size() == 1);
  CHECK(split.test.size() == 1);
  CHECK(split.train[0].year == 0);
  CHECK(split.test[0].year == 2);
}

TEST_CASE("split rejects empty year sets, overlap, and uncovered years") {
  std::vector<SampleIndex> samples = {{5, 1, 1, 0, 0}};
  CHECK_THROWS_AS(chronological_split(samples, {0}, {}, {2}), std::invalid_argument);
  CHECK_THROWS_AS(chronological_split(samples, {0}, {0}, {2}), std::invalid_argument);
  CHECK_THROWS_AS(chronological_split(samples, {1}, {2}, {3}), std::invalid_argument);
}

TEST_CASE("no sample appears in two splits") {
  auto cube = generate_synthetic_cube(gen_config());
  SamplingConfig cfg;
  auto fires = select_fire_samples(cube, cfg);
  auto nofires = select_nofire_samples(cube, fires, cfg);
  std::vector<SampleIndex> all = fires;
  all.insert(all.end(), nofires.begin(), nofires.end());
  auto split = chronological_split(all, {0}, {1}, {2});
  CHECK(split.train.size() + split.val.size() + split.test.size() == all.size());
  auto key = [](const SampleIndex& s) { return std::tuple(s.year, s.x, s.y, s.label, s.date); };
  std::set<std::tuple<std::size_t, std::size_t, std::size_t, int, std::size_t>> seen;
  for (const auto& s : split.train) CHECK(seen.insert(key(s)).second);
  for (const auto& s : split.val) CHECK(seen.insert(key(s)).second);
  for (const auto& s : split.test) CHECK(seen.insert(key(s)).second);
}

TEST_CASE("assembled tensors carry normalized center values and raw CLC") {
  auto cube = generate_synthetic_cube(gen_config());
  auto norm = Normalizer::fit(cube, 0, 59);
  SamplingConfig cfg;
  auto fires = select_fire_samples(cube, cfg);
  auto ds = assemble_dataset(cube, fires, norm, 1);
  REQUIRE(!ds.patches.empty());
  const auto& s = ds.index[0];
  const auto& p = ds.patches[0];
  REQUIRE(p.shape() == std::vector<std::size_t>({15, 25, 25}));
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const float want = (float)((cube.chan(c, s.date, s.y, s.x) - norm.mean[c]) / norm.stddev[c]);
    CHECK(p.at(c, 12, 12) == doctest::Approx(want));
  }
  CHECK(p.at(kNumChannels, 12, 12) == (float)cube.clc_at(s.y, s.x));
}

TEST_CASE("temporal assembly emits 10-step stacks and drops early samples") {
  auto cube = generate_synthetic_cube(gen_config());
  auto norm = Normalizer::fit(cube, 0, 59);
  std::vector<SampleIndex> samples = {{4, 15, 15, 1, 0}, {30, 15, 15, 1, 0}};
  auto ds = assemble_dataset(cube, samples, norm, 10);
  CHECK(ds.dropped_early == 1);
  REQUIRE(ds.patches.size() == 1);
  CHECK(ds.patches[0].shape() == std::vector<std::size_t>({10, 15, 25, 25}));
}

TEST_CASE("dataset label proportion matches the 2:1 ratio") {
  auto cube = generate_synthetic_cube(gen_config());
  auto norm = Normalizer::fit(cube, 0, 59);
  SamplingConfig cfg;
  auto fires = select_fire_samples(cube, cfg);
  auto nofires = select_nofire_samples(cube, fires, cfg);
  std::vector<SampleIndex> all = fires;
  all.insert(all.end(), nofires.begin(), nofires.end());
  auto ds = assemble_dataset(cube, all, norm, 1);
  std::size_t fire_n = 0;
  for (int l : ds.labels)
    if (l == kLabelFire) ++fire_n;
  CHECK(fire_n * 3 == ds.labels.size());
}

TEST_CASE("manifest csv round-trip with exact header") {
  std::vector<SampleIndex> samples = {{5, 1, 2, 0, 0}, {65, 3, 4, 1, 1}};
  auto path = fs::temp_directory_path() / "fdw_manifest.csv";
  save_manifest(samples, path);
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "year,date_index,x,y,label");
  }
  auto loaded = load_manifest(path);
  CHECK(loaded == samples);
  fs::remove(path);
}
