#include "fdw/sampling.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fdw/common/rng.hpp"

namespace fdw::sampling {

void SamplingConfig::validate() const {
  if (negative_ratio < 1) throw std::invalid_argument("sampling: negative ratio must be >= 1");
  if (clc_share_threshold < 0.0 || clc_share_threshold >= 1.0)
    throw std::invalid_argument("sampling: CLC share threshold must be in [0,1)");
  if (patch_size % 2 == 0) throw std::invalid_argument("sampling: patch size must be odd");
}

std::vector<std::size_t> fire_clc_histogram(const cube::DataCube& cube) {
  std::vector<std::size_t> hist(cube.header.clc_classes, 0);
  const std::size_t P = cube.plane();
  for (std::size_t t = 0; t < cube.header.days; ++t)
    for (std::size_t i = 0; i < P; ++i)
      if (cube.burn[t * P + i]) ++hist[cube.clc[i]];
  return hist;
}

std::vector<bool> admitted_classes(const cube::DataCube& cube, const SamplingConfig& cfg) {
  const auto hist = fire_clc_histogram(cube);
  std::size_t total = 0;
  for (auto h : hist) total += h;
  std::vector<bool> admitted(hist.size(), false);
  if (total == 0) return admitted;
  for (std::size_t c = 0; c < hist.size(); ++c)
    admitted[c] = (double)hist[c] / (double)total >= cfg.clc_share_threshold;
  return admitted;
}

std::vector<SampleIndex> select_fire_samples(const cube::DataCube& cube,
                                             const SamplingConfig& cfg) {
  cfg.validate();
  const auto admitted = admitted_classes(cube, cfg);
  const std::size_t P = cube.plane();
  const std::size_t W = cube.header.width, H = cube.header.height;
  const std::size_t m = cfg.margin();
  if (W < 2 * m + 1 || H < 2 * m + 1)
    throw std::invalid_argument("sampling: grid smaller than the patch interior");

  std::vector<SampleIndex> out;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;  // (year,x,y)
  for (std::size_t t = 0; t < cube.header.days; ++t) {
    const std::size_t year = cube.year_of(t);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        if (!cube.burn[t * P + y * W + x]) continue;
        if (!admitted[cube.clc_at(y, x)]) continue;
        if (x < m || x >= W - m || y < m || y >= H - m) continue;
        if (!seen.insert({year, x, y}).second) continue;  // one per location per year
        out.push_back({t, x, y, kLabelFire, year});
      }
  }
  if (out.empty())
    throw std::runtime_error("sampling: no fire samples survive the CLC filter; training impossible");
  return out;
}

std::vector<SampleIndex> select_nofire_samples(const cube::DataCube& cube,
                                               const std::vector<SampleIndex>& fires,
                                               const SamplingConfig& cfg) {
  cfg.validate();
  const std::size_t P = cube.plane();
  const std::size_t W = cube.header.width, H = cube.header.height;
  const std::size_t m = cfg.margin();
  const std::size_t dpy = cube.header.days_per_year;
  const std::size_t n_years = cube.years();

  // per-day regional fire counts (all fires, not only admitted samples)
  std::vector<std::size_t> day_fires(cube.header.days, 0);
  for (std::size_t t = 0; t < cube.header.days; ++t)
    for (std::size_t i = 0; i < P; ++i) day_fires[t] += cube.burn[t * P + i];

  std::vector<SampleIndex> out;
  for (std::size_t year = 0; year < n_years; ++year) {
    std::size_t fire_count = 0;
    std::set<std::pair<std::size_t, std::size_t>> fire_locs;
    for (const auto& s : fires)
      if (s.year == year) {
        ++fire_count;
        fire_locs.insert({s.x, s.y});
      }
    if (fire_count == 0) continue;
    const std::size_t need = cfg.negative_ratio * fire_count;

    // rule 2: the year's fire season from the burn record
    const std::size_t t0 = year * dpy, t1 = t0 + dpy;
    std::size_t first = t1, last = t0;
    for (std::size_t t = t0; t < t1; ++t)
      if (day_fires[t] > 0) {
        first = std::min(first, t);
        last = std::max(last, t);
      }
    // rule 3: zero-fire days inside the season
    std::vector<std::size_t> dates;
    for (std::size_t t = first; t <= last && first < t1; ++t)
      if (day_fires[t] == 0) dates.push_back(t);

    // rules 4-5: susceptible interior pixels away from this year's positives
    std::vector<std::pair<std::size_t, std::size_t>> pixels;
    for (std::size_t y = m; y < H - m; ++y)
      for (std::size_t x = m; x < W - m; ++x) {
        if (!cube.is_susceptible(y, x)) continue;
        if (fire_locs.count({x, y})) continue;
        pixels.push_back({x, y});
      }

    if (dates.empty() || pixels.size() < need)
      throw std::runtime_error(
          "sampling: year " + std::to_string(year) + " cannot supply " + std::to_string(need) +
          " no-fire samples (candidate days: " + std::to_string(dates.size()) +
          ", candidate locations: " + std::to_string(pixels.size()) + ")");

    // rule 6 by construction: draw `need` distinct locations, each with a
    // uniform candidate date
    Rng rng(Rng::derive(cfg.seed, year));
    rng.shuffle(pixels);
    for (std::size_t k = 0; k < need; ++k) {
      const auto [x, y] = pixels[k];
      const std::size_t t = dates[rng.index(dates.size())];
      out.push_back({t, x, y, kLabelNoFire, year});
    }
  }
  return out;
}

DatasetSplit chronological_split(const std::vector<SampleIndex>& samples,
                                 std::vector<std::size_t> train_years,
                                 std::vector<std::size_t> val_years,
                                 std::vector<std::size_t> test_years) {
  if (train_years.empty() || val_years.empty() || test_years.empty())
    throw std::invalid_argument("split: every year set must be non-empty");
  std::set<std::size_t> all;
  for (auto y : train_years) all.insert(y);
  for (auto y : val_years) all.insert(y);
  for (auto y : test_years) all.insert(y);
  if (all.size() != train_years.size() + val_years.size() + test_years.size())
    throw std::invalid_argument("split: year sets overlap");

  DatasetSplit split;
  split.train_years = std::move(train_years);
  split.val_years = std::move(val_years);
  split.test_years = std::move(test_years);
  auto contains = [](const std::vector<std::size_t>& v, std::size_t y) {
    return std::find(v.begin(), v.end(), y) != v.end();
  };
  for (const auto& s : samples) {
    if (contains(split.train_years, s.year)) split.train.push_back(s);
    else if (contains(split.val_years, s.year)) split.val.push_back(s);
    else if (contains(split.test_years, s.year)) split.test.push_back(s);
    else
      throw std::invalid_argument("split: sample year " + std::to_string(s.year) +
                                  " not covered by any split set");
  }
  return split;
}

Dataset assemble_dataset(const cube::DataCube& cube, const std::vector<SampleIndex>& samples,
                         const cube::Normalizer& norm, std::size_t temporal_len) {
  Dataset ds;
  for (const auto& s : samples) {
    if (s.date + 1 < temporal_len) {
      ++ds.dropped_early;
      continue;
    }
    auto patch = cube::extract_patch(cube, s.date, s.x, s.y, cube::kPatchSize, temporal_len);
    norm.apply(patch);
    ds.patches.push_back(std::move(patch));
    ds.labels.push_back(s.label);
    ds.index.push_back(s);
  }
  return ds;
}

void save_manifest(const std::vector<SampleIndex>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << "year,date_index,x,y,label\n";
  for (const auto& s : samples)
    out << s.year << "," << s.date << "," << s.x << "," << s.y << "," << s.label << "\n";
}

std::vector<SampleIndex> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "year,date_index,x,y,label")
    throw std::runtime_error("manifest: unexpected header in " + path.string());
  std::vector<SampleIndex> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    SampleIndex s;
    char c;
    if (!(ss >> s.year >> c >> s.date >> c >> s.x >> c >> s.y >> c >> s.label))
      throw std::runtime_error("manifest: malformed row: " + line);
    out.push_back(s);
  }
  return out;
}

}  // namespace fdw::sampling
