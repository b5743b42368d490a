#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fdw/inference.hpp"

namespace fdw::evaluation {

struct DailyRecallRecord {
  std::size_t date = 0;
  std::size_t fires = 0;     // burn pixels inside the validity mask
  std::size_t detected = 0;  // of those, FDI strictly above the threshold
  double recall = 0;
};

/// Fire pixels outside the validity mask count for neither side. Days with
/// no valid fire pixel produce no record.
std::optional<DailyRecallRecord> daily_recall(const inference::FdiMap& map,
                                              const std::vector<std::uint8_t>& burn_day,
                                              double threshold = 0.5);

struct QuantileTable {
  std::vector<int> levels;
  std::vector<double> values;
  std::size_t day_count = 0;
};

/// Nearest-rank percentile: 1-based index ceil(Q/100 * n) into the sorted
/// recalls.
QuantileTable recall_quantiles(const std::vector<DailyRecallRecord>& records,
                               std::vector<int> levels = {40, 50, 60, 70, 80, 90});

struct FdiDistribution {
  std::size_t date = 0;
  std::vector<std::size_t> bins;  // equal widths over [0,1], last right-inclusive
  std::size_t valid_count = 0;
  double skewness = 0;  // biased Fisher-Pearson; 0 for zero variance
};

FdiDistribution fdi_distribution(const inference::FdiMap& map, std::size_t n_bins = 20);

struct ConsistencyRow {
  std::size_t date = 0;
  double lhs = 0;  // mean over members of the member-map recall
  double rhs = 0;  // recall of the pixel-wise mean map
  double gap = 0;
};

/// Reported, never asserted: the two sides agree only empirically.
ConsistencyRow ensemble_consistency(const std::vector<inference::FdiMap>& members,
                                    const std::vector<std::uint8_t>& burn_day,
                                    double threshold = 0.5);

struct BaselineComparison {
  double model_recall = 0;
  double baseline_recall = 0;
  double model_false_alarm = 0;     // valid non-fire pixels above threshold / valid non-fire
  double baseline_false_alarm = 0;
};

BaselineComparison compare_baseline(const inference::FdiMap& model_map,
                                    const inference::FdiMap& baseline,
                                    const std::vector<std::uint8_t>& burn_day,
                                    double model_threshold = 0.5,
                                    double baseline_threshold = 0.5);

/// Min-max rescale of an ingested raster onto [0,1] over its valid pixels.
inference::FdiMap rescale_min_max(const inference::FdiMap& raw);

struct MemberDailyRecall {
  std::string member_id;
  std::vector<DailyRecallRecord> records;
};

struct EvalReport {
  std::vector<DailyRecallRecord> daily;
  QuantileTable quantiles;
  std::vector<FdiDistribution> distributions;  // no-fire evaluation days
  std::vector<ConsistencyRow> consistency;
  std::vector<std::pair<std::size_t, BaselineComparison>> baseline;
  std::vector<MemberDailyRecall> member_recalls;
  std::vector<std::size_t> skipped_days;  // fire days with no valid fire pixel
};

/// daily_recall.csv, quantiles.csv, skewness.csv, eq1.csv, baseline.csv,
/// member_recall.csv, summary.json, plus SVG bar charts and the per-member
/// recall heatmap.
void write_report(const EvalReport& report, const std::filesystem::path& dir);
EvalReport read_report(const std::filesystem::path& dir);

}  // namespace fdw::evaluation
