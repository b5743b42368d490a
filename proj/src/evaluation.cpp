#include "fdw/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdw::evaluation {

std::optional<DailyRecallRecord> daily_recall(const inference::FdiMap& map,
                                              const std::vector<std::uint8_t>& burn_day,
                                              double threshold) {
  if (burn_day.size() != map.values.size())
    throw std::invalid_argument("daily recall: burn mask size mismatch");
  DailyRecallRecord rec;
  rec.date = map.date;
  for (std::size_t i = 0; i < burn_day.size(); ++i) {
    if (!burn_day[i] || !map.mask[i]) continue;
    ++rec.fires;
    if ((double)map.values[i] > threshold) ++rec.detected;
  }
  if (rec.fires == 0) return std::nullopt;
  rec.recall = (double)rec.detected / (double)rec.fires;
  return rec;
}

QuantileTable recall_quantiles(const std::vector<DailyRecallRecord>& records,
                               std::vector<int> levels) {
  if (records.empty()) throw std::invalid_argument("quantiles: no recall records");
  for (int q : levels)
    if (q < 1 || q > 100) throw std::invalid_argument("quantiles: level outside [1,100]");
  std::vector<double> recalls;
  for (const auto& r : records) recalls.push_back(r.recall);
  std::sort(recalls.begin(), recalls.end());

  QuantileTable table;
  table.levels = std::move(levels);
  table.day_count = records.size();
  for (int q : table.levels) {
    const auto rank = (std::size_t)std::ceil((double)q / 100.0 * (double)recalls.size());
    table.values.push_back(recalls[std::max<std::size_t>(rank, 1) - 1]);
  }
  return table;
}

FdiDistribution fdi_distribution(const inference::FdiMap& map, std::size_t n_bins) {
  if (n_bins == 0) throw std::invalid_argument("distribution: need at least one bin");
  FdiDistribution dist;
  dist.date = map.date;
  dist.bins.assign(n_bins, 0);

  std::vector<double> values;
  for (std::size_t i = 0; i < map.values.size(); ++i)
    if (map.mask[i]) values.push_back(map.values[i]);
  if (values.size() < 3)
    throw std::invalid_argument("distribution: fewer than 3 valid pixels");
  dist.valid_count = values.size();

  for (double v : values) {
    auto bin = (std::size_t)(v * (double)n_bins);
    if (bin >= n_bins) bin = n_bins - 1;  // v == 1.0 joins the last bin
    ++dist.bins[bin];
  }

  const double n = (double)values.size();
  double mean = 0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0, m3 = 0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  dist.skewness = m2 <= 0 ? 0.0 : m3 / std::pow(m2, 1.5);
  return dist;
}

ConsistencyRow ensemble_consistency(const std::vector<inference::FdiMap>& members,
                                    const std::vector<std::uint8_t>& burn_day,
                                    double threshold) {
  if (members.size() < 2)
    throw std::invalid_argument("consistency: at least two ensemble members required");
  ConsistencyRow row;
  row.date = members.front().date;
  // the fire count is shared (identical masks), so the mean of the member
  // recalls reduces to one exact division
  std::size_t total_detected = 0, fires = 0;
  for (const auto& m : members) {
    auto rec = daily_recall(m, burn_day, threshold);
    if (!rec) throw std::invalid_argument("consistency: no valid fire pixels on this day");
    total_detected += rec->detected;
    fires = rec->fires;
  }
  row.lhs = (double)total_detected / (double)(members.size() * fires);
  row.rhs = daily_recall(inference::ensemble_average(members), burn_day, threshold)->recall;
  row.gap = std::abs(row.lhs - row.rhs);
  return row;
}

BaselineComparison compare_baseline(const inference::FdiMap& model_map,
                                    const inference::FdiMap& baseline,
                                    const std::vector<std::uint8_t>& burn_day,
                                    double model_threshold, double baseline_threshold) {
  if (baseline.height != model_map.height || baseline.width != model_map.width ||
      baseline.mask != model_map.mask)
    throw std::invalid_argument("baseline comparison: grid or mask mismatch");
  BaselineComparison cmp;
  auto model_rec = daily_recall(model_map, burn_day, model_threshold);
  auto base_rec = daily_recall(baseline, burn_day, baseline_threshold);
  cmp.model_recall = model_rec ? model_rec->recall : 0.0;
  cmp.baseline_recall = base_rec ? base_rec->recall : 0.0;

  std::size_t nofire = 0, model_alarm = 0, base_alarm = 0;
  for (std::size_t i = 0; i < model_map.values.size(); ++i) {
    if (!model_map.mask[i] || burn_day[i]) continue;
    ++nofire;
    if ((double)model_map.values[i] > model_threshold) ++model_alarm;
    if ((double)baseline.values[i] > baseline_threshold) ++base_alarm;
  }
  cmp.model_false_alarm = nofire ? (double)model_alarm / (double)nofire : 0.0;
  cmp.baseline_false_alarm = nofire ? (double)base_alarm / (double)nofire : 0.0;
  return cmp;
}

inference::FdiMap rescale_min_max(const inference::FdiMap& raw) {
  inference::FdiMap out = raw;
  float lo = 0, hi = 0;
  bool first = true;
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    if (!raw.mask[i]) continue;
    if (first || raw.values[i] < lo) lo = raw.values[i];
    if (first || raw.values[i] > hi) hi = raw.values[i];
    first = false;
  }
  if (first) return out;
  const float span = hi - lo;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (out.mask[i]) out.values[i] = span > 0 ? (out.values[i] - lo) / span : 0.0f;
  return out;
}

}  // namespace fdw::evaluation
