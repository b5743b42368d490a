#include <fstream>

#include <json.hpp>

#include "fdw/common/svg.hpp"
#include "fdw/evaluation.hpp"

namespace fdw::evaluation {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(10);
  return out;
}

json record_json(const DailyRecallRecord& r) {
  return {{"date", r.date}, {"fires", r.fires}, {"detected", r.detected}, {"recall", r.recall}};
}

DailyRecallRecord record_from(const json& j) {
  return {j.at("date").get<std::size_t>(), j.at("fires").get<std::size_t>(),
          j.at("detected").get<std::size_t>(), j.at("recall").get<double>()};
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    auto out = open_out(dir / "daily_recall.csv");
    out << "date,fires,detected,recall\n";
    for (const auto& r : report.daily)
      out << r.date << "," << r.fires << "," << r.detected << "," << r.recall << "\n";
  }
  {
    auto out = open_out(dir / "quantiles.csv");
    out << "level,value\n";
    for (std::size_t i = 0; i < report.quantiles.levels.size(); ++i)
      out << report.quantiles.levels[i] << "," << report.quantiles.values[i] << "\n";
  }
  {
    auto out = open_out(dir / "skewness.csv");
    out << "date,skewness,n_valid\n";
    for (const auto& d : report.distributions)
      out << d.date << "," << d.skewness << "," << d.valid_count << "\n";
  }
  {
    auto out = open_out(dir / "eq1.csv");
    out << "date,lhs,rhs,gap\n";
    for (const auto& c : report.consistency)
      out << c.date << "," << c.lhs << "," << c.rhs << "," << c.gap << "\n";
  }
  {
    auto out = open_out(dir / "baseline.csv");
    out << "date,model_recall,baseline_recall,model_false_alarm,baseline_false_alarm\n";
    for (const auto& [date, c] : report.baseline)
      out << date << "," << c.model_recall << "," << c.baseline_recall << ","
          << c.model_false_alarm << "," << c.baseline_false_alarm << "\n";
  }

  for (const auto& d : report.distributions) {
    std::vector<double> values;
    std::vector<std::string> labels;
    for (std::size_t b = 0; b < d.bins.size(); ++b) {
      values.push_back((double)d.bins[b]);
      labels.push_back(b % 5 == 0 ? std::to_string((double)b / (double)d.bins.size()).substr(0, 4)
                                  : "");
    }
    open_out(dir / ("hist_" + std::to_string(d.date) + ".svg"))
        << svg::bar_chart("FDI distribution, day " + std::to_string(d.date), values, labels);
  }

  if (!report.member_recalls.empty()) {
    const auto& dates = report.member_recalls.front().records;
    {
      auto out = open_out(dir / "member_recall.csv");
      out << "member";
      for (const auto& r : dates) out << ",day_" << r.date;
      out << "\n";
      for (const auto& m : report.member_recalls) {
        out << m.member_id;
        for (const auto& r : m.records) out << "," << r.recall;
        out << "\n";
      }
    }
    std::vector<std::string> rows, cols;
    std::vector<double> cells;
    for (const auto& m : report.member_recalls) {
      rows.push_back(m.member_id);
      for (const auto& r : m.records) cells.push_back(r.recall);
    }
    for (const auto& r : dates) cols.push_back(std::to_string(r.date));
    open_out(dir / "member_recall.svg")
        << svg::heatmap("daily recall per ensemble member", rows, cols, cells);
  }

  json j;
  j["daily"] = json::array();
  for (const auto& r : report.daily) j["daily"].push_back(record_json(r));
  j["quantiles"] = {{"levels", report.quantiles.levels},
                    {"values", report.quantiles.values},
                    {"day_count", report.quantiles.day_count}};
  j["distributions"] = json::array();
  for (const auto& d : report.distributions)
    j["distributions"].push_back({{"date", d.date},
                                  {"bins", d.bins},
                                  {"valid_count", d.valid_count},
                                  {"skewness", d.skewness}});
  j["consistency"] = json::array();
  for (const auto& c : report.consistency)
    j["consistency"].push_back({{"date", c.date}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"gap", c.gap}});
  j["baseline"] = json::array();
  for (const auto& [date, c] : report.baseline)
    j["baseline"].push_back({{"date", date},
                             {"model_recall", c.model_recall},
                             {"baseline_recall", c.baseline_recall},
                             {"model_false_alarm", c.model_false_alarm},
                             {"baseline_false_alarm", c.baseline_false_alarm}});
  j["member_recalls"] = json::array();
  for (const auto& m : report.member_recalls) {
    json rec = json::array();
    for (const auto& r : m.records) rec.push_back(record_json(r));
    j["member_recalls"].push_back({{"member_id", m.member_id}, {"records", rec}});
  }
  j["skipped_days"] = report.skipped_days;
  open_out(dir / "summary.json") << j.dump(2) << "\n";
}

EvalReport read_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "summary.json");
  if (!in) throw std::runtime_error("cannot read " + (dir / "summary.json").string());
  json j = json::parse(in);

  EvalReport report;
  for (const auto& r : j.at("daily")) report.daily.push_back(record_from(r));
  report.quantiles.levels = j.at("quantiles").at("levels").get<std::vector<int>>();
  report.quantiles.values = j.at("quantiles").at("values").get<std::vector<double>>();
  report.quantiles.day_count = j.at("quantiles").at("day_count").get<std::size_t>();
  for (const auto& d : j.at("distributions")) {
    FdiDistribution dist;
    dist.date = d.at("date").get<std::size_t>();
    dist.bins = d.at("bins").get<std::vector<std::size_t>>();
    dist.valid_count = d.at("valid_count").get<std::size_t>();
    dist.skewness = d.at("skewness").get<double>();
    report.distributions.push_back(std::move(dist));
  }
  for (const auto& c : j.at("consistency"))
    report.consistency.push_back({c.at("date").get<std::size_t>(), c.at("lhs").get<double>(),
                                  c.at("rhs").get<double>(), c.at("gap").get<double>()});
  for (const auto& c : j.at("baseline")) {
    BaselineComparison cmp;
    cmp.model_recall = c.at("model_recall").get<double>();
    cmp.baseline_recall = c.at("baseline_recall").get<double>();
    cmp.model_false_alarm = c.at("model_false_alarm").get<double>();
    cmp.baseline_false_alarm = c.at("baseline_false_alarm").get<double>();
    report.baseline.push_back({c.at("date").get<std::size_t>(), cmp});
  }
  for (const auto& m : j.at("member_recalls")) {
    MemberDailyRecall mem;
    mem.member_id = m.at("member_id").get<std::string>();
    for (const auto& r : m.at("records")) mem.records.push_back(record_from(r));
    report.member_recalls.push_back(std::move(mem));
  }
  report.skipped_days = j.at("skipped_days").get<std::vector<std::size_t>>();
  return report;
}

}  // namespace fdw::evaluation
