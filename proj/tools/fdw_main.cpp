// fdw: fire danger workbench.
//
// Pipeline: cube-gen -> sample -> train / train-ensemble ->
// infer / infer-ensemble -> eval -> report. Config file is authoritative,
// --set overrides individual keys, every output directory gets a
// manifest.json with the config hash and input checksums.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fdw/common/config.hpp"
#include "fdw/common/crc64.hpp"
#include "fdw/common/rng.hpp"
#include "fdw/cube/io.hpp"
#include "fdw/cube/synthetic.hpp"
#include "fdw/evaluation.hpp"
#include "fdw/inference.hpp"
#include "fdw/models.hpp"
#include "fdw/sampling.hpp"
#include "fdw/trainer.hpp"

namespace fs = std::filesystem;
using fdw::config::Config;
using nlohmann::json;

namespace {

constexpr const char* kConfigReference = R"(Config keys (TOML subset; defaults shown):
  [cube]      height=96 width=96 years=3 days_per_year=120 fire_window_start=20
              fire_window_end=110 target_fires_per_year=500 clc_classes=15
              noise_scale=0.5 intercept=-2.0 seed=11
  [sampling]  negative_ratio=2 clc_share_threshold=0.01 seed=7
  [split]     train_years=[0] val_years=[1] test_years=[2]
              (defaults: last year tests, second-to-last validates, rest train)
  [model]     architecture="basic_cnn" (basic_cnn|deeper_cnn1|deeper_cnn2|convlstm)
              conv_width=16 classifier_widths=[] dropout_rate=0.2
              convlstm_filters=76 convlstm_head_width=32 embedding_dim=10
              init_seed=1
  [train]     epochs=150 batch_size=256 lr=0.001 plateau_patience=10
              plateau_factor=0.1 min_lr=0.000001 shuffle_seed=17 dropout_seed=23
  [ensemble]  seeds=[101,102,103,104,105,106,107]
  [infer]     batch_size=256
  [eval]      threshold=0.5 no_fire_days=6 no_fire_seed=29 histogram_bins=20
)";

struct RunConfig {
  fdw::cube::SyntheticConfig cube;
  fdw::sampling::SamplingConfig sampling;
  std::vector<std::size_t> train_years, val_years, test_years;
  fdw::models::ModelConfig model;
  fdw::trainer::TrainConfig train;
  fdw::trainer::EnsembleSpec ensemble;
  std::size_t infer_batch = 256;
  double eval_threshold = 0.5;
  std::size_t no_fire_days = 6;
  std::uint64_t no_fire_seed = 29;
  std::size_t histogram_bins = 20;
  std::string config_crc;
};

std::vector<std::size_t> to_sizes(const std::vector<std::int64_t>& v, const char* what) {
  std::vector<std::size_t> out;
  for (auto x : v) {
    if (x < 0) throw std::invalid_argument(std::string(what) + ": negative value");
    out.push_back((std::size_t)x);
  }
  return out;
}

RunConfig parse_run(const Config& cfg) {
  RunConfig run;
  auto& c = run.cube;
  c.height = (std::size_t)cfg.get_int("cube.height", 96);
  c.width = (std::size_t)cfg.get_int("cube.width", 96);
  c.years = (std::size_t)cfg.get_int("cube.years", 3);
  c.days_per_year = (std::size_t)cfg.get_int("cube.days_per_year", 120);
  c.fire_window_start = (std::size_t)cfg.get_int("cube.fire_window_start", 20);
  c.fire_window_end = (std::size_t)cfg.get_int("cube.fire_window_end", 110);
  c.target_fires_per_year = (std::size_t)cfg.get_int("cube.target_fires_per_year", 500);
  c.clc_classes = (std::size_t)cfg.get_int("cube.clc_classes", 15);
  c.noise_scale = cfg.get_double("cube.noise_scale", c.noise_scale);
  c.intercept = cfg.get_double("cube.intercept", c.intercept);
  c.seed = cfg.get_u64("cube.seed", 11);

  run.sampling.negative_ratio = (std::size_t)cfg.get_int("sampling.negative_ratio", 2);
  run.sampling.clc_share_threshold = cfg.get_double("sampling.clc_share_threshold", 0.01);
  run.sampling.seed = cfg.get_u64("sampling.seed", 7);

  std::vector<std::int64_t> def_train, def_val, def_test;
  if (c.years >= 3) {
    for (std::size_t y = 0; y + 2 < c.years; ++y) def_train.push_back((std::int64_t)y);
    def_val = {(std::int64_t)c.years - 2};
    def_test = {(std::int64_t)c.years - 1};
  }
  run.train_years = to_sizes(cfg.get_int_array("split.train_years", def_train), "split");
  run.val_years = to_sizes(cfg.get_int_array("split.val_years", def_val), "split");
  run.test_years = to_sizes(cfg.get_int_array("split.test_years", def_test), "split");

  auto& m = run.model;
  m.architecture =
      fdw::models::architecture_from_string(cfg.get_string("model.architecture", "basic_cnn"));
  m.conv_width = (std::size_t)cfg.get_int("model.conv_width", 16);
  m.classifier_widths = to_sizes(cfg.get_int_array("model.classifier_widths", {}), "model");
  m.dropout_rate = cfg.get_double("model.dropout_rate", 0.2);
  m.convlstm_filters = (std::size_t)cfg.get_int("model.convlstm_filters", 76);
  m.convlstm_head_width = (std::size_t)cfg.get_int("model.convlstm_head_width", 32);
  m.embedding_dim = (std::size_t)cfg.get_int("model.embedding_dim", 10);
  m.clc_classes = c.clc_classes;
  m.init_seed = cfg.get_u64("model.init_seed", 1);

  auto& t = run.train;
  t.epochs = (std::size_t)cfg.get_int("train.epochs", 150);
  t.batch_size = (std::size_t)cfg.get_int("train.batch_size", 256);
  t.lr = cfg.get_double("train.lr", 1e-3);
  t.plateau_patience = (int)cfg.get_int("train.plateau_patience", 10);
  t.plateau_factor = cfg.get_double("train.plateau_factor", 0.1);
  t.min_lr = cfg.get_double("train.min_lr", 1e-6);
  t.shuffle_seed = cfg.get_u64("train.shuffle_seed", 17);
  t.dropout_seed = cfg.get_u64("train.dropout_seed", 23);

  run.ensemble.train = t;
  run.ensemble.init_seeds.clear();
  for (auto s :
       cfg.get_int_array("ensemble.seeds", {101, 102, 103, 104, 105, 106, 107}))
    run.ensemble.init_seeds.push_back((std::uint64_t)s);

  run.infer_batch = (std::size_t)cfg.get_int("infer.batch_size", 256);
  run.eval_threshold = cfg.get_double("eval.threshold", 0.5);
  run.no_fire_days = (std::size_t)cfg.get_int("eval.no_fire_days", 6);
  run.no_fire_seed = cfg.get_u64("eval.no_fire_seed", 29);
  run.histogram_bins = (std::size_t)cfg.get_int("eval.histogram_bins", 20);

  cfg.reject_unknown();
  const std::string canon = cfg.canonical();
  run.config_crc = fdw::Crc64::to_hex(fdw::Crc64::of(canon.data(), canon.size()));
  return run;
}

void prepare_out(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force)
      throw std::invalid_argument("output directory " + dir.string() +
                                  " is not empty (use --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::string file_crc(const fs::path& p) {
  return fdw::Crc64::to_hex(fdw::Crc64::of_file(p.string()));
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& run,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    int threads) {
  json j;
  j["command"] = command;
  j["config_crc64"] = run.config_crc;
  j["threads"] = threads;
  j["seeds"] = {{"cube", run.cube.seed},
                {"sampling", run.sampling.seed},
                {"model_init", run.model.init_seed},
                {"shuffle", run.train.shuffle_seed},
                {"dropout", run.train.dropout_seed},
                {"no_fire_days", run.no_fire_seed},
                {"ensemble", run.ensemble.init_seeds}};
  j["inputs"] = json::object();
  for (const auto& [name, crc] : inputs) j["inputs"][name] = crc;
  std::ofstream(dir / "manifest.json", std::ios::trunc) << j.dump(2) << "\n";
}

fdw::cube::DataCube load_cube_checked(const fs::path& dir) {
  if (!fs::exists(dir / "header.json"))
    throw std::runtime_error("cube not found at " + dir.string());
  return fdw::cube::load_cube(dir);
}

struct LoadedSamples {
  fdw::sampling::Dataset train, val, test;
  fdw::cube::Normalizer norm;
};

LoadedSamples load_samples(const fs::path& dir, const fdw::cube::DataCube& cube,
                           std::size_t temporal_len) {
  LoadedSamples out;
  out.norm = fdw::cube::Normalizer::load(dir / "normalizer.json");
  out.train = fdw::sampling::assemble_dataset(
      cube, fdw::sampling::load_manifest(dir / "train.csv"), out.norm, temporal_len);
  out.val = fdw::sampling::assemble_dataset(
      cube, fdw::sampling::load_manifest(dir / "val.csv"), out.norm, temporal_len);
  out.test = fdw::sampling::assemble_dataset(
      cube, fdw::sampling::load_manifest(dir / "test.csv"), out.norm, temporal_len);
  return out;
}

std::vector<std::size_t> map_dates_in(const fs::path& dir) {
  std::vector<std::size_t> dates;
  if (!fs::exists(dir)) throw std::runtime_error("map directory not found: " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("fdi_", 0) == 0 && entry.path().extension() == ".json")
      dates.push_back((std::size_t)std::stoull(name.substr(4)));
  }
  std::sort(dates.begin(), dates.end());
  return dates;
}

int run_cube_gen(const RunConfig& run, const fs::path& out, bool force, int threads) {
  prepare_out(out, force);
  auto cube = fdw::cube::generate_synthetic_cube(run.cube);
  fdw::cube::save_cube(cube, out);
  std::size_t fires = 0;
  for (auto b : cube.burn) fires += b;
  write_manifest(out, "cube-gen", run, {}, threads);
  std::printf("cube: %zux%zu, %zu days, %zu fire pixels -> %s\n", cube.header.height,
              cube.header.width, cube.header.days, fires, out.c_str());
  return 0;
}

int run_sample(const RunConfig& run, const fs::path& cube_dir, const fs::path& out, bool force,
               int threads) {
  auto cube = load_cube_checked(cube_dir);
  prepare_out(out, force);
  auto fires = fdw::sampling::select_fire_samples(cube, run.sampling);
  auto nofires = fdw::sampling::select_nofire_samples(cube, fires, run.sampling);
  std::vector<fdw::sampling::SampleIndex> all = fires;
  all.insert(all.end(), nofires.begin(), nofires.end());
  auto split =
      fdw::sampling::chronological_split(all, run.train_years, run.val_years, run.test_years);

  std::size_t lo = *std::min_element(run.train_years.begin(), run.train_years.end());
  std::size_t hi = *std::max_element(run.train_years.begin(), run.train_years.end());
  auto norm = fdw::cube::Normalizer::fit(cube, lo * cube.header.days_per_year,
                                         (hi + 1) * cube.header.days_per_year - 1);
  norm.save(out / "normalizer.json");
  fdw::sampling::save_manifest(split.train, out / "train.csv");
  fdw::sampling::save_manifest(split.val, out / "val.csv");
  fdw::sampling::save_manifest(split.test, out / "test.csv");
  write_manifest(out, "sample", run, {{"cube", file_crc(cube_dir / "header.json")}}, threads);
  std::printf("samples: %zu fire / %zu no-fire (train %zu, val %zu, test %zu)\n", fires.size(),
              nofires.size(), split.train.size(), split.val.size(), split.test.size());
  return 0;
}

void report_build(const fdw::models::ModelBundle& model) {
  std::string widths;
  for (auto w : model.config.resolved_classifier_widths())
    widths += (widths.empty() ? "" : ",") + std::to_string(w);
  std::printf("model %s: %zu parameters (budget %zu), classifier widths [%s]\n",
              fdw::models::to_string(model.config.architecture).c_str(),
              fdw::models::count_params(model.config),
              fdw::models::parameter_budget(model.config.architecture), widths.c_str());
  for (const auto& w : model.build_warnings) std::printf("warning: %s\n", w.c_str());
}

int run_train(const RunConfig& run, const fs::path& cube_dir, const fs::path& samples_dir,
              const fs::path& out, bool force, int threads) {
  auto cube = load_cube_checked(cube_dir);
  auto data = load_samples(samples_dir, cube, run.model.temporal_len());
  prepare_out(out, force);
  auto model = fdw::models::build_model(run.model);
  report_build(model);
  auto result = fdw::trainer::train(std::move(model), data.train, data.val, run.train);
  fdw::models::save_weights(result.best, out);
  fdw::trainer::save_history_csv(result.history, out / "history.csv");

  fdw::Rng unused(0);
  double test_recall = 0, test_f1 = 0;
  if (!data.test.patches.empty()) {
    // batched eval-mode pass over the held-out year
    fdw::nn::Tensor<float> logp({data.test.patches.size(), 2});
    for (std::size_t s = 0; s < data.test.patches.size(); s += run.train.batch_size) {
      const std::size_t count = std::min(run.train.batch_size, data.test.patches.size() - s);
      auto shape = data.test.patches[0].shape();
      shape.insert(shape.begin(), count);
      fdw::nn::Tensor<float> batch(shape);
      for (std::size_t i = 0; i < count; ++i)
        std::copy(data.test.patches[s + i].data(),
                  data.test.patches[s + i].data() + data.test.patches[s + i].size(),
                  batch.data() + i * data.test.patches[s + i].size());
      auto out_lp = result.best.forward(batch, fdw::nn::Mode::kEval, unused);
      for (std::size_t i = 0; i < count; ++i) {
        logp.at(s + i, 0) = out_lp.at(i, 0);
        logp.at(s + i, 1) = out_lp.at(i, 1);
      }
    }
    auto m = fdw::trainer::compute_metrics(logp, data.test.labels);
    test_recall = m.recall;
    test_f1 = m.f1;
    std::printf("test: recall %.4f precision %.4f f1 %.4f\n", m.recall, m.precision, m.f1);
  }
  json extra{{"best_epoch", result.history.best_epoch},
             {"best_val_loss", result.history.best_val_loss},
             {"test_recall", test_recall},
             {"test_f1", test_f1}};
  std::ofstream(out / "metrics.json", std::ios::trunc) << extra.dump(2) << "\n";
  write_manifest(out, "train", run,
                 {{"cube", file_crc(cube_dir / "header.json")},
                  {"train.csv", file_crc(samples_dir / "train.csv")},
                  {"val.csv", file_crc(samples_dir / "val.csv")}},
                 threads);
  return 0;
}

int run_train_ensemble(const RunConfig& run, const fs::path& cube_dir,
                       const fs::path& samples_dir, const fs::path& out, bool force,
                       int threads) {
  auto cube = load_cube_checked(cube_dir);
  auto data = load_samples(samples_dir, cube, run.model.temporal_len());
  prepare_out(out, force);
  auto members = fdw::trainer::train_ensemble(run.model, run.ensemble, data.train, data.val);
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto dir = out / ("member" + std::to_string(i));
    fs::create_directories(dir);
    fdw::models::save_weights(members[i].best, dir);
    fdw::trainer::save_history_csv(members[i].history, dir / "history.csv");
  }
  write_manifest(out, "train-ensemble", run,
                 {{"cube", file_crc(cube_dir / "header.json")},
                  {"train.csv", file_crc(samples_dir / "train.csv")},
                  {"val.csv", file_crc(samples_dir / "val.csv")}},
                 threads);
  std::printf("trained %zu ensemble members -> %s\n", members.size(), out.c_str());
  return 0;
}

std::vector<std::size_t> parse_dates(const RunConfig& run, std::vector<std::size_t> dates,
                                     std::int64_t from, std::int64_t to) {
  if (from >= 0 || to >= 0) {
    if (from < 0 || to < from) throw std::invalid_argument("--from/--to: invalid date range");
    for (std::int64_t d = from; d <= to; ++d) dates.push_back((std::size_t)d);
  }
  if (dates.empty()) throw std::invalid_argument("no dates given (use --date or --from/--to)");
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  (void)run;
  return dates;
}

int run_infer_generic(const RunConfig& run, const fs::path& cube_dir, const fs::path& model_dir,
                      const fs::path& norm_path, const fs::path& out,
                      std::vector<std::size_t> dates, bool force, int threads, bool ensemble) {
  auto cube = load_cube_checked(cube_dir);
  auto norm = fdw::cube::Normalizer::load(norm_path);
  prepare_out(out, force);
  std::vector<std::pair<std::string, std::string>> inputs = {
      {"cube", file_crc(cube_dir / "header.json")}};

  if (!ensemble) {
    auto model = fdw::models::load_weights(model_dir);
    for (auto date : dates) {
      auto map = fdw::inference::full_map_inference(model, cube, date, norm, run.infer_batch);
      fdw::inference::save_map(map, out);
    }
    inputs.push_back({"model", file_crc(model_dir / "model.json")});
    write_manifest(out, "infer", run, inputs, threads);
    return 0;
  }

  std::vector<fs::path> member_dirs;
  for (std::size_t i = 0;; ++i) {
    const auto d = model_dir / ("member" + std::to_string(i));
    if (!fs::exists(d)) break;
    member_dirs.push_back(d);
  }
  if (member_dirs.empty())
    throw std::runtime_error("no member<i> subdirectories under " + model_dir.string());
  std::vector<fdw::models::ModelBundle> members;
  for (std::size_t i = 0; i < member_dirs.size(); ++i) {
    members.push_back(fdw::models::load_weights(member_dirs[i]));
    inputs.push_back({"member" + std::to_string(i), file_crc(member_dirs[i] / "model.json")});
  }
  for (auto date : dates) {
    std::vector<fdw::inference::FdiMap> maps;
    for (std::size_t i = 0; i < members.size(); ++i) {
      maps.push_back(
          fdw::inference::full_map_inference(members[i], cube, date, norm, run.infer_batch));
      const auto dir = out / ("member" + std::to_string(i));
      fs::create_directories(dir);
      fdw::inference::save_map(maps.back(), dir);
    }
    fs::create_directories(out / "mean");
    fdw::inference::save_map(fdw::inference::ensemble_average(maps), out / "mean");
  }
  write_manifest(out, "infer-ensemble", run, inputs, threads);
  return 0;
}

int run_eval(const RunConfig& run, const fs::path& cube_dir, const fs::path& maps_dir,
             const fs::path& members_dir, const fs::path& baseline_dir, const fs::path& out,
             bool force, int threads) {
  auto cube = load_cube_checked(cube_dir);
  prepare_out(out, force);
  const std::size_t P = cube.plane();
  std::vector<std::uint8_t> mask(cube.susceptible.begin(), cube.susceptible.end());

  auto burn_on = [&](std::size_t date) {
    return std::vector<std::uint8_t>(cube.burn.begin() + (long)(date * P),
                                     cube.burn.begin() + (long)((date + 1) * P));
  };

  fdw::evaluation::EvalReport report;
  std::vector<std::size_t> no_fire_candidates;
  const auto dates = map_dates_in(maps_dir);
  if (dates.empty()) throw std::runtime_error("no fdi maps in " + maps_dir.string());

  std::vector<fs::path> member_dirs;
  if (!members_dir.empty())
    for (std::size_t i = 0;; ++i) {
      const auto d = members_dir / ("member" + std::to_string(i));
      if (!fs::exists(d)) break;
      member_dirs.push_back(d);
    }
  report.member_recalls.resize(member_dirs.size());
  for (std::size_t i = 0; i < member_dirs.size(); ++i)
    report.member_recalls[i].member_id = "member" + std::to_string(i);

  for (auto date : dates) {
    auto map = fdw::inference::load_map(maps_dir, date, mask, cube.header.height,
                                        cube.header.width);
    auto burn = burn_on(date);
    const bool fire_day =
        std::any_of(burn.begin(), burn.end(), [](std::uint8_t b) { return b != 0; });
    if (!fire_day) {
      no_fire_candidates.push_back(date);
      continue;
    }
    auto rec = fdw::evaluation::daily_recall(map, burn, run.eval_threshold);
    if (!rec) {
      report.skipped_days.push_back(date);
      continue;
    }
    report.daily.push_back(*rec);

    if (member_dirs.size() >= 2) {
      std::vector<fdw::inference::FdiMap> member_maps;
      for (std::size_t i = 0; i < member_dirs.size(); ++i) {
        member_maps.push_back(fdw::inference::load_map(member_dirs[i], date, mask,
                                                       cube.header.height, cube.header.width));
        auto mrec = fdw::evaluation::daily_recall(member_maps.back(), burn, run.eval_threshold);
        report.member_recalls[i].records.push_back(*mrec);
      }
      report.consistency.push_back(
          fdw::evaluation::ensemble_consistency(member_maps, burn, run.eval_threshold));
    }
    if (!baseline_dir.empty()) {
      auto raw = fdw::inference::load_map(baseline_dir, date, mask, cube.header.height,
                                          cube.header.width);
      report.baseline.push_back(
          {date, fdw::evaluation::compare_baseline(map, fdw::evaluation::rescale_min_max(raw),
                                                   burn, run.eval_threshold,
                                                   run.eval_threshold)});
    }
  }
  if (report.daily.empty()) throw std::runtime_error("no fire days among the supplied maps");
  report.quantiles = fdw::evaluation::recall_quantiles(report.daily);

  fdw::Rng day_rng(run.no_fire_seed);
  day_rng.shuffle(no_fire_candidates);
  if (no_fire_candidates.size() > run.no_fire_days)
    no_fire_candidates.resize(run.no_fire_days);
  std::sort(no_fire_candidates.begin(), no_fire_candidates.end());
  for (auto date : no_fire_candidates) {
    auto map = fdw::inference::load_map(maps_dir, date, mask, cube.header.height,
                                        cube.header.width);
    report.distributions.push_back(fdw::evaluation::fdi_distribution(map, run.histogram_bins));
  }

  fdw::evaluation::write_report(report, out);
  write_manifest(out, "eval", run, {{"cube", file_crc(cube_dir / "header.json")}}, threads);
  std::printf("eval: %zu fire days, %zu no-fire days, %zu skipped -> %s\n", report.daily.size(),
              report.distributions.size(), report.skipped_days.size(), out.c_str());
  return 0;
}

int run_report(const RunConfig& run, const fs::path& in, const fs::path& out, bool force,
               int threads) {
  auto report = fdw::evaluation::read_report(in);
  prepare_out(out, force);
  fdw::evaluation::write_report(report, out);
  write_manifest(out, "report", run, {{"summary", file_crc(in / "summary.json")}}, threads);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fdw: wildfire danger workbench (synthetic cube, patch classifiers, FDI maps)"};
  app.footer(kConfigReference);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::vector<std::string> overrides;
  bool force = false;
  int threads = 1;
  app.add_option("--config", config_path, "TOML-subset config file");
  app.add_option("--set", overrides, "override a key, e.g. --set train.epochs=5");
  app.add_flag("--force", force, "overwrite non-empty output directories");
  app.add_option("--threads", threads, "worker threads (1 = bit-reproducible everywhere)")
      ->check(CLI::PositiveNumber);

  std::string cube_dir, samples_dir, model_dir, maps_dir, members_dir, baseline_dir, in_dir,
      out_dir, norm_path;
  std::vector<std::size_t> date_list;
  std::int64_t date_from = -1, date_to = -1;

  auto* cube_gen = app.add_subcommand("cube-gen", "generate a synthetic datacube");
  cube_gen->add_option("--out", out_dir, "output directory")->required();

  auto* sample = app.add_subcommand("sample", "draw fire/no-fire samples and fit the normalizer");
  sample->add_option("--cube", cube_dir, "cube directory")->required();
  sample->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "train one model");
  train->add_option("--cube", cube_dir, "cube directory")->required();
  train->add_option("--samples", samples_dir, "sample directory")->required();
  train->add_option("--out", out_dir, "output directory")->required();

  auto* train_ens = app.add_subcommand("train-ensemble", "train all ensemble members");
  train_ens->add_option("--cube", cube_dir, "cube directory")->required();
  train_ens->add_option("--samples", samples_dir, "sample directory")->required();
  train_ens->add_option("--out", out_dir, "output directory")->required();

  auto* infer = app.add_subcommand("infer", "full-map FDI inference for given dates");
  infer->add_option("--cube", cube_dir, "cube directory")->required();
  infer->add_option("--model", model_dir, "trained model directory")->required();
  infer->add_option("--normalizer", norm_path, "normalizer.json path")->required();
  infer->add_option("--out", out_dir, "output directory")->required();
  infer->add_option("--date", date_list, "cube day index (repeatable)");
  infer->add_option("--from", date_from, "first day of a range");
  infer->add_option("--to", date_to, "last day of a range");

  auto* infer_ens = app.add_subcommand("infer-ensemble", "member maps plus their pixel mean");
  infer_ens->add_option("--cube", cube_dir, "cube directory")->required();
  infer_ens->add_option("--models", model_dir, "ensemble directory (member<i> subdirs)")
      ->required();
  infer_ens->add_option("--normalizer", norm_path, "normalizer.json path")->required();
  infer_ens->add_option("--out", out_dir, "output directory")->required();
  infer_ens->add_option("--date", date_list, "cube day index (repeatable)");
  infer_ens->add_option("--from", date_from, "first day of a range");
  infer_ens->add_option("--to", date_to, "last day of a range");

  auto* eval = app.add_subcommand("eval", "map-based evaluation of saved FDI maps");
  eval->add_option("--cube", cube_dir, "cube directory")->required();
  eval->add_option("--maps", maps_dir, "directory of fdi_<date> maps")->required();
  eval->add_option("--members", members_dir, "ensemble map directory for Eq-style consistency");
  eval->add_option("--baseline", baseline_dir, "baseline raster directory (sidecar format)");
  eval->add_option("--out", out_dir, "output directory")->required();

  auto* report = app.add_subcommand("report", "re-render CSV/SVG artifacts from a summary");
  report->add_option("--in", in_dir, "directory containing summary.json")->required();
  report->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    Config cfg;
    if (!config_path.empty()) cfg = Config::parse_file(config_path);
    for (const auto& o : overrides) cfg.set(o);
    RunConfig run = parse_run(cfg);

    if (cube_gen->parsed()) return run_cube_gen(run, out_dir, force, threads);
    if (sample->parsed()) return run_sample(run, cube_dir, out_dir, force, threads);
    if (train->parsed()) return run_train(run, cube_dir, samples_dir, out_dir, force, threads);
    if (train_ens->parsed())
      return run_train_ensemble(run, cube_dir, samples_dir, out_dir, force, threads);
    if (infer->parsed())
      return run_infer_generic(run, cube_dir, model_dir, norm_path, out_dir,
                               parse_dates(run, date_list, date_from, date_to), force, threads,
                               false);
    if (infer_ens->parsed())
      return run_infer_generic(run, cube_dir, model_dir, norm_path, out_dir,
                               parse_dates(run, date_list, date_from, date_to), force, threads,
                               true);
    if (eval->parsed())
      return run_eval(run, cube_dir, maps_dir, members_dir, baseline_dir, out_dir, force,
                      threads);
    if (report->parsed()) return run_report(run, in_dir, out_dir, force, threads);
    return 1;
  } catch (const fdw::trainer::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
