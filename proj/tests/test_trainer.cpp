#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fdw/cube/synthetic.hpp"
#include "fdw/nn/adam.hpp"
#include "fdw/trainer.hpp"
#include "support/oracles.hpp"

using namespace fdw;
using namespace fdw::trainer;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  sampling::Dataset train, val;
};

/// Small planted-signal dataset: year 0 trains, year 1 validates.
Fixture make_datasets(std::size_t temporal_len = 1) {
  cube::SyntheticConfig gc;
  gc.height = 40;
  gc.width = 40;
  gc.years = 2;
  gc.days_per_year = 60;
  gc.fire_window_start = 12;
  gc.fire_window_end = 50;
  gc.target_fires_per_year = 50;
  gc.seed = 77;
  auto cube = cube::generate_synthetic_cube(gc);
  auto norm = cube::Normalizer::fit(cube, 0, 59);
  sampling::SamplingConfig sc;
  auto fires = sampling::select_fire_samples(cube, sc);
  auto nofires = sampling::select_nofire_samples(cube, fires, sc);
  std::vector<sampling::SampleIndex> all = fires;
  all.insert(all.end(), nofires.begin(), nofires.end());
  Fixture fx;
  std::vector<sampling::SampleIndex> tr, va;
  for (const auto& s : all) (s.year == 0 ? tr : va).push_back(s);
  fx.train = sampling::assemble_dataset(cube, tr, norm, temporal_len);
  fx.val = sampling::assemble_dataset(cube, va, norm, temporal_len);
  return fx;
}

models::ModelConfig small_model() {
  models::ModelConfig cfg;
  cfg.architecture = models::ArchitectureId::kBasicCnn;
  cfg.conv_width = 8;
  cfg.classifier_widths = {16};
  cfg.init_seed = 5;
  return cfg;
}

TrainConfig fast_train(std::size_t epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 64;
  return cfg;
}

}  // namespace

TEST_CASE("metrics match the worked confusion example") {
  // 9 true positives, 1 miss, 3 false alarms
  nn::Tensor<float> logp({13, 2});
  std::vector<int> labels;
  auto set_row = [&](std::size_t n, double fire_prob) {
    logp.at(n, 0) = (float)std::log(fire_prob);
    logp.at(n, 1) = (float)std::log(1.0 - fire_prob);
  };
  for (std::size_t n = 0; n < 9; ++n) { set_row(n, 0.9); labels.push_back(0); }
  set_row(9, 0.2); labels.push_back(0);
  for (std::size_t n = 10; n < 13; ++n) { set_row(n, 0.8); labels.push_back(1); }
  auto m = compute_metrics(logp, labels);
  CHECK(m.recall == doctest::Approx(0.9));
  CHECK(m.precision == doctest::Approx(0.75));
  CHECK(m.f1 == doctest::Approx(2.0 * 0.9 * 0.75 / 1.65));
}

TEST_CASE("no positives anywhere gives all-zero metrics") {
  nn::Tensor<float> logp({2, 2});
  logp.at(0, 0) = logp.at(1, 0) = std::log(0.1f);
  logp.at(0, 1) = logp.at(1, 1) = std::log(0.9f);
  auto m = compute_metrics(logp, {1, 1});
  CHECK(m.recall == 0.0);
  CHECK(m.precision == 0.0);
  CHECK(m.f1 == 0.0);
}

TEST_CASE("metrics agree with a brute-force confusion matrix") {
  Rng rng(3);
  const std::size_t n = 500;
  nn::Tensor<float> logp({n, 2});
  std::vector<int> labels;
  std::vector<double> probs;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = rng.uniform(0.001, 0.999);
    logp.at(i, 0) = (float)std::log(p);
    logp.at(i, 1) = (float)std::log(1.0 - p);
    probs.push_back(std::exp((double)logp.at(i, 0)));
    labels.push_back(rng.bernoulli(0.4) ? 0 : 1);
  }
  auto m = compute_metrics(logp, labels);
  auto c = oracle::confusion(probs, labels);
  const double recall = c.tp + c.fn ? (double)c.tp / (double)(c.tp + c.fn) : 0.0;
  const double precision = c.tp + c.fp ? (double)c.tp / (double)(c.tp + c.fp) : 0.0;
  CHECK(m.recall == recall);
  CHECK(m.precision == precision);
}

TEST_CASE("one epoch yields one record with best epoch zero") {
  auto fx = make_datasets();
  auto res = train(models::build_model(small_model()), fx.train, fx.val, fast_train(1));
  REQUIRE(res.history.records.size() == 1);
  CHECK(res.history.best_epoch == 0);
  CHECK(res.best.provenance.epochs_trained == 1);
}

TEST_CASE("best epoch is the argmin of the recorded validation losses") {
  auto fx = make_datasets();
  auto res = train(models::build_model(small_model()), fx.train, fx.val, fast_train(6));
  std::size_t argmin = 0;
  for (std::size_t e = 1; e < res.history.records.size(); ++e)
    if (res.history.records[e].val_loss < res.history.records[argmin].val_loss) argmin = e;
  CHECK(res.history.best_epoch == argmin);
  CHECK(res.history.best_val_loss == res.history.records[argmin].val_loss);
  CHECK(res.best.provenance.best_epoch == argmin);
}

TEST_CASE("recorded learning rates replay the plateau schedule") {
  auto fx = make_datasets();
  auto cfg = fast_train(8);
  cfg.plateau_patience = 2;
  auto res = train(models::build_model(small_model()), fx.train, fx.val, cfg);
  nn::PlateauScheduler sched(cfg.lr, cfg.plateau_patience, cfg.plateau_factor, cfg.min_lr);
  for (const auto& r : res.history.records) {
    CHECK(r.lr == sched.lr());
    sched.update(r.val_loss);
  }
}

TEST_CASE("training on the planted signal reduces the loss") {
  auto fx = make_datasets();
  auto res = train(models::build_model(small_model()), fx.train, fx.val, fast_train(8));
  CHECK(res.history.records.back().train_loss < res.history.records.front().train_loss);
}

TEST_CASE("training is bit-reproducible under fixed seeds") {
  auto fx = make_datasets();
  auto a = train(models::build_model(small_model()), fx.train, fx.val, fast_train(2));
  auto b = train(models::build_model(small_model()), fx.train, fx.val, fast_train(2));
  auto sa = a.best.state_arrays(), sb = b.best.state_arrays();
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i].second->vec() == sb[i].second->vec());
  for (std::size_t e = 0; e < a.history.records.size(); ++e)
    CHECK(a.history.records[e].val_loss == b.history.records[e].val_loss);
}

TEST_CASE("a trailing singleton batch is folded into its neighbor") {
  auto fx = make_datasets();
  auto cfg = fast_train(1);
  cfg.batch_size = fx.train.patches.size() - 1;  // plan would end with a 1-row batch
  CHECK_NOTHROW(train(models::build_model(small_model()), fx.train, fx.val, cfg));
}

TEST_CASE("recurrent training runs end to end") {
  auto fx = make_datasets(10);
  models::ModelConfig cfg;
  cfg.architecture = models::ArchitectureId::kConvLstm;
  cfg.convlstm_filters = 2;
  cfg.convlstm_head_width = 4;
  cfg.classifier_widths = {8};
  cfg.init_seed = 5;
  auto res = train(models::build_model(cfg), fx.train, fx.val, fast_train(1));
  CHECK(res.history.records.size() == 1);
  CHECK(std::isfinite(res.history.records[0].val_loss));
}

TEST_CASE("ensemble members differ in weights but rerun identically") {
  auto fx = make_datasets();
  EnsembleSpec spec;
  spec.init_seeds = {41, 42};
  spec.train = fast_train(1);
  auto members = train_ensemble(small_model(), spec, fx.train, fx.val);
  REQUIRE(members.size() == 2);
  CHECK(members[0].best.state_arrays()[0].second->vec() !=
        members[1].best.state_arrays()[0].second->vec());

  auto cfg = small_model();
  cfg.init_seed = 42;
  auto solo = train(models::build_model(cfg), fx.train, fx.val, spec.train);
  auto sa = solo.best.state_arrays(), sb = members[1].best.state_arrays();
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i].second->vec() == sb[i].second->vec());
}

TEST_CASE("duplicate ensemble seeds are rejected") {
  EnsembleSpec spec;
  spec.init_seeds = {1, 2, 1};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("batch size below two is rejected") {
  TrainConfig cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("history csv carries the documented columns") {
  TrainHistory h;
  h.records.push_back({0, 0.5, 0.6, 0.7, 0.8, 0.75, 1e-3});
  h.records.push_back({1, 0.4, 0.55, 0.72, 0.81, 0.76, 1e-3});
  auto path = fs::temp_directory_path() / "fdw_history.csv";
  save_history_csv(h, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_loss,recall,precision,f1,lr");
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
  fs::remove(path);
}
