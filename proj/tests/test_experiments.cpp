#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "grud/error.hpp"
#include "grud/experiments.hpp"
#include "grud/training.hpp"

using namespace grud;

namespace {

ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.synth.n_days = 100;
  c.n_seeds = 2;
  c.hidden_size = 4;
  c.train.max_epochs = 8;
  c.train.patience = 3;
  c.models = {{Variant::Grud, Imputation::None}, {Variant::Gru, Imputation::Last}};
  c.missing_rates = {0.0, 0.5};
  return c;
}

std::string results_text(const RunOutput& out) {
  std::ostringstream s;
  write_results_csv(s, out.table);
  return s.str();
}

std::vector<std::vector<std::string>> parse_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig c = quick_config();
  CHECK_NOTHROW(c.validate());
  c.models.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(run_benchmark(c), ConfigError);
  c = quick_config();
  c.models.push_back({Variant::Grud, Imputation::Average});
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = quick_config();
  c.missing_rates = {1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config json round trip") {
  ExperimentConfig c = quick_config();
  c.base_seed = 77;
  c.synth.noise_std = 0.05;
  nlohmann::json j = c;
  const auto back = j.get<ExperimentConfig>();
  CHECK(back.models == c.models);
  CHECK(back.missing_rates == c.missing_rates);
  CHECK(back.base_seed == 77);
  CHECK(back.synth.noise_std == 0.05);
  CHECK(back.train.max_epochs == c.train.max_epochs);

  const auto parsed = nlohmann::json::parse(
      R"({"models":[{"variant":"GRU","imputation":"last"}],"data":{"csv":"x.csv"},"seed":3})");
  const auto from_text = parsed.get<ExperimentConfig>();
  REQUIRE(from_text.csv_path.has_value());
  CHECK(*from_text.csv_path == "x.csv");
  CHECK(from_text.base_seed == 3);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("units and masks are reproducible and nested across rates") {
  const ExperimentConfig c = quick_config();
  const auto units = build_units(c);
  REQUIRE(units.size() == 2);
  CHECK(units[0].series.values != units[1].series.values);
  const auto lo = prepare_unit(c, units[0], 0.3);
  const auto hi = prepare_unit(c, units[0], 0.7);
  const auto again = prepare_unit(c, units[0], 0.7);
  REQUIRE(lo.test.size() == hi.test.size());
  for (std::size_t i = 0; i < hi.test.size(); ++i) {
    CHECK(hi.test[i].y == lo.test[i].y);
    CHECK(hi.test[i].m == again.test[i].m);
    for (std::size_t t = 0; t < hi.test[i].steps; ++t)
      if (lo.test[i].m[t] == 0.0) CHECK(hi.test[i].m[t] == 0.0);
  }
}

TEST_CASE("benchmark is deterministic and thread-count independent") {
  ExperimentConfig c = quick_config();
  const std::string a = results_text(run_benchmark(c));
  const std::string b = results_text(run_benchmark(c));
  c.threads = 3;
  const std::string d = results_text(run_benchmark(c));
  CHECK(a == b);
  CHECK(a == d);
  CHECK(parse_rows(a).size() == 2 * 2 * 2);
}

TEST_CASE("clean gru beats the mean predictor on default data") {
  ExperimentConfig c;
  c.n_seeds = 3;
  c.models = {{Variant::Gru, Imputation::None}};
  c.missing_rates = {0.0};
  const auto out = run_benchmark(c);
  REQUIRE(out.table.rows.size() == 3);
  for (const auto& r : out.table.rows) {
    CHECK(std::isfinite(r.eval.mape_percent));
    CHECK(r.eval.mape_percent < r.mean_baseline.mape_percent);
  }
}

TEST_CASE("aggregates match per-seed rows") {
  const auto out = run_benchmark(quick_config());
  const auto aggs = out.table.aggregates();
  CHECK(aggs.size() == 4);
  for (const auto& a : aggs) {
    std::vector<double> mae;
    for (const auto& r : out.table.rows)
      if (r.model == a.model && r.imputation == a.imputation && r.missing_rate == a.missing_rate)
        mae.push_back(r.eval.mae);
    REQUIRE(mae.size() == a.n);
    double mean = 0;
    for (double v : mae) mean += v;
    mean /= static_cast<double>(mae.size());
    double ss = 0;
    for (double v : mae) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / static_cast<double>(mae.size() - 1)) /
                      std::sqrt(static_cast<double>(mae.size()));
    CHECK(std::abs(a.mae_mean - mean) <= 1e-12);
    CHECK(std::abs(a.mae_se - se) <= 1e-12);
  }
}

TEST_CASE("imputed inputs never carry sentinels") {
  const ExperimentConfig c = quick_config();
  const auto units = build_units(c);
  const auto data = prepare_unit(c, units[0], 0.8);
  Model m = make_model(c.model_spec(Variant::Gru), 1);
  m.set_stats(empirical_mean(data.train));
  for (Imputation imp : {Imputation::Average, Imputation::Last, Imputation::Simple})
    for (const auto& s : prepare_inputs(m, data.test, imp)) CHECK_FALSE(s.has_sentinels());
  Model g = make_model(c.model_spec(Variant::Grud), 1);
  g.set_stats(empirical_mean(data.train));
  bool any = false;
  for (const auto& s : prepare_inputs(g, data.test, Imputation::None)) any |= s.has_sentinels();
  CHECK(any);
}

TEST_CASE("sweep rows per rate and rate-zero consistency") {
  ExperimentConfig c = quick_config();
  c.models = {{Variant::Grud, Imputation::None}};
  c.missing_rates = {0.0, 0.2, 0.4};
  const auto sweep = sweep_missing_rates(c);
  const auto aggs = sweep.table.aggregates();
  CHECK(aggs.size() == 3);

  ExperimentConfig clean = c;
  clean.missing_rates = {0.0};
  const auto base = run_benchmark(clean);
  for (const auto& r : base.table.rows) {
    const auto it = std::find_if(sweep.table.rows.begin(), sweep.table.rows.end(), [&](const ResultRow& s) {
      return s.missing_rate == 0.0 && s.seed == r.seed;
    });
    REQUIRE(it != sweep.table.rows.end());
    CHECK(it->eval.mae == r.eval.mae);
    CHECK(it->eval.mape_percent == r.eval.mape_percent);
  }

  ExperimentConfig no_grud = c;
  no_grud.models = {{Variant::Gru, Imputation::Last}};
  CHECK_THROWS_AS(sweep_missing_rates(no_grud), ConfigError);
}

TEST_CASE("decay curve") {
  ModelSpec spec;
  spec.variant = Variant::Grud;
  spec.hidden_size = 3;
  Model m = make_model(spec, 1);
  const auto flat = decay_curve(m, 10.0);
  CHECK(flat.size() == 21);
  for (const auto& [d, g] : flat) CHECK(g[0] == 1.0);

  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    m.grud->w_gx(0, 0) = rng.normal();
    m.grud->b_gx[0] = rng.normal();
    const auto curve = decay_curve(m, 35.0);
    for (std::size_t k = 0; k < curve.size(); ++k) {
      CHECK(curve[k].second[0] > 0.0);
      CHECK(curve[k].second[0] <= 1.0);
      if (m.grud->w_gx(0, 0) >= 0.0 && k > 0) CHECK(curve[k].second[0] <= curve[k - 1].second[0]);
    }
  }
  spec.variant = Variant::Gru;
  CHECK_THROWS_AS(decay_curve(make_model(spec, 1), 5.0), ConfigError);

  std::ostringstream out;
  write_decay_curve_csv(out, flat);
  CHECK(out.str().rfind("delta,gamma_x\n0,1\n0.5,1\n", 0) == 0);
}

TEST_CASE("loss curve export") {
  TrainReport r;
  r.train_loss = {0.9, 0.5, 0.4, 0.35, 0.33};
  r.val_loss = {0.8, 0.6, 0.45, 0.5, 0.52};
  r.epochs_run = 5;
  r.best_epoch = 3;
  std::ostringstream out;
  export_loss_curves(out, {{"GRU-D none 0.8 #7", r}});
  const auto rows = parse_rows(out.str());
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) CHECK(row[0] == "GRU-D none 0.8 #7");

  const auto run = run_benchmark(quick_config());
  std::ostringstream curves;
  export_loss_curves(curves, run.curves);
  std::map<std::string, std::pair<double, std::size_t>> best;
  for (const auto& row : parse_rows(curves.str())) {
    const double v = std::stod(row[3]);
    auto [it, fresh] = best.try_emplace(row[0], v, std::stoul(row[1]));
    if (!fresh && v < it->second.first) it->second = {v, std::stoul(row[1])};
  }
  REQUIRE(best.size() == run.curves.size());
  for (const auto& c : run.curves) CHECK(best.at(c.label).second == c.report.best_epoch);
}

TEST_CASE("gradient check suite") {
  const auto rows = gradcheck_suite(2, 1, 3, 5, 9);
  CHECK(rows.size() == 8);
  for (const auto& r : rows) {
    CHECK(r.result.checked > 0);
    CHECK(r.result.max_relative_error < 1e-5);
  }
}

TEST_CASE("run manifest records the setup") {
  const auto j = run_manifest("benchmark", quick_config());
  CHECK(j.at("command") == "benchmark");
  CHECK(j.contains("config"));
  CHECK(j.contains("kernel_backend"));
}
