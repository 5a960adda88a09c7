#include "doctest.h"

#include <cmath>
#include <sstream>

#include "grud/error.hpp"
#include "grud/timeseries.hpp"
#include "grud/training.hpp"

using namespace grud;

namespace {

SegmentSeries constant_series(std::size_t n, double value) {
  SegmentSeries s;
  s.segment_id = "c";
  for (std::size_t i = 0; i < n; ++i) {
    s.values.push_back(value);
    s.timestamps.push_back(static_cast<double>(i));
  }
  return s;
}

DatasetSplit synthetic_split(std::uint64_t seed, double rate, std::size_t days = 120) {
  SynthConfig cfg;
  cfg.n_days = days;
  cfg.seed = seed;
  auto samples = window(synthesize(cfg), 7);
  if (rate > 0.0)
    for (std::size_t i = 0; i < samples.size(); ++i)
      samples[i] = inject_missing(samples[i], rate, seed * 1000 + i);
  return split(std::move(samples), seed);
}

ModelSpec spec_for(Variant v) {
  ModelSpec s;
  s.variant = v;
  s.hidden_size = 6;
  return s;
}

}  // namespace

TEST_CASE("adam on zero gradients leaves parameters and decays moments") {
  Model m = make_model(spec_for(Variant::Gru), 1);
  const Model before = m;
  AdamState st = AdamState::for_model(m);
  adam_step(m, zero_grads(m), st, TrainConfig{});
  CHECK(m.head.w == before.head.w);
  CHECK(m.gru[0].u_h == before.gru[0].u_h);
  CHECK(st.step == 1);

  st.first_moment.head.w.fill(0.5);
  st.second_moment.head.w.fill(0.25);
  adam_step(m, zero_grads(m), st, TrainConfig{});
  CHECK(st.first_moment.head.w(0, 0) == doctest::Approx(0.45));
  CHECK(st.second_moment.head.w(0, 0) == doctest::Approx(0.25 * 0.999));
  CHECK(st.step == 2);
}

TEST_CASE("first adam step moves by the learning rate") {
  Model m = make_model(spec_for(Variant::Gru), 1);
  Grads g = zero_grads(m);
  g.head.b[0] = 1.0;
  g.head.w(0, 2) = -3.0;
  AdamState st = AdamState::for_model(m);
  const double b0 = m.head.b[0], w0 = m.head.w(0, 2);
  TrainConfig cfg;
  adam_step(m, g, st, cfg);
  CHECK(m.head.b[0] - b0 == doctest::Approx(-cfg.learning_rate).epsilon(1e-6));
  CHECK(m.head.w(0, 2) - w0 == doctest::Approx(cfg.learning_rate).epsilon(1e-6));

  Model a = make_model(spec_for(Variant::Grud), 2), b = a;
  AdamState sa = AdamState::for_model(a), sb = AdamState::for_model(b);
  Grads ga = zero_grads(a);
  ga.head.w.fill(0.3);
  adam_step(a, ga, sa, cfg);
  adam_step(b, ga, sb, cfg);
  CHECK(a.head.w == b.head.w);
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.patience = cfg.max_epochs;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("a constant target is learned quickly") {
  const auto data = split(window(constant_series(80, 0.7), 7), 3);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.patience = 49;
  const auto result = train(make_model(spec_for(Variant::Gru), 5), data, Imputation::None, cfg);
  double best = 1e9;
  for (double v : result.report.val_loss) best = std::min(best, v);
  CHECK(best < 1e-4);
  CHECK(result.report.epochs_run <= 50);
}

TEST_CASE("patience of one stops early on noise") {
  SynthConfig cfg;
  cfg.n_days = 120;
  cfg.winter_depth = 0.0;
  cfg.noise_std = 0.1;
  cfg.seed = 8;
  const auto data = split(window(synthesize(cfg), 7), 8);
  TrainConfig tc;
  tc.patience = 1;
  tc.seed = 2;
  const auto r = train(make_model(spec_for(Variant::Gru), 6), data, Imputation::None, tc);
  CHECK(r.report.epochs_run < 30);
  CHECK(r.report.epochs_run - r.report.best_epoch <= tc.patience + 1);
}

TEST_CASE("training is reproducible and keeps the best epoch") {
  const auto data = synthetic_split(4, 0.5);
  TrainConfig tc;
  tc.max_epochs = 30;
  tc.patience = 5;
  tc.seed = 11;
  for (Variant v : {Variant::Gru, Variant::Grud, Variant::Lstm, Variant::Ffnn}) {
    CAPTURE(variant_name(v));
    const Imputation imp = v == Variant::Grud ? Imputation::None : Imputation::Simple;
    const auto a = train(make_model(spec_for(v), 9), data, imp, tc);
    const auto b = train(make_model(spec_for(v), 9), data, imp, tc);
    CHECK(a.report.train_loss == b.report.train_loss);
    CHECK(a.report.val_loss == b.report.val_loss);
    CHECK(tensors(a.model).size() == tensors(b.model).size());
    CHECK(a.model.head.w == b.model.head.w);

    const auto& r = a.report;
    REQUIRE(r.best_epoch >= 1);
    REQUIRE(r.val_loss.size() == r.epochs_run);
    for (double v2 : r.val_loss) CHECK(r.val_loss[r.best_epoch - 1] <= v2);
    CHECK(r.epochs_run - r.best_epoch <= tc.patience + 1);
    const auto eval = evaluate(a.model, data.validation, imp);
    CHECK(eval.mse == doctest::Approx(r.val_loss[r.best_epoch - 1]).epsilon(1e-12));
  }
}

TEST_CASE("training rejects inconsistent imputation choices") {
  const auto data = synthetic_split(5, 0.5);
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.patience = 1;
  CHECK_THROWS_AS(train(make_model(spec_for(Variant::Grud), 1), data, Imputation::Last, tc),
                  ConfigError);
  CHECK_THROWS_AS(train(make_model(spec_for(Variant::Gru), 1), data, Imputation::None, tc),
                  ConfigError);
}

TEST_CASE("evaluate a constant predictor") {
  const auto data = synthetic_split(6, 0.0);
  Model m = make_model(spec_for(Variant::Gru), 3);
  m.visit([](const std::string&, std::string_view, std::span<double> t) {
    for (double& x : t) x = 0.0;
  });
  const TrainStats stats = empirical_mean(data.train);
  m.set_stats(stats);
  const double c = stats.empirical_mean[0];
  m.head.b[0] = c;
  double mae = 0, mse = 0, mape = 0;
  for (const auto& s : data.test) {
    mae += std::abs(s.y - c);
    mse += (s.y - c) * (s.y - c);
    mape += std::abs((s.y - c) / s.y);
  }
  const double n = static_cast<double>(data.test.size());
  const auto r = evaluate(m, data.test, Imputation::None);
  CHECK(r.n == data.test.size());
  CHECK(r.mae == doctest::Approx(mae / n).epsilon(1e-12));
  CHECK(r.mse == doctest::Approx(mse / n).epsilon(1e-12));
  CHECK(r.mape_percent == doctest::Approx(100.0 * mape / n).epsilon(1e-12));
  const auto again = evaluate(m, data.test, Imputation::None);
  CHECK(again.mae == r.mae);
}

TEST_CASE("loss report csv") {
  TrainReport r;
  r.train_loss = {0.5, 0.25};
  r.val_loss = {0.4, 0.3};
  r.epochs_run = 2;
  r.best_epoch = 2;
  std::ostringstream out;
  write_report_csv(out, r);
  CHECK(out.str() == "epoch,train_loss,val_loss\n1,0.5,0.4\n2,0.25,0.3\n");
}
