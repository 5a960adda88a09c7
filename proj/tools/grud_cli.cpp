// grud: command-line front end for the forecasting experiments.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "grud/error.hpp"
#include "grud/experiments.hpp"
#include "grud/format.hpp"

namespace fs = std::filesystem;
using namespace grud;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON experiment config");
  cmd->add_option("--out", flags.out_dir, "Output directory");
  cmd->add_option("--seed", flags.seed, "Base seed (overrides the config)");
  cmd->add_option("--threads", flags.threads, "Parallel training jobs")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CommonFlags& flags, const std::vector<ModelEntry>& default_models,
                         const std::vector<double>& default_rates) {
  ExperimentConfig config;
  if (!flags.config_path.empty()) config = load_config(flags.config_path);
  if (config.models.empty()) config.models = default_models;
  if (flags.config_path.empty()) config.missing_rates = default_rates;
  if (flags.seed) config.base_seed = *flags.seed;
  if (flags.threads) config.threads = *flags.threads;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  config.validate();
  return config;
}

fs::path prepare_out(const ExperimentConfig& config) {
  const fs::path out(config.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

void write_manifest(const fs::path& out, const std::string& command,
                    const ExperimentConfig& config) {
  open_out(out / "run_manifest.json") << run_manifest(command, config).dump(2) << '\n';
}

std::vector<ModelEntry> missing_data_models() {
  std::vector<ModelEntry> m{{Variant::Grud, Imputation::None}};
  for (Variant v : {Variant::Gru, Variant::Lstm, Variant::Ffnn})
    for (Imputation i : {Imputation::Average, Imputation::Last, Imputation::Simple})
      m.push_back({v, i});
  return m;
}

void print_aggregates(const std::vector<Aggregate>& aggs) {
  std::printf("%-8s %-8s %6s %4s %10s %10s %10s\n", "model", "impute", "rate", "n", "MAE",
              "MSE", "MAPE%");
  for (const auto& a : aggs) {
    std::printf("%-8s %-8s %6.2f %4zu %10.5f %10.5f %10.3f\n", a.model.c_str(),
                a.imputation.c_str(), a.missing_rate, a.n, a.mae_mean, a.mse_mean,
                a.mape_mean);
  }
}

int cmd_synth(const CommonFlags& flags) {
  const ExperimentConfig config = resolve(flags, {{Variant::Gru, Imputation::None}}, {0.0});
  if (config.csv_path) throw ConfigError("synth: config points at a CSV file, not a synthetic source");
  const fs::path out = prepare_out(config);
  std::vector<SegmentSeries> series;
  for (auto& unit : build_units(config)) series.push_back(std::move(unit.series));
  auto f = open_out(out / "synthetic.csv");
  write_csv(f, series);
  write_manifest(out, "synth", config);
  std::cout << "wrote " << (out / "synthetic.csv").string() << " (" << series.size()
            << " segments)\n";
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  ExperimentConfig config = resolve(flags, {{Variant::Grud, Imputation::None}}, {0.8});
  const fs::path out = prepare_out(config);
  const DataUnit unit = build_units(config).front();
  const ModelEntry entry = config.models.front();
  const double rate = config.missing_rates.front();
  JobResult job = run_job(config, entry, rate, unit);

  ResultsTable table;
  table.rows.push_back(job.row);
  auto results = open_out(out / "results.csv");
  write_results_csv(results, table);
  auto curves = open_out(out / "loss_curves.csv");
  export_loss_curves(curves, {job.curve});
  save_model(job.model, out / "model.json");
  if (entry.variant == Variant::Grud) {
    auto dc = open_out(out / "decay_curve.csv");
    write_decay_curve_csv(dc, decay_curve(job.model, config.decay_curve_max));
  }
  write_manifest(out, "train", config);
  std::printf("%s rate=%.2f %s: MAE %.5f  MSE %.5f  MAPE %.3f%%  (epochs %zu, best %zu)\n",
              entry.label().c_str(), rate, unit.series.segment_id.c_str(), job.row.eval.mae,
              job.row.eval.mse, job.row.eval.mape_percent, job.row.epochs_run,
              job.row.best_epoch);
  return 0;
}

int cmd_benchmark(const CommonFlags& flags) {
  const ExperimentConfig config = resolve(flags, missing_data_models(), {0.8});
  const fs::path out = prepare_out(config);
  const RunOutput run = run_benchmark(config);
  auto results = open_out(out / "results.csv");
  write_results_csv(results, run.table);
  const auto aggs = run.table.aggregates();
  auto agg = open_out(out / "aggregates.csv");
  write_aggregates_csv(agg, aggs);
  auto curves = open_out(out / "loss_curves.csv");
  export_loss_curves(curves, run.curves);
  write_manifest(out, "benchmark", config);
  print_aggregates(aggs);
  return 0;
}

int cmd_sweep(const CommonFlags& flags) {
  const ExperimentConfig config =
      resolve(flags, {{Variant::Grud, Imputation::None}}, default_sweep_rates());
  const fs::path out = prepare_out(config);
  const RunOutput run = sweep_missing_rates(config);
  auto results = open_out(out / "results.csv");
  write_results_csv(results, run.table);
  const auto aggs = run.table.aggregates();
  auto sweep = open_out(out / "sweep.csv");
  write_aggregates_csv(sweep, aggs);
  auto curves = open_out(out / "loss_curves.csv");
  export_loss_curves(curves, run.curves);
  write_manifest(out, "sweep", config);
  print_aggregates(aggs);
  return 0;
}

int cmd_decay_curve(const CommonFlags& flags, const std::string& model_path) {
  ExperimentConfig config = resolve(flags, {{Variant::Grud, Imputation::None}}, {0.8});
  const fs::path out = prepare_out(config);
  Model model;
  if (!model_path.empty()) {
    model = load_model(model_path);
  } else {
    const DataUnit unit = build_units(config).front();
    JobResult job = run_job(config, {Variant::Grud, Imputation::None},
                            config.missing_rates.front(), unit);
    ResultsTable table;
    table.rows.push_back(job.row);
    auto results = open_out(out / "results.csv");
    write_results_csv(results, table);
    save_model(job.model, out / "model.json");
    model = std::move(job.model);
  }
  const auto curve = decay_curve(model, config.decay_curve_max);
  auto f = open_out(out / "decay_curve.csv");
  write_decay_curve_csv(f, curve);
  write_manifest(out, "decay-curve", config);
  std::cout << "wrote " << (out / "decay_curve.csv").string() << " (" << curve.size()
            << " points, gamma(0)=" << fmt_double(curve.front().second.front())
            << ", gamma(max)=" << fmt_double(curve.back().second.front()) << ")\n";
  return 0;
}

int cmd_gradcheck(const CommonFlags& flags, std::size_t draws, double tolerance) {
  ExperimentConfig config;
  if (!flags.config_path.empty()) config = load_config(flags.config_path);
  if (flags.seed) config.base_seed = *flags.seed;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  const fs::path out = prepare_out(config);
  const auto rows = gradcheck_suite(draws, 1, 4, 7, config.base_seed);
  auto f = open_out(out / "gradcheck.csv");
  f << "variant,draw,max_relative_error,max_absolute_error,checked,skipped_at_kink,worst,analytic,"
       "numeric\n";
  bool ok = true;
  double worst[4] = {0, 0, 0, 0};
  double worst_abs[4] = {0, 0, 0, 0};
  for (const auto& r : rows) {
    f << variant_name(r.variant) << ',' << r.draw << ','
      << fmt_double(r.result.max_relative_error) << ','
      << fmt_double(r.result.max_absolute_error) << ',' << r.result.checked << ','
      << r.result.skipped_at_kink << ',' << r.result.worst_tensor << ','
      << fmt_double(r.result.worst_analytic) << ',' << fmt_double(r.result.worst_numeric) << '\n';
    auto& w = worst[static_cast<int>(r.variant)];
    w = std::max(w, r.result.max_relative_error);
    auto& wa = worst_abs[static_cast<int>(r.variant)];
    wa = std::max(wa, r.result.max_absolute_error);
    ok = ok && r.result.max_relative_error < tolerance;
  }
  for (Variant v : {Variant::Gru, Variant::Grud, Variant::Lstm, Variant::Ffnn}) {
    std::printf("%-6s worst relative error %.3e  worst absolute error %.3e\n",
                std::string(variant_name(v)).c_str(), worst[static_cast<int>(v)],
                worst_abs[static_cast<int>(v)]);
  }
  std::printf("%s (tolerance %.1e)\n", ok ? "PASS" : "FAIL", tolerance);
  return ok ? 0 : 1;
}

int exit_code(const std::string& kind) {
  if (kind == "config" || kind == "usage") return 2;
  if (kind == "data" || kind == "dimension") return 3;
  if (kind == "training") return 4;
  return 1;
}

int report(const std::string& kind, const std::string& message) {
  nlohmann::json err{{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return exit_code(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-aware GRU / GRU-D forecasting experiments"};
  app.require_subcommand(1);

  CommonFlags synth_f, train_f, bench_f, sweep_f, decay_f, grad_f;
  auto* synth = app.add_subcommand("synth", "Write synthetic friction series as CSV");
  add_common(synth, synth_f);
  auto* train_cmd = app.add_subcommand("train", "Train and evaluate one configuration");
  add_common(train_cmd, train_f);
  auto* bench = app.add_subcommand("benchmark", "Model x imputation x missing-rate grid");
  add_common(bench, bench_f);
  auto* sweep = app.add_subcommand("sweep", "Missing-rate sweep (default 0% to 50%)");
  add_common(sweep, sweep_f);
  auto* decay = app.add_subcommand("decay-curve", "Export the learned input decay curve");
  add_common(decay, decay_f);
  std::string model_path;
  decay->add_option("--model", model_path, "Trained GRU-D model JSON (trains one when omitted)");
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every model variant");
  add_common(grad, grad_f);
  std::size_t draws = 20;
  double tolerance = 1e-5;
  grad->add_option("--draws", draws, "Random draws per variant");
  grad->add_option("--tolerance", tolerance, "Maximum allowed relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report("usage", e.what());
  }

  try {
    if (*synth) return cmd_synth(synth_f);
    if (*train_cmd) return cmd_train(train_f);
    if (*bench) return cmd_benchmark(bench_f);
    if (*sweep) return cmd_sweep(sweep_f);
    if (*decay) return cmd_decay_curve(decay_f, model_path);
    if (*grad) return cmd_gradcheck(grad_f, draws, tolerance);
  } catch (const Error& e) {
    return report(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report("internal", e.what());
  }
  return 1;
}
