#pragma once
// Experiment harness: clean and missing-data benchmarks, the missing-rate
// sweep, loss-curve and learned-decay exports, and the gradient-check suite.
// Every job is reproducible from (config, seed index) alone.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grud/metrics.hpp"
#include "grud/missingness.hpp"
#include "grud/network.hpp"
#include "grud/timeseries.hpp"
#include "grud/training.hpp"

namespace grud {

struct ModelEntry {
  Variant variant = Variant::Gru;
  Imputation imputation = Imputation::None;

  std::string label() const;
  friend bool operator==(const ModelEntry&, const ModelEntry&) = default;
};

struct ExperimentConfig {
  std::optional<std::string> csv_path;  // otherwise synthetic data
  SynthConfig synth;
  std::size_t window = 7;
  std::vector<ModelEntry> models;
  std::vector<double> missing_rates{0.0};
  std::size_t n_seeds = 10;
  std::uint64_t base_seed = 0;
  TrainConfig train;
  std::size_t hidden_size = 16;
  std::size_t recurrent_depth = 1;  // GRU and GRU-D
  std::size_t lstm_depth = 2;
  std::size_t ffnn_hidden_layers = 2;
  double decay_curve_max = 35.0;
  std::size_t threads = 1;
  std::string out_dir = "out";

  void validate() const;
  ModelSpec model_spec(Variant v) const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Missing-rate grid used by the sweep when none is configured.
std::vector<double> default_sweep_rates();

struct ResultRow {
  std::string model;
  std::string imputation;
  double missing_rate = 0.0;
  std::string segment;
  std::size_t seed = 0;  // seed index within the run
  EvalReport eval;
  EvalReport mean_baseline;  // constant training-mean predictor, same test set
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

struct Aggregate {
  std::string model;
  std::string imputation;
  double missing_rate = 0.0;
  std::size_t n = 0;
  double mae_mean = 0.0, mae_se = 0.0, mae_median = 0.0;
  double mse_mean = 0.0, mse_se = 0.0, mse_median = 0.0;
  double mape_mean = 0.0, mape_se = 0.0, mape_median = 0.0;
  double best_epoch_median = 0.0;
};

struct ResultsTable {
  std::vector<ResultRow> rows;  // sorted by (model, imputation, rate, segment, seed)

  /// One entry per (model, imputation, rate); standard error = sample
  /// standard deviation / sqrt(n).
  std::vector<Aggregate> aggregates() const;
};

struct LabeledReport {
  std::string label;
  TrainReport report;
};

struct RunOutput {
  ResultsTable table;
  std::vector<LabeledReport> curves;
  /// Trained GRU-D models keyed by curve label (only kept when requested).
  std::vector<std::pair<std::string, Model>> grud_models;
};

/// One prepared unit of data: a segment series and its seed index.
struct DataUnit {
  SegmentSeries series;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
};

std::vector<DataUnit> build_units(const ExperimentConfig& config);

/// Windows, splits and masks one unit at `rate`. The mask draw depends only
/// on the unit seed, so masks are nested across rates.
DatasetSplit prepare_unit(const ExperimentConfig& config, const DataUnit& unit, double rate);

/// Trains and evaluates one (model, rate, unit) job.
struct JobResult {
  ResultRow row;
  LabeledReport curve;
  Model model;
};
JobResult run_job(const ExperimentConfig& config, const ModelEntry& entry, double rate,
                  const DataUnit& unit);

/// Every (model, rate, unit) combination; runs `config.threads` jobs at a
/// time and returns rows in sorted order.
RunOutput run_benchmark(const ExperimentConfig& config, bool keep_grud_models = false);

/// run_benchmark over the sweep rates (default 0, 0.1, ..., 0.5).
/// Requires a GRU-D entry among the models.
RunOutput sweep_missing_rates(ExperimentConfig config);

/// (delta, gamma_x(delta)) for delta = 0, step, ..., delta_max using the
/// learned input-decay parameters.
std::vector<std::pair<double, std::vector<double>>> decay_curve(const Model& model,
                                                                double delta_max,
                                                                double step = 0.5);

void write_results_csv(std::ostream& out, const ResultsTable& table);
void write_aggregates_csv(std::ostream& out, const std::vector<Aggregate>& aggregates);
void write_decay_curve_csv(std::ostream& out,
                           const std::vector<std::pair<double, std::vector<double>>>& curve);
/// Long format `label,epoch,train_loss,val_loss`.
void export_loss_curves(std::ostream& out, const std::vector<LabeledReport>& reports);

nlohmann::json run_manifest(const std::string& command, const ExperimentConfig& config);

struct GradCheckRow {
  Variant variant;
  std::size_t draw = 0;
  GradCheckResult result;
};

/// Random (model, sample) draws for every variant. GRU-D draws get random
/// decay parameters and a random mask so both decay branches are exercised.
std::vector<GradCheckRow> gradcheck_suite(std::size_t draws, std::size_t input_dim,
                                          std::size_t hidden, std::size_t steps,
                                          std::uint64_t seed, double eps = 1e-5);

/// Random fully observed (or, with missing_rate > 0, masked) sample with
/// irregular timestamps; used by the gradient-check suite and tests.
TimeSeriesSample random_sample(Rng& rng, std::size_t steps, std::size_t dims,
                               double missing_rate);

/// Replaces every GRU-D decay parameter with N(0, stddev^2) draws.
void randomize_decay(Model& model, Rng& rng, double stddev);

}  // namespace grud
