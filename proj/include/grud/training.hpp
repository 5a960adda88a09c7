#pragma once
// Adam, the early-stopping training loop and held-out evaluation.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "grud/metrics.hpp"
#include "grud/missingness.hpp"
#include "grud/network.hpp"
#include "grud/timeseries.hpp"

namespace grud {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct AdamState {
  Model first_moment;
  Model second_moment;
  std::uint64_t step = 0;

  static AdamState for_model(const Model& model);
};

/// One bias-corrected Adam update of every trainable tensor, in place.
void adam_step(Model& params, const Grads& grads, AdamState& state, const TrainConfig& config);

struct TrainReport {
  std::vector<double> train_loss;  // mean per-sample loss, one per epoch
  std::vector<double> val_loss;    // validation MSE after each epoch
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;      // 1-based
};

struct TrainResult {
  Model model;  // parameters from the best validation epoch
  TrainReport report;
};

/// Per-sample Adam updates over a freshly shuffled training set each epoch,
/// stopping once validation MSE has not improved for `patience` epochs.
/// Training statistics come from splits.train and are stored in the model.
/// GRU-D must be trained with Imputation::None (it reads masks directly);
/// other variants need an imputation whenever the data has missing inputs.
TrainResult train(Model model, const DatasetSplit& splits, Imputation imputation,
                  const TrainConfig& config);

/// Applies `imputation` with the model's stored training statistics.
std::vector<TimeSeriesSample> prepare_inputs(const Model& model,
                                             std::span<const TimeSeriesSample> samples,
                                             Imputation imputation);

EvalReport evaluate(const Model& model, std::span<const TimeSeriesSample> test,
                    Imputation imputation);

/// `epoch,train_loss,val_loss` with a header row.
void write_report_csv(std::ostream& out, const TrainReport& report);

}  // namespace grud
