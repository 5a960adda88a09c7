#include "grud/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "grud/error.hpp"
#include "grud/format.hpp"
#include "grud/kernels.hpp"

namespace grud {
namespace {

bool any_missing(std::span<const TimeSeriesSample> samples) {
  for (const auto& s : samples) {
    if (!s.fully_observed()) return true;
  }
  return false;
}

double mean_loss(const Model& model, std::span<const TimeSeriesSample> samples) {
  double sum = 0.0;
  for (const auto& s : samples) sum += loss_mse(predict(model, s), s.y);
  return sum / static_cast<double>(samples.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: beta1 and beta2 must lie in (0, 1)");
  }
  if (!(eps_adam > 0.0)) throw ConfigError("train: eps_adam must be > 0");
  if (max_epochs == 0 || patience == 0) {
    throw ConfigError("train: max_epochs and patience must be >= 1");
  }
  if (patience >= max_epochs) throw ConfigError("train: patience must be < max_epochs");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1},
                     {"beta2", c.beta2},                 {"eps_adam", c.eps_adam},
                     {"max_epochs", c.max_epochs},       {"patience", c.patience},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.beta1 = j.value("beta1", d.beta1);
  c.beta2 = j.value("beta2", d.beta2);
  c.eps_adam = j.value("eps_adam", d.eps_adam);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.patience = j.value("patience", d.patience);
  c.seed = j.value("seed", d.seed);
}

AdamState AdamState::for_model(const Model& model) {
  return AdamState{zero_grads(model), zero_grads(model), 0};
}

void adam_step(Model& params, const Grads& grads, AdamState& state, const TrainConfig& config) {
  const auto p = tensors(params);
  const auto g = tensors(grads);
  const auto m = tensors(state.first_moment);
  const auto v = tensors(state.second_moment);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw DimensionError("adam_step: gradient/state tensors do not match parameters");
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k].size() != p[k].size() || m[k].size() != p[k].size() ||
        v[k].size() != p[k].size()) {
      throw DimensionError("adam_step: tensor " + std::to_string(k) + " shape mismatch");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  const auto& kern = kernels::active();
  for (std::size_t k = 0; k < p.size(); ++k) {
    kern.adam(p[k].data(), g[k].data(), m[k].data(), v[k].data(), p[k].size(),
              config.learning_rate, config.beta1, config.beta2, config.eps_adam, c1, c2);
  }
  // Off-diagonal input-decay weights stay pinned at zero.
  if (params.grud && params.grud->diagonal_input_decay) {
    Mat& w = params.grud->w_gx;
    for (std::size_t r = 0; r < w.rows(); ++r)
      for (std::size_t c = 0; c < w.cols(); ++c)
        if (r != c) w(r, c) = 0.0;
  }
}

std::vector<TimeSeriesSample> prepare_inputs(const Model& model,
                                             std::span<const TimeSeriesSample> samples,
                                             Imputation imputation) {
  if (model.spec.variant == Variant::Grud || imputation == Imputation::None) {
    if (model.spec.variant != Variant::Grud && any_missing(samples)) {
      throw ConfigError(std::string(variant_name(model.spec.variant)) +
                        " needs an imputation method for data with missing values");
    }
    return {samples.begin(), samples.end()};
  }
  if (!model.stats) throw DataError("imputation requested but the model has no training statistics");
  std::vector<TimeSeriesSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(impute(s, imputation, *model.stats));
  return out;
}

TrainResult train(Model model, const DatasetSplit& splits, Imputation imputation,
                  const TrainConfig& config) {
  config.validate();
  if (splits.train.empty() || splits.validation.empty()) {
    throw DataError("train: training and validation sets must be non-empty");
  }
  if (model.spec.variant == Variant::Grud && imputation != Imputation::None) {
    throw ConfigError("train: GRU-D reads masks and intervals directly; use imputation 'none'");
  }
  model.set_stats(empirical_mean(splits.train));
  const auto train_set = prepare_inputs(model, splits.train, imputation);
  const auto val_set = prepare_inputs(model, splits.validation, imputation);

  AdamState adam = AdamState::for_model(model);
  Grads grads = zero_grads(model);
  const auto grad_tensors = tensors(grads);

  TrainResult result{model, {}};
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_set.size());

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(Rng::derive(config.seed, epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const TimeSeriesSample& s = train_set[idx];
      const SequenceTrace trace = forward(model, s);
      loss_sum += loss_mse(trace.prediction, s.y);
      for (auto t : grad_tensors) std::fill(t.begin(), t.end(), 0.0);
      backward_into(model, trace, s.y, grads);
      adam_step(model, grads, adam, config);
    }
    const double train_loss = loss_sum / static_cast<double>(train_set.size());
    const double val_loss = mean_loss(model, val_set);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw TrainingError("train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
    }
    result.report.train_loss.push_back(train_loss);
    result.report.val_loss.push_back(val_loss);
    result.report.epochs_run = epoch;
    if (val_loss < best_val) {
      best_val = val_loss;
      result.report.best_epoch = epoch;
      result.model = model;
    } else if (epoch - result.report.best_epoch >= config.patience) {
      break;
    }
  }
  return result;
}

EvalReport evaluate(const Model& model, std::span<const TimeSeriesSample> test,
                    Imputation imputation) {
  if (test.empty()) throw DataError("evaluate: empty test set");
  const auto inputs = prepare_inputs(model, test, imputation);
  std::vector<double> y_true, y_pred;
  y_true.reserve(inputs.size());
  y_pred.reserve(inputs.size());
  for (const auto& s : inputs) {
    y_true.push_back(s.y);
    y_pred.push_back(predict(model, s));
  }
  return compute_metrics(y_true, y_pred);
}

void write_report_csv(std::ostream& out, const TrainReport& report) {
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
    out << (e + 1) << ',' << fmt_double(report.train_loss[e]) << ','
        << fmt_double(report.val_loss[e]) << '\n';
  }
}

}  // namespace grud
