#pragma once
// Sequence models assembled from the cells, with a linear regression head,
// squared-error loss, exact backpropagation through time, a finite
// difference gradient checker, and JSON persistence.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grud/cells.hpp"
#include "grud/missingness.hpp"
#include "grud/sample.hpp"

namespace grud {

enum class Variant { Gru, Grud, Lstm, Ffnn };

std::string_view variant_name(Variant v);
/// Accepts "gru", "gru-d" (or "grud"), "lstm", "ffnn" (case-insensitive).
Variant parse_variant(std::string_view name);

struct ModelSpec {
  Variant variant = Variant::Gru;
  std::size_t input_dim = 1;
  std::size_t hidden_size = 16;
  std::size_t recurrent_depth = 1;
  std::size_t ffnn_hidden_layers = 2;
  std::size_t window = 7;  // input steps; fixes the FFNN input width

  void validate() const;
};

/// For GRU-D the first recurrent layer is a GRU-D cell and any further
/// layers are plain GRU cells fed by the layer below.
struct Model {
  ModelSpec spec;
  std::optional<GrudParams> grud;
  std::vector<GruParams> gru;
  std::vector<LstmParams> lstm;
  std::vector<DenseParams> dense;  // FFNN hidden layers
  DenseParams head;                // 1 x H, identity activation
  std::optional<TrainStats> stats; // set by training

  /// f(layer, tensor, span) over every trainable tensor in a fixed order.
  template <class F>
  void visit(F&& f) { visit_impl(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_impl(*this, f); }

  std::size_t parameter_count() const;

  /// Sets the training statistics and, for GRU-D, the frozen input mean.
  void set_stats(const TrainStats& s);

 private:
  template <class Self, class F>
  static void visit_impl(Self& m, F& f) {
    if (m.grud) {
      m.grud->visit([&](std::string_view name, auto span) { f("grud", name, span); });
    }
    for (std::size_t l = 0; l < m.gru.size(); ++l) {
      const std::string layer = "gru" + std::to_string(l);
      m.gru[l].visit([&](std::string_view name, auto span) { f(layer, name, span); });
    }
    for (std::size_t l = 0; l < m.lstm.size(); ++l) {
      const std::string layer = "lstm" + std::to_string(l);
      m.lstm[l].visit([&](std::string_view name, auto span) { f(layer, name, span); });
    }
    for (std::size_t l = 0; l < m.dense.size(); ++l) {
      const std::string layer = "dense" + std::to_string(l);
      m.dense[l].visit([&](std::string_view name, auto span) { f(layer, name, span); });
    }
    m.head.visit([&](std::string_view name, auto span) { f("head", name, span); });
  }
};

/// Gradient accumulator: a model of identical shape.
using Grads = Model;

Model make_model(const ModelSpec& spec, Rng& rng);
Model make_model(const ModelSpec& spec, std::uint64_t seed);
Grads zero_grads(const Model& model);

/// Flat list of trainable tensors, in visit() order.
std::vector<std::span<double>> tensors(Model& model);
std::vector<std::span<const double>> tensors(const Model& model);

struct SequenceTrace {
  std::vector<GrudCache> grud;                 // [step]
  std::vector<std::vector<GruCache>> gru;      // [layer][step]
  std::vector<std::vector<LstmCache>> lstm;    // [layer][step]
  std::vector<DenseCache> dense;               // [layer]
  DenseCache head;
  Vec final_hidden;
  double prediction = 0.0;
};

/// Unrolls the model over the sample from zero initial state. GRU-D reads
/// the raw mask and intervals; every other variant rejects NaN inputs.
SequenceTrace forward(const Model& model, const TimeSeriesSample& sample);
double predict(const Model& model, const TimeSeriesSample& sample);

double loss_mse(double prediction, double target);

/// Exact gradient of loss_mse(trace.prediction, target) for every parameter.
Grads backward(const Model& model, const SequenceTrace& trace, double target);
/// Same, accumulated into an existing gradient model.
void backward_into(const Model& model, const SequenceTrace& trace, double target,
                   Grads& grads);

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_at_kink = 0;
  std::string worst_tensor;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

inline constexpr double kGradCheckAbsFloor = 1e-8;

/// Central differences over every parameter scalar against backward().
/// Relative error is |a - n| / max(|a|, |n|); discrepancies at or below
/// kGradCheckAbsFloor count as agreement, since central-difference roundoff
/// alone reaches ~1e-12 at eps = 1e-5. Scalars whose +/-eps perturbation
/// moves any decay pre-activation across zero are skipped.
GradCheckResult gradient_check(const Model& model, const TimeSeriesSample& sample,
                               double eps = 1e-5);

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace grud
