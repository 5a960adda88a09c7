#include "grud/network.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "grud/error.hpp"

namespace grud {
namespace {

constexpr const char* kFormat = "grud-model";
constexpr int kFormatVersion = 1;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void require_sample_shape(const Model& model, const TimeSeriesSample& sample) {
  const ModelSpec& spec = model.spec;
  if (sample.dims != spec.input_dim) {
    throw DimensionError("forward: sample has " + std::to_string(sample.dims) +
                         " variables, model expects " + std::to_string(spec.input_dim));
  }
  if (sample.steps == 0) throw DimensionError("forward: empty sample");
  if (spec.variant == Variant::Ffnn && sample.steps != spec.window) {
    throw DimensionError("forward: feed-forward model expects windows of " +
                         std::to_string(spec.window) + " steps, got " +
                         std::to_string(sample.steps));
  }
  if (spec.variant != Variant::Grud && sample.has_sentinels()) {
    throw DataError("forward: unimputed missing value reached a " +
                    std::string(variant_name(spec.variant)) + " model");
  }
}

// Runs GRU layers [first, end) over a sequence of inputs.
void run_gru_layers(const Model& model, std::vector<Vec> inputs, SequenceTrace& trace) {
  const std::size_t hidden = model.spec.hidden_size;
  for (const GruParams& layer : model.gru) {
    std::vector<GruCache> caches;
    caches.reserve(inputs.size());
    Vec h(hidden);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      caches.push_back(gru_step(layer, inputs[t], h));
      h = caches.back().h;
      inputs[t] = h;
    }
    trace.gru.push_back(std::move(caches));
  }
  trace.final_hidden = inputs.back();
}

double apply_head(const Model& model, SequenceTrace& trace) {
  trace.head = dense_step(model.head, trace.final_hidden);
  trace.prediction = trace.head.y[0];
  return trace.prediction;
}

// Backprop through stacked GRU layers. `top_grads[t]` is the gradient on the
// top layer's output at step t; on return it holds the gradient on the input
// of the lowest GRU layer.
void backward_gru_layers(const Model& model, const SequenceTrace& trace,
                         std::vector<Vec>& step_grads, Grads& grads) {
  const std::size_t hidden = model.spec.hidden_size;
  for (std::size_t l = model.gru.size(); l-- > 0;) {
    const auto& caches = trace.gru[l];
    Vec carry(hidden);
    for (std::size_t t = caches.size(); t-- > 0;) {
      axpy(1.0, step_grads[t], carry);
      GruStepGrad g = step_backward(model.gru[l], caches[t], carry, grads.gru[l]);
      carry = std::move(g.h_prev);
      step_grads[t] = std::move(g.x);
    }
  }
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Gru:
      return "GRU";
    case Variant::Grud:
      return "GRU-D";
    case Variant::Lstm:
      return "LSTM";
    case Variant::Ffnn:
      return "FFNN";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  const std::string n = lowercase(name);
  if (n == "gru") return Variant::Gru;
  if (n == "gru-d" || n == "grud") return Variant::Grud;
  if (n == "lstm") return Variant::Lstm;
  if (n == "ffnn" || n == "mlp") return Variant::Ffnn;
  throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (input_dim == 0 || hidden_size == 0) {
    throw ConfigError("model: input_dim and hidden_size must be >= 1");
  }
  if (recurrent_depth == 0) throw ConfigError("model: recurrent_depth must be >= 1");
  if (variant == Variant::Ffnn && (ffnn_hidden_layers == 0 || window == 0)) {
    throw ConfigError("model: feed-forward model needs >= 1 hidden layer and window >= 1");
  }
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  visit([&](std::string_view, std::string_view, std::span<const double> t) { n += t.size(); });
  return n;
}

void Model::set_stats(const TrainStats& s) {
  if (s.empirical_mean.size() != spec.input_dim) {
    throw DimensionError("set_stats: statistics cover " +
                         std::to_string(s.empirical_mean.size()) + " variables, model has " +
                         std::to_string(spec.input_dim));
  }
  stats = s;
  if (grud) grud->x_mean = Vec(s.empirical_mean);
}

Model make_model(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  Model m;
  m.spec = spec;
  const std::size_t d = spec.input_dim;
  const std::size_t h = spec.hidden_size;
  switch (spec.variant) {
    case Variant::Gru:
      for (std::size_t l = 0; l < spec.recurrent_depth; ++l)
        m.gru.push_back(init_gru(l == 0 ? d : h, h, rng));
      break;
    case Variant::Grud:
      m.grud = init_grud(d, h, rng);
      for (std::size_t l = 1; l < spec.recurrent_depth; ++l) m.gru.push_back(init_gru(h, h, rng));
      break;
    case Variant::Lstm:
      for (std::size_t l = 0; l < spec.recurrent_depth; ++l)
        m.lstm.push_back(init_lstm(l == 0 ? d : h, h, rng));
      break;
    case Variant::Ffnn:
      for (std::size_t l = 0; l < spec.ffnn_hidden_layers; ++l)
        m.dense.push_back(init_dense(l == 0 ? d * spec.window : h, h, Activation::Tanh, rng));
      break;
  }
  m.head = init_dense(h, 1, Activation::Identity, rng);
  return m;
}

Model make_model(const ModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return make_model(spec, rng);
}

Grads zero_grads(const Model& model) {
  Grads g = model;
  g.visit([](std::string_view, std::string_view, std::span<double> t) {
    std::fill(t.begin(), t.end(), 0.0);
  });
  return g;
}

std::vector<std::span<double>> tensors(Model& model) {
  std::vector<std::span<double>> out;
  model.visit([&](std::string_view, std::string_view, std::span<double> t) { out.push_back(t); });
  return out;
}

std::vector<std::span<const double>> tensors(const Model& model) {
  std::vector<std::span<const double>> out;
  model.visit(
      [&](std::string_view, std::string_view, std::span<const double> t) { out.push_back(t); });
  return out;
}

SequenceTrace forward(const Model& model, const TimeSeriesSample& sample) {
  require_sample_shape(model, sample);
  const ModelSpec& spec = model.spec;
  const std::size_t hidden = spec.hidden_size;
  const std::size_t steps = sample.steps;
  SequenceTrace trace;

  switch (spec.variant) {
    case Variant::Gru: {
      std::vector<Vec> inputs;
      inputs.reserve(steps);
      for (std::size_t t = 0; t < steps; ++t) inputs.push_back(sample.values_at(t));
      run_gru_layers(model, std::move(inputs), trace);
      break;
    }
    case Variant::Grud: {
      const GrudParams& p = *model.grud;
      Vec h(hidden);
      Vec x_last = p.x_mean;
      std::vector<Vec> outputs;
      outputs.reserve(steps);
      trace.grud.reserve(steps);
      for (std::size_t t = 0; t < steps; ++t) {
        const Vec x = sample.values_at(t);
        const Vec m = sample.mask_at(t);
        trace.grud.push_back(grud_step(p, x, m, sample.delta_at(t), x_last, h));
        h = trace.grud.back().core.h;
        for (std::size_t d = 0; d < x.size(); ++d) {
          if (m[d] == 1.0) x_last[d] = x[d];
        }
        outputs.push_back(h);
      }
      run_gru_layers(model, std::move(outputs), trace);
      break;
    }
    case Variant::Lstm: {
      std::vector<Vec> inputs;
      inputs.reserve(steps);
      for (std::size_t t = 0; t < steps; ++t) inputs.push_back(sample.values_at(t));
      for (const LstmParams& layer : model.lstm) {
        std::vector<LstmCache> caches;
        caches.reserve(steps);
        Vec h(hidden), c(hidden);
        for (std::size_t t = 0; t < steps; ++t) {
          caches.push_back(lstm_step(layer, inputs[t], h, c));
          h = caches.back().h;
          c = caches.back().c;
          inputs[t] = h;
        }
        trace.lstm.push_back(std::move(caches));
      }
      trace.final_hidden = inputs.back();
      break;
    }
    case Variant::Ffnn: {
      Vec a(sample.x);
      for (const DenseParams& layer : model.dense) {
        trace.dense.push_back(dense_step(layer, a));
        a = trace.dense.back().y;
      }
      trace.final_hidden = std::move(a);
      break;
    }
  }
  apply_head(model, trace);
  return trace;
}

double predict(const Model& model, const TimeSeriesSample& sample) {
  return forward(model, sample).prediction;
}

double loss_mse(double prediction, double target) {
  const double e = prediction - target;
  return e * e;
}

Grads backward(const Model& model, const SequenceTrace& trace, double target) {
  Grads g = zero_grads(model);
  backward_into(model, trace, target, g);
  return g;
}

void backward_into(const Model& model, const SequenceTrace& trace, double target,
                   Grads& grads) {
  const ModelSpec& spec = model.spec;
  const std::size_t hidden = spec.hidden_size;
  const bool shapes_match =
      trace.grud.empty() == !model.grud && trace.gru.size() == model.gru.size() &&
      trace.lstm.size() == model.lstm.size() && trace.dense.size() == model.dense.size() &&
      trace.final_hidden.size() == model.head.w.cols();
  if (!shapes_match) throw DimensionError("backward: trace does not match model");

  const Vec d_pred{2.0 * (trace.prediction - target)};
  Vec grad_top = step_backward(model.head, trace.head, d_pred, grads.head);

  switch (spec.variant) {
    case Variant::Ffnn: {
      for (std::size_t l = model.dense.size(); l-- > 0;) {
        grad_top = step_backward(model.dense[l], trace.dense[l], grad_top, grads.dense[l]);
      }
      return;
    }
    case Variant::Lstm: {
      const std::size_t steps = trace.lstm.front().size();
      std::vector<Vec> step_grads(steps, Vec(hidden));
      step_grads.back() = grad_top;
      for (std::size_t l = model.lstm.size(); l-- > 0;) {
        Vec carry_h(hidden), carry_c(hidden);
        for (std::size_t t = steps; t-- > 0;) {
          axpy(1.0, step_grads[t], carry_h);
          LstmStepGrad g = step_backward(model.lstm[l], trace.lstm[l][t], carry_h, carry_c,
                                         grads.lstm[l]);
          carry_h = std::move(g.h_prev);
          carry_c = std::move(g.c_prev);
          step_grads[t] = std::move(g.x);
        }
      }
      return;
    }
    case Variant::Gru:
    case Variant::Grud: {
      const std::size_t steps =
          spec.variant == Variant::Grud ? trace.grud.size() : trace.gru.front().size();
      std::vector<Vec> step_grads(steps, Vec(hidden));
      step_grads.back() = grad_top;
      backward_gru_layers(model, trace, step_grads, grads);
      if (spec.variant == Variant::Grud) {
        Vec carry(hidden);
        for (std::size_t t = steps; t-- > 0;) {
          axpy(1.0, step_grads[t], carry);
          carry = step_backward(*model.grud, trace.grud[t], carry, *grads.grud).h_prev;
        }
      }
      return;
    }
  }
}

namespace {

std::vector<double> decay_preactivations(const SequenceTrace& trace) {
  std::vector<double> out;
  for (const GrudCache& c : trace.grud) {
    out.insert(out.end(), c.pre_gx.begin(), c.pre_gx.end());
    out.insert(out.end(), c.pre_gh.begin(), c.pre_gh.end());
  }
  return out;
}

bool crosses_kink(const std::vector<double>& base, const std::vector<double>& other) {
  for (std::size_t i = 0; i < base.size(); ++i) {
    if ((base[i] > 0.0) != (other[i] > 0.0)) return true;
  }
  return false;
}

}  // namespace

GradCheckResult gradient_check(const Model& model, const TimeSeriesSample& sample,
                               double eps) {
  if (!(eps > 0.0)) throw ConfigError("gradient_check: eps must be > 0");
  const SequenceTrace base = forward(model, sample);
  const Grads analytic = backward(model, base, sample.y);
  const std::vector<double> base_pre = decay_preactivations(base);

  std::vector<std::pair<std::string, std::span<const double>>> grad_tensors;
  analytic.visit([&](std::string_view layer, std::string_view name,
                     std::span<const double> t) {
    grad_tensors.emplace_back(std::string(layer) + "." + std::string(name), t);
  });

  Model probe = model;
  const auto params = tensors(probe);
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      double& w = params[k][i];
      const double saved = w;
      w = saved + eps;
      const SequenceTrace plus = forward(probe, sample);
      w = saved - eps;
      const SequenceTrace minus = forward(probe, sample);
      w = saved;
      if (crosses_kink(base_pre, decay_preactivations(plus)) ||
          crosses_kink(base_pre, decay_preactivations(minus))) {
        ++result.skipped_at_kink;
        continue;
      }
      const double numeric =
          (loss_mse(plus.prediction, sample.y) - loss_mse(minus.prediction, sample.y)) /
          (2.0 * eps);
      const double a = grad_tensors[k].second[i];
      const double diff = std::abs(a - numeric);
      const double rel =
          diff <= kGradCheckAbsFloor ? 0.0 : diff / std::max(std::abs(a), std::abs(numeric));
      ++result.checked;
      result.max_absolute_error = std::max(result.max_absolute_error, diff);
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = grad_tensors[k].first + "[" + std::to_string(i) + "]";
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = nlohmann::json{{"variant", std::string(variant_name(s.variant))},
                     {"input_dim", s.input_dim},
                     {"hidden_size", s.hidden_size},
                     {"recurrent_depth", s.recurrent_depth},
                     {"ffnn_hidden_layers", s.ffnn_hidden_layers},
                     {"window", s.window}};
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
  ModelSpec d;
  s.variant = parse_variant(j.value("variant", std::string(variant_name(d.variant))));
  s.input_dim = j.value("input_dim", d.input_dim);
  s.hidden_size = j.value("hidden_size", d.hidden_size);
  s.recurrent_depth = j.value("recurrent_depth", d.recurrent_depth);
  s.ffnn_hidden_layers = j.value("ffnn_hidden_layers", d.ffnn_hidden_layers);
  s.window = j.value("window", d.window);
}

nlohmann::json model_to_json(const Model& model) {
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["version"] = kFormatVersion;
  doc["spec"] = model.spec;
  nlohmann::json params = nlohmann::json::object();
  model.visit([&](std::string_view layer, std::string_view name, std::span<const double> t) {
    params[std::string(layer) + "." + std::string(name)] = std::vector<double>(t.begin(), t.end());
  });
  doc["parameters"] = std::move(params);
  if (model.grud) {
    doc["grud"] = {{"x_mean", model.grud->x_mean.raw()},
                   {"diagonal_input_decay", model.grud->diagonal_input_decay}};
  }
  if (model.stats) {
    doc["train_stats"] = {{"empirical_mean", model.stats->empirical_mean},
                          {"max_interval", model.stats->max_interval}};
  } else {
    doc["train_stats"] = nullptr;
  }
  return doc;
}

Model model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string()) != kFormat) {
      throw DataError("model document: unrecognised format tag");
    }
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion) {
      throw DataError("model document: unsupported version " + std::to_string(version));
    }
    const ModelSpec spec = doc.at("spec").get<ModelSpec>();
    Model model = make_model(spec, std::uint64_t{0});
    const auto& params = doc.at("parameters");
    model.visit([&](std::string_view layer, std::string_view name, std::span<double> t) {
      const std::string key = std::string(layer) + "." + std::string(name);
      const auto values = params.at(key).get<std::vector<double>>();
      if (values.size() != t.size()) {
        throw DataError("model document: tensor " + key + " has " +
                        std::to_string(values.size()) + " values, expected " +
                        std::to_string(t.size()));
      }
      std::copy(values.begin(), values.end(), t.begin());
    });
    if (model.grud) {
      const auto& g = doc.at("grud");
      model.grud->x_mean = Vec(g.at("x_mean").get<std::vector<double>>());
      model.grud->diagonal_input_decay = g.at("diagonal_input_decay").get<bool>();
    }
    if (doc.contains("train_stats") && !doc["train_stats"].is_null()) {
      TrainStats s;
      s.empirical_mean = doc["train_stats"].at("empirical_mean").get<std::vector<double>>();
      s.max_interval = doc["train_stats"].at("max_interval").get<std::vector<double>>();
      model.stats = std::move(s);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model document: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(model).dump(1) << '\n';
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace grud
