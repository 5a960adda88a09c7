#include "grud/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "grud/error.hpp"
#include "grud/format.hpp"
#include "grud/kernels.hpp"

namespace grud {
namespace {

// Stream tags for Rng::derive; fixed so outputs never depend on job order.
enum : std::uint64_t {
  kStreamSynth = 0x51,
  kStreamSplit = 0x52,
  kStreamMask = 0x53,
  kStreamInit = 0x54,
  kStreamTrain = 0x55,
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<double, double> mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

auto row_key(const ResultRow& r) {
  return std::tie(r.model, r.imputation, r.missing_rate, r.segment, r.seed);
}

std::string job_label(const ModelEntry& entry, double rate, const DataUnit& unit) {
  return entry.label() + "|rate=" + fmt_double(rate) + "|" + unit.series.segment_id +
         "|seed=" + std::to_string(unit.seed_index);
}

}  // namespace

std::string ModelEntry::label() const {
  std::string s(variant_name(variant));
  if (imputation != Imputation::None) s += "-" + std::string(imputation_name(imputation));
  return s;
}

void ExperimentConfig::validate() const {
  if (window == 0) throw ConfigError("config: window must be >= 1");
  if (models.empty()) throw ConfigError("config: model list is empty");
  if (missing_rates.empty()) throw ConfigError("config: missing_rates is empty");
  for (double r : missing_rates) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("config: missing rates must lie in [0, 1)");
  }
  if (n_seeds == 0) throw ConfigError("config: n_seeds must be >= 1");
  if (threads == 0) throw ConfigError("config: threads must be >= 1");
  if (!(decay_curve_max >= 0.0)) throw ConfigError("config: decay_curve_max must be >= 0");
  for (const auto& m : models) {
    if (m.variant == Variant::Grud && m.imputation != Imputation::None) {
      throw ConfigError("config: GRU-D entries take imputation 'none'");
    }
  }
  train.validate();
  if (!csv_path) synth.validate();
  for (const auto& m : models) model_spec(m.variant).validate();
}

ModelSpec ExperimentConfig::model_spec(Variant v) const {
  ModelSpec s;
  s.variant = v;
  s.input_dim = 1;
  s.hidden_size = hidden_size;
  s.recurrent_depth = v == Variant::Lstm ? lstm_depth : recurrent_depth;
  s.ffnn_hidden_layers = ffnn_hidden_layers;
  s.window = window;
  return s;
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : c.models) {
    models.push_back({{"variant", std::string(variant_name(m.variant))},
                      {"imputation", std::string(imputation_name(m.imputation))}});
  }
  j = nlohmann::json{{"window", c.window},
                     {"models", models},
                     {"missing_rates", c.missing_rates},
                     {"n_seeds", c.n_seeds},
                     {"seed", c.base_seed},
                     {"train", c.train},
                     {"hidden_size", c.hidden_size},
                     {"recurrent_depth", c.recurrent_depth},
                     {"lstm_depth", c.lstm_depth},
                     {"ffnn_hidden_layers", c.ffnn_hidden_layers},
                     {"decay_curve_max", c.decay_curve_max},
                     {"threads", c.threads},
                     {"out_dir", c.out_dir}};
  if (c.csv_path) {
    j["data"] = {{"csv", *c.csv_path}};
  } else {
    j["data"] = {{"synth", c.synth}};
  }
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  ExperimentConfig d;
  c = d;
  c.window = j.value("window", d.window);
  if (j.contains("models")) {
    if (j.at("models").empty()) throw ConfigError("config: model list is empty");
    c.models.clear();
    for (const auto& m : j.at("models")) {
      ModelEntry e;
      e.variant = parse_variant(m.at("variant").get<std::string>());
      e.imputation = parse_imputation(m.value("imputation", std::string("none")));
      c.models.push_back(e);
    }
  }
  c.missing_rates = j.value("missing_rates", d.missing_rates);
  c.n_seeds = j.value("n_seeds", d.n_seeds);
  c.base_seed = j.value("seed", d.base_seed);
  if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  c.hidden_size = j.value("hidden_size", d.hidden_size);
  c.recurrent_depth = j.value("recurrent_depth", d.recurrent_depth);
  c.lstm_depth = j.value("lstm_depth", d.lstm_depth);
  c.ffnn_hidden_layers = j.value("ffnn_hidden_layers", d.ffnn_hidden_layers);
  c.decay_curve_max = j.value("decay_curve_max", d.decay_curve_max);
  c.threads = j.value("threads", d.threads);
  c.out_dir = j.value("out_dir", d.out_dir);
  if (j.contains("data")) {
    const auto& data = j.at("data");
    if (data.contains("csv")) {
      c.csv_path = data.at("csv").get<std::string>();
    } else if (data.contains("synth")) {
      c.synth = data.at("synth").get<SynthConfig>();
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<double> default_sweep_rates() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}; }

std::vector<Aggregate> ResultsTable::aggregates() const {
  std::vector<Aggregate> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].model == rows[i].model &&
           rows[j].imputation == rows[i].imputation &&
           rows[j].missing_rate == rows[i].missing_rate) {
      ++j;
    }
    std::vector<double> mae, mse, mape, best;
    for (std::size_t k = i; k < j; ++k) {
      mae.push_back(rows[k].eval.mae);
      mse.push_back(rows[k].eval.mse);
      mape.push_back(rows[k].eval.mape_percent);
      best.push_back(static_cast<double>(rows[k].best_epoch));
    }
    Aggregate a;
    a.model = rows[i].model;
    a.imputation = rows[i].imputation;
    a.missing_rate = rows[i].missing_rate;
    a.n = j - i;
    std::tie(a.mae_mean, a.mae_se) = mean_se(mae);
    std::tie(a.mse_mean, a.mse_se) = mean_se(mse);
    std::tie(a.mape_mean, a.mape_se) = mean_se(mape);
    a.mae_median = median(mae);
    a.mse_median = median(mse);
    a.mape_median = median(mape);
    a.best_epoch_median = median(best);
    out.push_back(std::move(a));
    i = j;
  }
  return out;
}

std::vector<DataUnit> build_units(const ExperimentConfig& config) {
  std::vector<DataUnit> units;
  if (config.csv_path) {
    const auto segments = ingest_csv(*config.csv_path);
    for (const auto& [id, series] : segments) {
      for (std::size_t k = 0; k < config.n_seeds; ++k) {
        units.push_back({series, k, Rng::derive(config.base_seed ^ fnv1a(id), k)});
      }
    }
    return units;
  }
  for (std::size_t k = 0; k < config.n_seeds; ++k) {
    const std::uint64_t seed = Rng::derive(config.base_seed, k);
    SynthConfig synth = config.synth;
    synth.seed = Rng::derive(seed, kStreamSynth);
    SegmentSeries series = synthesize(synth);
    series.segment_id = "synth-" + std::to_string(k);
    units.push_back({std::move(series), k, seed});
  }
  return units;
}

DatasetSplit prepare_unit(const ExperimentConfig& config, const DataUnit& unit, double rate) {
  std::vector<TimeSeriesSample> samples = window(unit.series, config.window);
  const std::uint64_t mask_seed = Rng::derive(unit.seed, kStreamMask);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = inject_missing(samples[i], rate, Rng::derive(mask_seed, i));
  }
  return split(std::move(samples), Rng::derive(unit.seed, kStreamSplit));
}

JobResult run_job(const ExperimentConfig& config, const ModelEntry& entry, double rate,
                  const DataUnit& unit) {
  const DatasetSplit splits = prepare_unit(config, unit, rate);
  Model model = make_model(config.model_spec(entry.variant), Rng::derive(unit.seed, kStreamInit));
  TrainConfig tc = config.train;
  tc.seed = Rng::derive(Rng::derive(unit.seed, kStreamTrain), config.train.seed);
  TrainResult trained = train(std::move(model), splits, entry.imputation, tc);

  JobResult out;
  out.row.model = std::string(variant_name(entry.variant));
  out.row.imputation = std::string(imputation_name(entry.imputation));
  out.row.missing_rate = rate;
  out.row.segment = unit.series.segment_id;
  out.row.seed = unit.seed_index;
  out.row.eval = evaluate(trained.model, splits.test, entry.imputation);
  out.row.epochs_run = trained.report.epochs_run;
  out.row.best_epoch = trained.report.best_epoch;

  std::vector<double> y_true, y_mean;
  const double mean = trained.model.stats->empirical_mean.front();
  for (const auto& s : splits.test) {
    y_true.push_back(s.y);
    y_mean.push_back(mean);
  }
  out.row.mean_baseline = compute_metrics(y_true, y_mean);
  out.curve = {job_label(entry, rate, unit), std::move(trained.report)};
  out.model = std::move(trained.model);
  return out;
}

RunOutput run_benchmark(const ExperimentConfig& config, bool keep_grud_models) {
  config.validate();
  const std::vector<DataUnit> units = build_units(config);

  struct Job {
    const ModelEntry* entry;
    double rate;
    const DataUnit* unit;
  };
  std::vector<Job> jobs;
  for (const auto& entry : config.models)
    for (double rate : config.missing_rates)
      for (const auto& unit : units) jobs.push_back({&entry, rate, &unit});

  std::vector<std::optional<JobResult>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
      const Job& job = jobs[i];
      try {
        results[i] = run_job(config, *job.entry, job.rate, *job.unit);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(config.threads, jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i]) continue;
    const std::string where = "[" + job_label(*jobs[i].entry, jobs[i].rate, *jobs[i].unit) + "] ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), where + e.what());
    } catch (const std::exception& e) {
      throw Error("internal", where + e.what());
    }
  }

  RunOutput out;
  std::vector<std::size_t> order(jobs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return row_key(results[a]->row) < row_key(results[b]->row);
  });
  for (std::size_t i : order) {
    JobResult& r = *results[i];
    out.table.rows.push_back(r.row);
    if (keep_grud_models && r.model.spec.variant == Variant::Grud) {
      out.grud_models.emplace_back(r.curve.label, std::move(r.model));
    }
    out.curves.push_back(std::move(r.curve));
  }
  return out;
}

RunOutput sweep_missing_rates(ExperimentConfig config) {
  const bool has_grud = std::any_of(config.models.begin(), config.models.end(),
                                    [](const ModelEntry& m) { return m.variant == Variant::Grud; });
  if (!has_grud) throw ConfigError("sweep: the model list must include GRU-D");
  if (config.missing_rates.empty()) config.missing_rates = default_sweep_rates();
  return run_benchmark(config);
}

std::vector<std::pair<double, std::vector<double>>> decay_curve(const Model& model,
                                                                double delta_max,
                                                                double step) {
  if (model.spec.variant != Variant::Grud || !model.grud) {
    throw ConfigError("decay curve: model variant is " +
                      std::string(variant_name(model.spec.variant)) + ", expected GRU-D");
  }
  if (!(step > 0.0) || !(delta_max >= 0.0)) {
    throw ConfigError("decay curve: need step > 0 and delta_max >= 0");
  }
  const GrudParams& p = *model.grud;
  std::vector<std::pair<double, std::vector<double>>> curve;
  const auto n = static_cast<std::size_t>(std::floor(delta_max / step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    const double delta = static_cast<double>(k) * step;
    const Vec gamma = decay_rate(p.w_gx, p.b_gx, Vec(p.input_dim(), delta));
    curve.emplace_back(delta, gamma.raw());
  }
  return curve;
}

void write_results_csv(std::ostream& out, const ResultsTable& table) {
  out << "model,imputation,missing_rate,segment,seed,mae,mse,mape,epochs_run,best_epoch,"
         "mean_mae,mean_mse,mean_mape\n";
  for (const auto& r : table.rows) {
    out << r.model << ',' << r.imputation << ',' << fmt_double(r.missing_rate) << ','
        << r.segment << ',' << r.seed << ',' << fmt_double(r.eval.mae) << ','
        << fmt_double(r.eval.mse) << ',' << fmt_double(r.eval.mape_percent) << ','
        << r.epochs_run << ',' << r.best_epoch << ',' << fmt_double(r.mean_baseline.mae)
        << ',' << fmt_double(r.mean_baseline.mse) << ','
        << fmt_double(r.mean_baseline.mape_percent) << '\n';
  }
}

void write_aggregates_csv(std::ostream& out, const std::vector<Aggregate>& aggregates) {
  out << "model,imputation,missing_rate,n,mae_mean,mae_se,mae_median,mse_mean,mse_se,"
         "mse_median,mape_mean,mape_se,mape_median,best_epoch_median\n";
  for (const auto& a : aggregates) {
    out << a.model << ',' << a.imputation << ',' << fmt_double(a.missing_rate) << ',' << a.n
        << ',' << fmt_double(a.mae_mean) << ',' << fmt_double(a.mae_se) << ','
        << fmt_double(a.mae_median) << ',' << fmt_double(a.mse_mean) << ','
        << fmt_double(a.mse_se) << ',' << fmt_double(a.mse_median) << ','
        << fmt_double(a.mape_mean) << ',' << fmt_double(a.mape_se) << ','
        << fmt_double(a.mape_median) << ',' << fmt_double(a.best_epoch_median) << '\n';
  }
}

void write_decay_curve_csv(std::ostream& out,
                           const std::vector<std::pair<double, std::vector<double>>>& curve) {
  const std::size_t dims = curve.empty() ? 1 : curve.front().second.size();
  out << "delta";
  for (std::size_t d = 0; d < dims; ++d) {
    out << ",gamma_x";
    if (dims > 1) out << d;
  }
  out << '\n';
  for (const auto& [delta, gamma] : curve) {
    out << fmt_double(delta);
    for (double g : gamma) out << ',' << fmt_double(g);
    out << '\n';
  }
}

void export_loss_curves(std::ostream& out, const std::vector<LabeledReport>& reports) {
  out << "label,epoch,train_loss,val_loss\n";
  for (const auto& [label, report] : reports) {
    for (std::size_t e = 0; e < report.train_loss.size(); ++e) {
      out << label << ',' << (e + 1) << ',' << fmt_double(report.train_loss[e]) << ','
          << fmt_double(report.val_loss[e]) << '\n';
    }
  }
}

nlohmann::json run_manifest(const std::string& command, const ExperimentConfig& config) {
  return nlohmann::json{{"tool", "grud"},
                        {"manifest_version", 1},
                        {"command", command},
                        {"kernel_backend", kernels::active().name},
                        {"config", config}};
}

TimeSeriesSample random_sample(Rng& rng, std::size_t steps, std::size_t dims,
                               double missing_rate) {
  TimeSeriesSample s;
  s.steps = steps;
  s.dims = dims;
  double t = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    s.s.push_back(t);
    t += 0.5 + 2.5 * rng.uniform();
  }
  for (std::size_t i = 0; i < steps * dims; ++i) s.x.push_back(rng.uniform());
  s.m.assign(steps * dims, 1.0);
  for (std::size_t i = 0; i < steps * dims; ++i) {
    if (missing_rate > 0.0 && rng.uniform() < missing_rate) {
      s.m[i] = 0.0;
      s.x[i] = kMissing;
    }
  }
  s.delta.assign(steps * dims, 0.0);
  std::vector<double> m(steps);
  for (std::size_t d = 0; d < dims; ++d) {
    for (std::size_t i = 0; i < steps; ++i) m[i] = s.m[i * dims + d];
    const auto delta = compute_intervals(s.s, m);
    for (std::size_t i = 0; i < steps; ++i) s.delta[i * dims + d] = delta[i];
  }
  s.y = rng.uniform();
  return s;
}

void randomize_decay(Model& model, Rng& rng, double stddev) {
  if (!model.grud) return;
  GrudParams& p = *model.grud;
  for (std::size_t r = 0; r < p.w_gx.rows(); ++r) {
    for (std::size_t c = 0; c < p.w_gx.cols(); ++c) {
      p.w_gx(r, c) = (p.diagonal_input_decay && r != c) ? 0.0 : stddev * rng.normal();
    }
  }
  for (double& v : p.b_gx) v = stddev * rng.normal();
  for (double& v : p.w_gh.values()) v = stddev * rng.normal();
  for (double& v : p.b_gh) v = stddev * rng.normal();
}

std::vector<GradCheckRow> gradcheck_suite(std::size_t draws, std::size_t input_dim,
                                          std::size_t hidden, std::size_t steps,
                                          std::uint64_t seed, double eps) {
  std::vector<GradCheckRow> rows;
  const Variant variants[] = {Variant::Gru, Variant::Grud, Variant::Lstm, Variant::Ffnn};
  for (std::size_t v = 0; v < 4; ++v) {
    ModelSpec spec;
    spec.variant = variants[v];
    spec.input_dim = input_dim;
    spec.hidden_size = hidden;
    spec.recurrent_depth = spec.variant == Variant::Lstm ? 2 : 1;
    spec.window = steps;
    for (std::size_t k = 0; k < draws; ++k) {
      Rng rng(Rng::derive(seed, v * 100000 + k));
      Model model = make_model(spec, rng);
      // Nonzero biases so every gate sits away from its symmetric point.
      model.visit([&](std::string_view, std::string_view name, std::span<double> t) {
        if (name.starts_with("b")) {
          for (double& x : t) x = 0.3 * rng.normal();
        }
      });
      randomize_decay(model, rng, 0.5);
      TrainStats stats;
      for (std::size_t d = 0; d < input_dim; ++d) {
        stats.empirical_mean.push_back(rng.uniform());
        stats.max_interval.push_back(10.0);
      }
      model.set_stats(stats);
      const double missing = spec.variant == Variant::Grud ? 0.5 : 0.0;
      const TimeSeriesSample sample = random_sample(rng, steps, input_dim, missing);
      rows.push_back({spec.variant, k, gradient_check(model, sample, eps)});
    }
  }
  return rows;
}

}  // namespace grud
