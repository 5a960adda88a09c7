#include "grud/missingness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "grud/error.hpp"

namespace grud {

std::string_view imputation_name(Imputation method) {
  switch (method) {
    case Imputation::None:
      return "none";
    case Imputation::Average:
      return "average";
    case Imputation::Last:
      return "last";
    case Imputation::Simple:
      return "simple";
  }
  return "none";
}

Imputation parse_imputation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Imputation m : {Imputation::None, Imputation::Average, Imputation::Last,
                       Imputation::Simple}) {
    if (imputation_name(m) == lower) return m;
  }
  throw ConfigError("unknown imputation method '" + std::string(name) + "'");
}

std::vector<double> compute_mask(std::span<const double> values) {
  std::vector<double> m(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m[i] = std::isnan(values[i]) ? 0.0 : 1.0;
  return m;
}

std::vector<double> compute_intervals(std::span<const double> s,
                                      std::span<const double> m) {
  if (s.size() != m.size()) {
    throw DimensionError("compute_intervals: " + std::to_string(s.size()) +
                         " timestamps vs " + std::to_string(m.size()) +
                         " mask entries");
  }
  std::vector<double> delta(s.size(), 0.0);
  for (std::size_t t = 1; t < s.size(); ++t) {
    const double gap = s[t] - s[t - 1];
    if (!(gap > 0.0)) {
      throw DataError("compute_intervals: timestamps not strictly increasing at step " +
                      std::to_string(t));
    }
    delta[t] = m[t - 1] == 1.0 ? gap : gap + delta[t - 1];
  }
  return delta;
}

TrainStats empirical_mean(std::span<const TimeSeriesSample> training) {
  if (training.empty()) throw DataError("empirical_mean: no training samples");
  const std::size_t dims = training.front().dims;
  std::vector<double> sum(dims, 0.0);
  std::vector<double> count(dims, 0.0);
  std::vector<double> max_interval(dims, 0.0);
  for (const auto& sample : training) {
    if (sample.dims != dims) throw DimensionError("empirical_mean: mixed input dims");
    for (std::size_t t = 0; t < sample.steps; ++t) {
      for (std::size_t d = 0; d < dims; ++d) {
        const std::size_t i = sample.index(t, d);
        if (sample.m[i] == 1.0) {
          sum[d] += sample.x[i];
          count[d] += 1.0;
        }
        max_interval[d] = std::max(max_interval[d], sample.delta[i]);
      }
    }
  }
  TrainStats stats;
  stats.empirical_mean.resize(dims);
  stats.max_interval.resize(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    if (count[d] == 0.0) {
      throw DataError("empirical_mean: variable " + std::to_string(d) +
                      " has no observed training values");
    }
    stats.empirical_mean[d] = sum[d] / count[d];
    // Single-step windows have no intervals; any positive base works then.
    stats.max_interval[d] = max_interval[d] > 0.0 ? max_interval[d] : 1.0;
  }
  return stats;
}

std::vector<double> impute_average(const MaskedView& view, double mean) {
  std::vector<double> out(view.x.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = view.m[t] == 1.0 ? view.x[t] : mean;
  return out;
}

std::vector<double> impute_last(const MaskedView& view, double mean) {
  std::vector<double> out(view.x.size());
  double last = mean;
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (view.m[t] == 1.0) {
      last = view.x[t];
      out[t] = last;
    } else {
      out[t] = last;
    }
  }
  return out;
}

std::vector<double> impute_simple(const MaskedView& view, double mean,
                                  double max_interval) {
  if (!(max_interval > 0.0)) throw DataError("impute_simple: max_interval must be > 0");
  std::vector<double> out(view.x.size());
  bool seen = false;
  double last = mean;
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (view.m[t] == 1.0) {
      seen = true;
      last = view.x[t];
      out[t] = last;
      continue;
    }
    if (!seen) {
      out[t] = mean;
      continue;
    }
    const double w = std::min(view.delta[t] / max_interval, 1.0);
    out[t] = w * last + (1.0 - w) * mean;
  }
  return out;
}

TimeSeriesSample impute(const TimeSeriesSample& sample, Imputation method,
                        const TrainStats& stats) {
  if (method == Imputation::None) return sample;
  if (stats.empirical_mean.size() != sample.dims || stats.max_interval.size() != sample.dims) {
    throw DimensionError("impute: statistics cover " +
                         std::to_string(stats.empirical_mean.size()) +
                         " variables, sample has " + std::to_string(sample.dims));
  }
  TimeSeriesSample out = sample;
  std::vector<double> x(sample.steps), m(sample.steps), delta(sample.steps);
  for (std::size_t d = 0; d < sample.dims; ++d) {
    for (std::size_t t = 0; t < sample.steps; ++t) {
      x[t] = sample.x[sample.index(t, d)];
      m[t] = sample.m[sample.index(t, d)];
      delta[t] = sample.delta[sample.index(t, d)];
    }
    const MaskedView view{x, m, sample.s, delta};
    std::vector<double> filled;
    switch (method) {
      case Imputation::Average:
        filled = impute_average(view, stats.empirical_mean[d]);
        break;
      case Imputation::Last:
        filled = impute_last(view, stats.empirical_mean[d]);
        break;
      case Imputation::Simple:
        filled = impute_simple(view, stats.empirical_mean[d], stats.max_interval[d]);
        break;
      case Imputation::None:
        break;
    }
    for (std::size_t t = 0; t < sample.steps; ++t) out.x[sample.index(t, d)] = filled[t];
  }
  return out;
}

}  // namespace grud
