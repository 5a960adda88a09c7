#pragma once
// Masking vectors, time-interval recurrence, the training-set empirical
// mean, and the Average / Last / Simple imputation baselines.

#include <span>
#include <string_view>
#include <vector>

#include "grud/sample.hpp"

namespace grud {

/// Per-variable view of one window. All spans have the same length.
struct MaskedView {
  std::span<const double> x;
  std::span<const double> m;
  std::span<const double> s;
  std::span<const double> delta;
};

/// Statistics taken from the training split only and reused for validation
/// and test data.
struct TrainStats {
  std::vector<double> empirical_mean;  // one per variable
  std::vector<double> max_interval;    // one per variable, > 0
};

enum class Imputation { None, Average, Last, Simple };

std::string_view imputation_name(Imputation method);
/// Accepts "none", "average", "last", "simple" (case-insensitive).
Imputation parse_imputation(std::string_view name);

/// 1 where a value is present, 0 where it holds the NaN sentinel.
std::vector<double> compute_mask(std::span<const double> values);

/// delta[0] = 0; delta[t] = s[t] - s[t-1] when step t-1 was observed,
/// otherwise s[t] - s[t-1] + delta[t-1]. Timestamps must strictly increase.
std::vector<double> compute_intervals(std::span<const double> s,
                                      std::span<const double> m);

/// Masked mean of observed training inputs per variable, plus the largest
/// interval seen in training (the normalisation base of impute_simple).
TrainStats empirical_mean(std::span<const TimeSeriesSample> training);

std::vector<double> impute_average(const MaskedView& view, double mean);
/// Carries the last observation forward; a leading missing run gets `mean`.
std::vector<double> impute_last(const MaskedView& view, double mean);
/// Missing slot <- w * last + (1 - w) * mean with w = min(delta / max_interval, 1).
/// A leading missing run (no observation yet) gets `mean`.
std::vector<double> impute_simple(const MaskedView& view, double mean,
                                  double max_interval);

/// Returns a copy of `sample` with every missing input filled by `method`.
/// Mask and intervals are kept so the caller can still see what was filled.
/// Imputation::None returns the sample unchanged.
TimeSeriesSample impute(const TimeSeriesSample& sample, Imputation method,
                        const TrainStats& stats);

}  // namespace grud
