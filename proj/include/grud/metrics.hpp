#pragma once

#include <cstddef>
#include <span>

namespace grud {

struct EvalReport {
  double mae = 0.0;
  double mse = 0.0;
  double mape_percent = 0.0;
  std::size_t n = 0;
  /// Targets with |y| < kMapeFloor, left out of the MAPE average.
  std::size_t mape_excluded = 0;
};

inline constexpr double kMapeFloor = 1e-6;

/// MAE, MSE and MAPE (in percent) over paired targets and predictions.
EvalReport compute_metrics(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace grud
