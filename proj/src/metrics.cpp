#include "grud/metrics.hpp"

#include <cmath>
#include <string>

#include "grud/error.hpp"

namespace grud {

EvalReport compute_metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw DimensionError("compute_metrics: " + std::to_string(y_true.size()) +
                         " targets vs " + std::to_string(y_pred.size()) + " predictions");
  }
  if (y_true.empty()) throw DataError("compute_metrics: empty input");

  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  std::size_t pct_n = 0;
  EvalReport r;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    if (std::abs(y_true[i]) < kMapeFloor) {
      ++r.mape_excluded;
      continue;
    }
    pct_sum += std::abs(e / y_true[i]);
    ++pct_n;
  }
  const double n = static_cast<double>(y_true.size());
  r.n = y_true.size();
  r.mae = abs_sum / n;
  r.mse = sq_sum / n;
  r.mape_percent = pct_n > 0 ? 100.0 * pct_sum / static_cast<double>(pct_n) : 0.0;
  return r;
}

}  // namespace grud
