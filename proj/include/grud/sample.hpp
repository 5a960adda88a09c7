#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "grud/linalg.hpp"

namespace grud {

/// Sentinel stored in place of a missing input value.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One training window: `steps` input steps of `dims` variables each, plus
/// the scalar target taken from the step right after the window. Per-step
/// arrays are row-major [step][variable].
struct TimeSeriesSample {
  std::size_t steps = 0;
  std::size_t dims = 1;
  std::vector<double> x;      // NaN where m == 0
  std::vector<double> s;      // one timestamp per step, s[0] == 0
  std::vector<double> m;      // 1 observed, 0 missing
  std::vector<double> delta;  // time since last observation
  double y = 0.0;

  std::size_t index(std::size_t t, std::size_t d) const { return t * dims + d; }

  Vec values_at(std::size_t t) const;
  Vec mask_at(std::size_t t) const;
  Vec delta_at(std::size_t t) const;

  bool fully_observed() const;
  bool has_sentinels() const;
};

}  // namespace grud
