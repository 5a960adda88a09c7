#include "grud/sample.hpp"

#include <algorithm>

namespace grud {

Vec TimeSeriesSample::values_at(std::size_t t) const {
  return Vec(std::vector<double>(x.begin() + t * dims, x.begin() + (t + 1) * dims));
}

Vec TimeSeriesSample::mask_at(std::size_t t) const {
  return Vec(std::vector<double>(m.begin() + t * dims, m.begin() + (t + 1) * dims));
}

Vec TimeSeriesSample::delta_at(std::size_t t) const {
  return Vec(std::vector<double>(delta.begin() + t * dims,
                                 delta.begin() + (t + 1) * dims));
}

bool TimeSeriesSample::fully_observed() const {
  return std::all_of(m.begin(), m.end(), [](double v) { return v == 1.0; });
}

bool TimeSeriesSample::has_sentinels() const {
  return std::any_of(x.begin(), x.end(), [](double v) { return std::isnan(v); });
}

}  // namespace grud
