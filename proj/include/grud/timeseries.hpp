#pragma once
// Segment series, CSV ingestion, the synthetic friction generator,
// windowing, the 7:2:1 split and random missingness injection.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "grud/sample.hpp"

namespace grud {

struct SegmentSeries {
  std::string segment_id;
  std::vector<double> values;      // friction
  std::vector<double> timestamps;  // days since first record
};

struct DatasetSplit {
  std::vector<TimeSeriesSample> train;
  std::vector<TimeSeriesSample> validation;
  std::vector<TimeSeriesSample> test;
};

/// Seasonal friction model: a periodic winter well of depth `winter_depth`
/// centred on `winter_center_day` (annual period), plus stationary Gaussian
/// AR(1) noise with marginal standard deviation `noise_std` and lag-one
/// correlation `noise_ar` (0 gives i.i.d. noise), clamped to [0.05, 1].
struct SynthConfig {
  std::size_t n_days = 446;
  double base_friction = 0.75;
  double winter_depth = 0.45;
  double winter_center_day = 330.0;
  double winter_width = 30.0;
  double noise_std = 0.03;
  double noise_ar = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

/// Reads `segment_id,day_index,friction` rows. Errors carry the line number.
std::map<std::string, SegmentSeries> ingest_csv(const std::filesystem::path& path);
std::map<std::string, SegmentSeries> parse_csv(std::istream& in,
                                               const std::string& source = "<stream>");
void write_csv(std::ostream& out, const std::vector<SegmentSeries>& series);

/// L - T windows; window i covers steps i..i+T-1 and targets step i+T.
/// Timestamps are rebased so every window starts at 0.
std::vector<TimeSeriesSample> window(const SegmentSeries& series, std::size_t steps);

/// Seeded shuffle, then round-half-up 70% train, 20% validation, rest test.
DatasetSplit split(std::vector<TimeSeriesSample> samples, std::uint64_t seed);

/// Sizes (train, validation, test) that split() produces for n samples.
struct SplitSizes {
  std::size_t train, validation, test;
};
SplitSizes split_sizes(std::size_t n);

/// Smooth annual well in [0, 1], 1 at the centre day.
double winter_bump(double day, double center_day, double width);

SegmentSeries synthesize(const SynthConfig& config);

/// Drops each input step independently with probability `rate`; the target
/// is never masked. Intervals are recomputed from the new mask.
TimeSeriesSample inject_missing(const TimeSeriesSample& sample, double rate,
                                std::uint64_t seed);

}  // namespace grud
