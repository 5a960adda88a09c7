#include "grud/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "grud/error.hpp"
#include "grud/missingness.hpp"

namespace grud {
namespace {

constexpr std::string_view kHeader = "segment_id,day_index,friction";
constexpr double kDaysPerYear = 365.0;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size() && std::isfinite(out);
}

[[noreturn]] void fail_line(const std::string& source, std::size_t line,
                            const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_days < 2) throw ConfigError("synth: n_days must be >= 2");
  if (!(base_friction >= 0.0 && base_friction <= 1.0))
    throw ConfigError("synth: base_friction must lie in [0, 1]");
  if (!(noise_std >= 0.0)) throw ConfigError("synth: noise_std must be >= 0");
  if (!(winter_width > 0.0)) throw ConfigError("synth: winter_width must be > 0");
  if (!(noise_ar >= 0.0 && noise_ar < 1.0)) throw ConfigError("synth: noise_ar must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"n_days", c.n_days},
                     {"base_friction", c.base_friction},
                     {"winter_depth", c.winter_depth},
                     {"winter_center_day", c.winter_center_day},
                     {"winter_width", c.winter_width},
                     {"noise_std", c.noise_std},
                     {"noise_ar", c.noise_ar},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  SynthConfig d;
  c.n_days = j.value("n_days", d.n_days);
  c.base_friction = j.value("base_friction", d.base_friction);
  c.winter_depth = j.value("winter_depth", d.winter_depth);
  c.winter_center_day = j.value("winter_center_day", d.winter_center_day);
  c.winter_width = j.value("winter_width", d.winter_width);
  c.noise_std = j.value("noise_std", d.noise_std);
  c.noise_ar = j.value("noise_ar", d.noise_ar);
  c.seed = j.value("seed", d.seed);
}

std::map<std::string, SegmentSeries> ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

std::map<std::string, SegmentSeries> parse_csv(std::istream& in,
                                               const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  ++line_no;
  if (trim(line) != kHeader) {
    fail_line(source, line_no, "expected header '" + std::string(kHeader) + "'");
  }

  struct Row {
    double day;
    double value;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, std::set<double>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos) {
      fail_line(source, line_no, "expected 3 comma-separated fields");
    }
    const std::string id(trim(text.substr(0, c1)));
    if (id.empty()) fail_line(source, line_no, "empty segment_id");
    double day = 0.0, value = 0.0;
    if (!parse_double(text.substr(c1 + 1, c2 - c1 - 1), day) || day < 0.0) {
      fail_line(source, line_no, "day_index is not a non-negative number");
    }
    if (!parse_double(text.substr(c2 + 1), value)) {
      fail_line(source, line_no, "friction is not a finite number");
    }
    if (!seen[id].insert(day).second) {
      std::ostringstream msg;
      msg << "duplicate (segment, day) pair (" << id << ", " << day << ")";
      fail_line(source, line_no, msg.str());
    }
    rows[id].push_back({day, value});
  }
  if (rows.empty()) throw DataError(source + ": no data rows");

  std::map<std::string, SegmentSeries> out;
  for (auto& [id, list] : rows) {
    std::sort(list.begin(), list.end(),
              [](const Row& a, const Row& b) { return a.day < b.day; });
    SegmentSeries series;
    series.segment_id = id;
    const double origin = list.front().day;
    for (const Row& r : list) {
      series.timestamps.push_back(r.day - origin);
      series.values.push_back(r.value);
    }
    out.emplace(id, std::move(series));
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<SegmentSeries>& series) {
  out << kHeader << '\n';
  char buf[64];
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out << s.segment_id << ',';
      auto r = std::to_chars(buf, buf + sizeof buf, s.timestamps[i]);
      out.write(buf, r.ptr - buf);
      out << ',';
      r = std::to_chars(buf, buf + sizeof buf, s.values[i]);
      out.write(buf, r.ptr - buf);
      out << '\n';
    }
  }
}

std::vector<TimeSeriesSample> window(const SegmentSeries& series, std::size_t steps) {
  const std::size_t len = series.values.size();
  if (steps == 0) throw ConfigError("window: window length must be >= 1");
  if (series.timestamps.size() != len) {
    throw DataError("window: values and timestamps differ in length");
  }
  if (len <= steps) {
    throw DataError("window: series too short (" + std::to_string(len) +
                    " steps for a window of " + std::to_string(steps) + ")");
  }
  std::vector<TimeSeriesSample> samples;
  samples.reserve(len - steps);
  const std::vector<double> full_mask(steps, 1.0);
  for (std::size_t i = 0; i + steps < len; ++i) {
    TimeSeriesSample s;
    s.steps = steps;
    s.dims = 1;
    const double origin = series.timestamps[i];
    for (std::size_t t = 0; t < steps; ++t) {
      s.x.push_back(series.values[i + t]);
      s.s.push_back(series.timestamps[i + t] - origin);
    }
    s.m = full_mask;
    s.delta = compute_intervals(s.s, s.m);
    s.y = series.values[i + steps];
    samples.push_back(std::move(s));
  }
  return samples;
}

SplitSizes split_sizes(std::size_t n) {
  const std::size_t train = (7 * n + 5) / 10;
  const std::size_t validation = (2 * n + 5) / 10;
  return {train, validation, n - train - validation};
}

DatasetSplit split(std::vector<TimeSeriesSample> samples, std::uint64_t seed) {
  if (samples.size() < 10) {
    throw DataError("split: need at least 10 samples, got " +
                    std::to_string(samples.size()));
  }
  Rng rng(seed);
  rng.shuffle(samples);
  const SplitSizes sizes = split_sizes(samples.size());
  DatasetSplit out;
  auto first = std::make_move_iterator(samples.begin());
  out.train.assign(first, first + sizes.train);
  out.validation.assign(first + sizes.train, first + sizes.train + sizes.validation);
  out.test.assign(first + sizes.train + sizes.validation,
                  std::make_move_iterator(samples.end()));
  return out;
}

double winter_bump(double day, double center_day, double width) {
  // von Mises shape: smooth and periodic, with curvature at the centre
  // matching a Gaussian of standard deviation `width` days.
  const double omega = 2.0 * std::numbers::pi / kDaysPerYear;
  const double kappa = 1.0 / ((omega * width) * (omega * width));
  return std::exp(kappa * (std::cos(omega * (day - center_day)) - 1.0));
}

SegmentSeries synthesize(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SegmentSeries series;
  series.segment_id = "synth-" + std::to_string(config.seed);
  series.values.reserve(config.n_days);
  series.timestamps.reserve(config.n_days);
  const double innovation = std::sqrt(1.0 - config.noise_ar * config.noise_ar);
  double noise = 0.0;
  for (std::size_t day = 0; day < config.n_days; ++day) {
    const double t = static_cast<double>(day);
    double v = config.base_friction -
               config.winter_depth * winter_bump(t, config.winter_center_day,
                                                 config.winter_width);
    if (config.noise_std > 0.0) {
      const double z = rng.normal();
      noise = day == 0 ? z : config.noise_ar * noise + innovation * z;
      v += config.noise_std * noise;
    }
    series.values.push_back(std::clamp(v, 0.05, 1.0));
    series.timestamps.push_back(t);
  }
  return series;
}

TimeSeriesSample inject_missing(const TimeSeriesSample& sample, double rate,
                                std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("inject_missing: rate must lie in [0, 1)");
  }
  if (!sample.fully_observed()) {
    throw DataError("inject_missing: sample already has missing values");
  }
  if (rate == 0.0) return sample;
  TimeSeriesSample out = sample;
  Rng rng(seed);
  for (std::size_t i = 0; i < out.x.size(); ++i) {
    if (rng.uniform() < rate) {
      out.m[i] = 0.0;
      out.x[i] = kMissing;
    }
  }
  std::vector<double> m(out.steps);
  for (std::size_t d = 0; d < out.dims; ++d) {
    for (std::size_t t = 0; t < out.steps; ++t) m[t] = out.m[out.index(t, d)];
    const auto delta = compute_intervals(out.s, m);
    for (std::size_t t = 0; t < out.steps; ++t) out.delta[out.index(t, d)] = delta[t];
  }
  return out;
}

}  // namespace grud
