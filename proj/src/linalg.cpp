#include "grud/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grud/error.hpp"
#include "grud/kernels.hpp"

namespace grud {
namespace {

void require_same(const Vec& a, const Vec& b, const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": length mismatch " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

void Vec::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Mat: " + std::to_string(data_.size()) +
                         " values do not fill " + shape());
  }
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Mat: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Mat::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Mat::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream * 0xD1B54A32D192ED03ULL);
  splitmix64(x);
  return splitmix64(x);
}

Vec matvec(const Mat& w, const Vec& x) {
  if (w.cols() != x.size()) {
    throw DimensionError("matvec: matrix " + w.shape() + " vs vector of length " +
                         std::to_string(x.size()));
  }
  Vec y(w.rows());
  kernels::active().gemv(w.data(), w.rows(), w.cols(), x.data(), y.data());
  return y;
}

Vec matvec_transposed(const Mat& w, const Vec& g) {
  Vec y(w.cols());
  matvec_transposed_acc(w, g, y);
  return y;
}

void matvec_transposed_acc(const Mat& w, const Vec& g, Vec& acc) {
  if (w.rows() != g.size() || w.cols() != acc.size()) {
    throw DimensionError("matvec_transposed: matrix " + w.shape() +
                         " vs vectors of length " + std::to_string(g.size()) +
                         " and " + std::to_string(acc.size()));
  }
  kernels::active().gemv_t_acc(w.data(), w.rows(), w.cols(), g.data(),
                               acc.data());
}

void add_outer(Mat& w, const Vec& g, const Vec& x) {
  if (w.rows() != g.size() || w.cols() != x.size()) {
    throw DimensionError("add_outer: matrix " + w.shape() + " vs " +
                         std::to_string(g.size()) + "x" +
                         std::to_string(x.size()));
  }
  kernels::active().ger_acc(w.data(), w.rows(), w.cols(), g.data(), x.data());
}

double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec sigmoid(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

Vec tanh_vec(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vec hadamard(const Vec& a, const Vec& b) {
  require_same(a, b, "hadamard");
  Vec out(a.size());
  kernels::active().hadamard(a.data(), b.data(), out.data(), a.size());
  return out;
}

Vec add(const Vec& a, const Vec& b) {
  require_same(a, b, "add");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec sub(const Vec& a, const Vec& b) {
  require_same(a, b, "sub");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec scale(const Vec& v, double s) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s;
  return out;
}

void axpy(double alpha, const Vec& x, Vec& y) {
  require_same(x, y, "axpy");
  kernels::active().axpy(alpha, x.data(), y.data(), x.size());
}

double dot(const Vec& a, const Vec& b) {
  require_same(a, b, "dot");
  return kernels::active().dot(a.data(), b.data(), a.size());
}

Vec sample_normal(Rng& rng, std::size_t n, double stddev) {
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = stddev * rng.normal();
  return out;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace grud
