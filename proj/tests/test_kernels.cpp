#include "doctest.h"

#include <cmath>
#include <vector>

#include "grud/kernels.hpp"
#include "grud/linalg.hpp"

using namespace grud;
namespace k = grud::kernels;

namespace {

std::vector<double> draw(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, scale));
  }
}

std::vector<const k::Table*> simd_tables() {
  std::vector<const k::Table*> out;
  if (const auto* t = k::avx2_table()) out.push_back(t);
  if (const auto* t = k::neon_table()) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("scalar backend is always available") {
  k::Backend list[4];
  const std::size_t n = k::available(list, 4);
  REQUIRE(n >= 1);
  CHECK(list[0] == k::Backend::Scalar);
  CHECK(k::backend_name(k::Backend::Scalar) == "scalar");
  CHECK(k::set_backend(k::Backend::Scalar));
  CHECK(k::active().backend == k::Backend::Scalar);
}

TEST_CASE("SIMD kernels match the scalar reference") {
  const auto& ref = k::scalar_table();
  const auto tables = simd_tables();
  if (tables.empty()) MESSAGE("no SIMD backend on this machine; scalar only");
  for (const k::Table* t : tables) {
    CAPTURE(t->name);
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t rows = 1 + rng.below(37);
      const std::size_t cols = 1 + rng.below(37);
      const auto w = draw(rng, rows * cols);
      const auto x = draw(rng, cols);
      const auto g = draw(rng, rows);
      const double scale = static_cast<double>(rows + cols);

      const double d0 = ref.dot(x.data(), x.data(), cols);
      const double d1 = t->dot(x.data(), x.data(), cols);
      CHECK(std::abs(d0 - d1) <= 1e-12 * std::max(1.0, d0));

      std::vector<double> y0(rows), y1(rows);
      ref.gemv(w.data(), rows, cols, x.data(), y0.data());
      t->gemv(w.data(), rows, cols, x.data(), y1.data());
      check_close(y0, y1, scale);

      std::vector<double> a0 = x, a1 = x;
      ref.gemv_t_acc(w.data(), rows, cols, g.data(), a0.data());
      t->gemv_t_acc(w.data(), rows, cols, g.data(), a1.data());
      check_close(a0, a1, scale);

      std::vector<double> w0 = w, w1 = w;
      ref.ger_acc(w0.data(), rows, cols, g.data(), x.data());
      t->ger_acc(w1.data(), rows, cols, g.data(), x.data());
      check_close(w0, w1, 1.0);

      std::vector<double> p0 = x, p1 = x;
      const auto q = draw(rng, cols);
      ref.axpy(0.37, q.data(), p0.data(), cols);
      t->axpy(0.37, q.data(), p1.data(), cols);
      check_close(p0, p1, 1.0);

      std::vector<double> h0(cols), h1(cols);
      ref.hadamard(x.data(), q.data(), h0.data(), cols);
      t->hadamard(x.data(), q.data(), h1.data(), cols);
      CHECK(h0 == h1);
    }
  }
}

TEST_CASE("SIMD Adam update is bitwise identical to scalar") {
  const auto& ref = k::scalar_table();
  for (const k::Table* t : simd_tables()) {
    CAPTURE(t->name);
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng.below(41);
      auto p0 = draw(rng, n), g = draw(rng, n), m0 = draw(rng, n), v0 = draw(rng, n);
      for (double& v : v0) v = std::abs(v);
      auto p1 = p0, m1 = m0, v1 = v0;
      const double c1 = 1.0 - std::pow(0.9, 3), c2 = 1.0 - std::pow(0.999, 3);
      ref.adam(p0.data(), g.data(), m0.data(), v0.data(), n, 1e-3, 0.9, 0.999, 1e-8, c1, c2);
      t->adam(p1.data(), g.data(), m1.data(), v1.data(), n, 1e-3, 0.9, 0.999, 1e-8, c1, c2);
      CHECK(p0 == p1);
      CHECK(m0 == m1);
      CHECK(v0 == v1);
    }
  }
}

TEST_CASE("linalg routes through every backend with the same results") {
  Rng rng(8);
  Mat w(13, 9);
  for (double& v : w.values()) v = rng.normal();
  Vec x = sample_normal(rng, 9, 1.0);
  REQUIRE(k::set_backend(k::Backend::Scalar));
  const Vec ref = matvec(w, x);
  k::Backend list[4];
  const std::size_t n = k::available(list, 4);
  for (std::size_t i = 0; i < n; ++i) {
    REQUIRE(k::set_backend(list[i]));
    const Vec y = matvec(w, x);
    for (std::size_t r = 0; r < ref.size(); ++r) CHECK(y[r] == doctest::Approx(ref[r]).epsilon(1e-12));
  }
  k::set_backend(k::Backend::Scalar);
}
