#include "grud/kernels.hpp"

#include <cmath>

namespace grud::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x,
          double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(w + r * cols, x, cols);
}

void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols,
                const double* g, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * gr;
  }
}

void ger_acc(double* w, std::size_t rows, std::size_t cols, const double* g,
             const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void adam(double* p, const double* g, double* m, double* v, std::size_t n,
          double lr, double beta1, double beta2, double eps, double c1,
          double c2) {
  const double one_b1 = 1.0 - beta1;
  const double one_b2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + one_b1 * g[i];
    v[i] = beta2 * v[i] + one_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace

const Table& scalar_table() {
  static const Table t{Backend::Scalar, "scalar", dot,      gemv,
                       gemv_t_acc,      ger_acc,  axpy,     hadamard,
                       adam};
  return t;
}

}  // namespace grud::kernels
