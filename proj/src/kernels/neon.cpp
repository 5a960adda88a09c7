// NEON variants for aarch64, where Advanced SIMD with float64 lanes is part
// of the base ISA, so no runtime probe is needed.
#include "grud/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace grud::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x,
          double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(w + r * cols, x, cols);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols,
                const double* g, double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy(g[r], w + r * cols, y, cols);
}

void ger_acc(double* w, std::size_t rows, std::size_t cols, const double* g,
             const double* x) {
  for (std::size_t r = 0; r < rows; ++r) axpy(g[r], x, w + r * cols, cols);
}

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void adam(double* p, const double* g, double* m, double* v, std::size_t n,
          double lr, double beta1, double beta2, double eps, double c1,
          double c2) {
  const float64x2_t b1 = vdupq_n_f64(beta1);
  const float64x2_t b2 = vdupq_n_f64(beta2);
  const float64x2_t ob1 = vdupq_n_f64(1.0 - beta1);
  const float64x2_t ob2 = vdupq_n_f64(1.0 - beta2);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t gv = vld1q_f64(g + i);
    float64x2_t mv = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(ob1, gv));
    float64x2_t vv = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)),
                               vmulq_f64(ob2, vmulq_f64(gv, gv)));
    vst1q_f64(m + i, mv);
    vst1q_f64(v + i, vv);
    const float64x2_t m_hat = vdivq_f64(mv, vdupq_n_f64(c1));
    const float64x2_t v_hat = vdivq_f64(vv, vdupq_n_f64(c2));
    const float64x2_t step =
        vdivq_f64(vmulq_f64(vdupq_n_f64(lr), m_hat),
                  vaddq_f64(vsqrtq_f64(v_hat), vdupq_n_f64(eps)));
    vst1q_f64(p + i, vsubq_f64(vld1q_f64(p + i), step));
  }
  if (i < n) scalar_table().adam(p + i, g + i, m + i, v + i, n - i, lr, beta1,
                                 beta2, eps, c1, c2);
}

}  // namespace

const Table* neon_table() {
  static const Table t{Backend::Neon, "neon", dot,      gemv,
                       gemv_t_acc,    ger_acc, axpy,    hadamard,
                       adam};
  return &t;
}

}  // namespace grud::kernels

#else

namespace grud::kernels {
const Table* neon_table() { return nullptr; }
}  // namespace grud::kernels

#endif
