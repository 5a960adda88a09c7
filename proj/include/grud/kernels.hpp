#pragma once
// Dense double-precision kernels behind the linalg module.
//
// Every kernel has a portable scalar reference implementation and, where the
// target supports it, an AVX2/FMA (x86-64) or NEON (aarch64) variant. The
// active table is picked once at first use from the CPU's capabilities and
// can be overridden with GRUD_KERNELS=scalar|avx2|neon or set_backend().

#include <cstddef>
#include <string_view>

namespace grud::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct Table {
  Backend backend;
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[r] = sum_c W[r, c] * x[c], W row-major rows x cols.
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols,
               const double* x, double* y);
  // y[c] += sum_r W[r, c] * g[r]
  void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols,
                     const double* g, double* y);
  // W[r, c] += g[r] * x[c]
  void (*ger_acc)(double* w, std::size_t rows, std::size_t cols,
                  const double* g, const double* x);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = a * b (elementwise)
  void (*hadamard)(const double* a, const double* b, double* out,
                   std::size_t n);
  // Bias-corrected Adam update over one tensor; `c1`, `c2` are the bias
  // corrections 1 - beta1^t and 1 - beta2^t.
  void (*adam)(double* param, const double* grad, double* m, double* v,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double c1, double c2);
};

const Table& scalar_table();

/// Returns nullptr when the variant was not compiled in or the CPU lacks it.
const Table* avx2_table();
const Table* neon_table();

/// Table currently used by linalg.
const Table& active();

/// Force a backend; returns false (and leaves the table unchanged) when the
/// backend is unavailable on this machine.
bool set_backend(Backend b);

/// Backends usable on this machine, scalar first.
std::size_t available(Backend* out, std::size_t cap);

std::string_view backend_name(Backend b);

}  // namespace grud::kernels
