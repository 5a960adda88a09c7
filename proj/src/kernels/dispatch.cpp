#include <atomic>
#include <cstdlib>
#include <string_view>

#include "grud/kernels.hpp"

namespace grud::kernels {
namespace {

const Table* lookup(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return &scalar_table();
    case Backend::Avx2:
      return avx2_table();
    case Backend::Neon:
      return neon_table();
  }
  return nullptr;
}

const Table* pick_default() {
  if (const char* env = std::getenv("GRUD_KERNELS")) {
    const std::string_view want(env);
    for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
      if (backend_name(b) == want) {
        if (const Table* t = lookup(b)) return t;
      }
    }
  }
  if (const Table* t = avx2_table()) return t;
  if (const Table* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> t{pick_default()};
  return t;
}

}  // namespace

const Table& active() { return *current().load(std::memory_order_acquire); }

bool set_backend(Backend b) {
  const Table* t = lookup(b);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

std::size_t available(Backend* out, std::size_t cap) {
  std::size_t n = 0;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
    if (lookup(b) != nullptr && n < cap) out[n++] = b;
  }
  return n;
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
    case Backend::Neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace grud::kernels
