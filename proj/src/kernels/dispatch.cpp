#include <atomic>
#include <cstdlib>
#include <string>

#include "gexp/error.hpp"
#include "gexp/kernels.hpp"

namespace gexp::kernels {
namespace {

constexpr KernelTable kScalar{Backend::Scalar, &detail::one_step_max_scalar,
                              &detail::heat_step_scalar};
#if defined(GEXP_HAVE_AVX2)
constexpr KernelTable kAvx2{Backend::Avx2, &detail::one_step_max_avx2, &detail::heat_step_avx2};
#endif

bool cpu_has_avx2() {
#if defined(GEXP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("GEXP_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &kScalar;
    if (want == "avx2" && backend_available(Backend::Avx2)) return &table_for(Backend::Avx2);
  }
  return &table_for(backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar);
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return cpu_has_avx2();
  }
  return false;
}

const KernelTable& table_for(Backend b) {
#if defined(GEXP_HAVE_AVX2)
  if (b == Backend::Avx2 && cpu_has_avx2()) return kAvx2;
#endif
  (void)b;
  return kScalar;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void force_backend(Backend b) {
  if (!backend_available(b))
    throw PreconditionError("kernel backend '" + std::string(backend_name(b)) + "' is not available");
  current().store(&table_for(b), std::memory_order_release);
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace gexp::kernels
