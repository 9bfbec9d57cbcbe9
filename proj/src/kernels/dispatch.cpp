#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"
#include "kickflow/error.hpp"
#include "kickflow/kernels.hpp"

namespace kickflow::kernels {
namespace {

constexpr KernelTable kScalarTable{
    Isa::kScalar,          "scalar",   &scalar::gemm, &scalar::dot2, &scalar::exp_euler,
    &scalar::dot,          &scalar::weighted_dot,
};

#if defined(KICKFLOW_HAVE_AVX2_TU)
constexpr KernelTable kAvx2Table{
    Isa::kAvx2,          "avx2",   &avx2::gemm, &avx2::dot2, &avx2::exp_euler,
    &avx2::dot,          &avx2::weighted_dot,
};
#endif

const KernelTable* resolve() {
  const char* env = std::getenv("KICKFLOW_SIMD");
  const std::string_view choice = env ? env : "auto";
  if (choice == "scalar") return &kScalarTable;
  if (avx2_kernels() && cpu_supports_avx2()) return avx2_kernels();
  return &kScalarTable;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{resolve()};
  return table;
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalarTable; }

const KernelTable* avx2_kernels() {
#if defined(KICKFLOW_HAVE_AVX2_TU)
  return &kAvx2Table;
#else
  return nullptr;
#endif
}

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) {
  if (isa == Isa::kScalar) {
    slot().store(&kScalarTable, std::memory_order_release);
    return;
  }
  require(avx2_kernels() != nullptr && cpu_supports_avx2(), ErrorKind::kInvalidArgument,
          "AVX2 kernels are not available on this machine");
  slot().store(avx2_kernels(), std::memory_order_release);
}

}  // namespace kickflow::kernels
