#include <cstdlib>
#include <string_view>

#include "qwork/simd/kernels.hpp"

namespace qwork::simd {

namespace detail {
#if defined(QWORK_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(QWORK_HAVE_AVX512)
const KernelTable& avx512_table();
#endif
#if defined(QWORK_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Avx512: return "avx512";
    case Isa::Neon: return "neon";
  }
  return "scalar";
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
#if defined(__x86_64__) || defined(__i386__)
    case Isa::Avx2: return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    case Isa::Avx512: return __builtin_cpu_supports("avx512f");
#else
    case Isa::Avx2:
    case Isa::Avx512: return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* avx2_kernels() {
#if defined(QWORK_HAVE_AVX2)
  if (cpu_supports(Isa::Avx2)) return &detail::avx2_table();
#endif
  return nullptr;
}

const KernelTable* avx512_kernels() {
#if defined(QWORK_HAVE_AVX512)
  if (cpu_supports(Isa::Avx512)) return &detail::avx512_table();
#endif
  return nullptr;
}

const KernelTable* neon_kernels() {
#if defined(QWORK_HAVE_NEON)
  if (cpu_supports(Isa::Neon)) return &detail::neon_table();
#endif
  return nullptr;
}

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
  for (const KernelTable* k : {avx2_kernels(), avx512_kernels(), neon_kernels()}) {
    if (k) out.push_back(k);
  }
  return out;
}

namespace {

const KernelTable& select_kernels() {
  const auto available = available_kernels();
  if (const char* env = std::getenv("QWORK_SIMD")) {
    const std::string_view want(env);
    for (const KernelTable* k : available) {
      if (isa_name(k->isa) == want) return *k;
    }
  }
  return *available.back();
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& chosen = select_kernels();
  return chosen;
}

}  // namespace qwork::simd
