#pragma once

// Inner loops of the time propagation. A column block of the propagator is
// stored row-major with interleaved complex entries: row r occupies `width`
// doubles (re, im, re, im, ...), rows are contiguous. The Hamiltonian is
// real, so every product is a real scalar times a complex row.
//
// Every instruction-set variant must agree with the scalar reference to
// rounding; tests/test_kernels.cpp checks this for each variant the CPU runs.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace qwork::simd {

enum class Isa { Scalar, Avx2, Avx512, Neon };

std::string_view isa_name(Isa isa);

struct CsrView {
  const std::uint32_t* row_offsets = nullptr;
  const std::uint32_t* columns = nullptr;
  const double* values = nullptr;
  std::size_t rows = 0;
};

struct KernelTable {
  Isa isa;
  // y_r = diag_r * x_r + sum_k values_k * x_{columns_k}, for every row r.
  void (*apply_hamiltonian)(const CsrView& h, const double* diag, const double* x, double* y,
                            std::size_t width);
  // One Taylor term: term = -i * a * (diag + offdiag) * x;  acc += term.
  // term must not alias x.
  void (*taylor_term)(const CsrView& h, const double* diag, double a, const double* x,
                      double* term, double* acc, std::size_t width);
  // x *= a (real), n doubles.
  void (*scale)(double a, double* x, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant is not compiled in or the CPU lacks the extension.
const KernelTable* avx2_kernels();
const KernelTable* avx512_kernels();
const KernelTable* neon_kernels();

bool cpu_supports(Isa isa);

// All variants usable on this machine, scalar first.
std::vector<const KernelTable*> available_kernels();

// Widest supported variant. QWORK_SIMD=scalar|avx2|avx512|neon in the
// environment overrides the choice (ignored when unsupported).
const KernelTable& active_kernels();

}  // namespace qwork::simd
