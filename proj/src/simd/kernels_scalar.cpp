#include "qwork/simd/kernels.hpp"

namespace qwork::simd {

namespace {

void apply_hamiltonian(const CsrView& h, const double* diag, const double* x, double* y,
                       std::size_t width) {
  for (std::size_t r = 0; r < h.rows; ++r) {
    const double d = diag[r];
    const double* xr = x + r * width;
    double* yr = y + r * width;
    for (std::size_t j = 0; j < width; ++j) yr[j] = d * xr[j];
    for (auto k = h.row_offsets[r]; k < h.row_offsets[r + 1]; ++k) {
      const double v = h.values[k];
      const double* xc = x + static_cast<std::size_t>(h.columns[k]) * width;
      for (std::size_t j = 0; j < width; ++j) yr[j] += v * xc[j];
    }
  }
}

void taylor_term(const CsrView& h, const double* diag, double a, const double* x, double* term,
                 double* acc, std::size_t width) {
  for (std::size_t r = 0; r < h.rows; ++r) {
    const double d = diag[r];
    const double* xr = x + r * width;
    double* tr = term + r * width;
    double* ar = acc + r * width;
    for (std::size_t j = 0; j + 1 < width; j += 2) {
      double re = d * xr[j];
      double im = d * xr[j + 1];
      for (auto k = h.row_offsets[r]; k < h.row_offsets[r + 1]; ++k) {
        const double* xc = x + static_cast<std::size_t>(h.columns[k]) * width + j;
        re += h.values[k] * xc[0];
        im += h.values[k] * xc[1];
      }
      // -i a (re + i im) = a im - i a re
      tr[j] = a * im;
      tr[j + 1] = -a * re;
      ar[j] += tr[j];
      ar[j + 1] += tr[j + 1];
    }
  }
}

void scale(double a, double* x, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) x[j] *= a;
}

constexpr KernelTable kTable{Isa::Scalar, &apply_hamiltonian, &taylor_term, &scale};

}  // namespace

const KernelTable& scalar_kernels() { return kTable; }

}  // namespace qwork::simd
