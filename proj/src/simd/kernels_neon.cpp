// AArch64 only; NEON is part of the base ISA there.
#include <arm_neon.h>

#include "qwork/simd/kernels.hpp"

namespace qwork::simd::detail {

namespace {

void apply_hamiltonian(const CsrView& h, const double* diag, const double* x, double* y,
                       std::size_t width) {
  for (std::size_t r = 0; r < h.rows; ++r) {
    const auto begin = h.row_offsets[r];
    const auto end = h.row_offsets[r + 1];
    const double* xr = x + r * width;
    double* yr = y + r * width;
    const float64x2_t d = vdupq_n_f64(diag[r]);
    std::size_t j = 0;
    for (; j + 8 <= width; j += 8) {
      float64x2_t a0 = vmulq_f64(d, vld1q_f64(xr + j));
      float64x2_t a1 = vmulq_f64(d, vld1q_f64(xr + j + 2));
      float64x2_t a2 = vmulq_f64(d, vld1q_f64(xr + j + 4));
      float64x2_t a3 = vmulq_f64(d, vld1q_f64(xr + j + 6));
      for (auto k = begin; k < end; ++k) {
        const float64x2_t v = vdupq_n_f64(h.values[k]);
        const double* xc = x + static_cast<std::size_t>(h.columns[k]) * width + j;
        a0 = vfmaq_f64(a0, v, vld1q_f64(xc));
        a1 = vfmaq_f64(a1, v, vld1q_f64(xc + 2));
        a2 = vfmaq_f64(a2, v, vld1q_f64(xc + 4));
        a3 = vfmaq_f64(a3, v, vld1q_f64(xc + 6));
      }
      vst1q_f64(yr + j, a0);
      vst1q_f64(yr + j + 2, a1);
      vst1q_f64(yr + j + 4, a2);
      vst1q_f64(yr + j + 6, a3);
    }
    for (; j + 2 <= width; j += 2) {
      float64x2_t a0 = vmulq_f64(d, vld1q_f64(xr + j));
      for (auto k = begin; k < end; ++k) {
        const double* xc = x + static_cast<std::size_t>(h.columns[k]) * width + j;
        a0 = vfmaq_f64(a0, vdupq_n_f64(h.values[k]), vld1q_f64(xc));
      }
      vst1q_f64(yr + j, a0);
    }
  }
}

void taylor_term(const CsrView& h, const double* diag, double a, const double* x, double* term,
                 double* acc, std::size_t width) {
  const double c[2] = {a, -a};
  const float64x2_t coef = vld1q_f64(c);
  for (std::size_t r = 0; r < h.rows; ++r) {
    const auto begin = h.row_offsets[r];
    const auto end = h.row_offsets[r + 1];
    const float64x2_t d = vdupq_n_f64(diag[r]);
    const double* xr = x + r * width;
    double* tr = term + r * width;
    double* ar = acc + r * width;
    for (std::size_t j = 0; j + 2 <= width; j += 2) {
      float64x2_t s = vmulq_f64(d, vld1q_f64(xr + j));
      for (auto k = begin; k < end; ++k) {
        const double* xc = x + static_cast<std::size_t>(h.columns[k]) * width + j;
        s = vfmaq_f64(s, vdupq_n_f64(h.values[k]), vld1q_f64(xc));
      }
      // (re, im) -> (a im, -a re)
      const float64x2_t t = vmulq_f64(vextq_f64(s, s, 1), coef);
      vst1q_f64(tr + j, t);
      vst1q_f64(ar + j, vaddq_f64(vld1q_f64(ar + j), t));
    }
  }
}

void scale(double a, double* x, std::size_t n) {
  const float64x2_t s = vdupq_n_f64(a);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) vst1q_f64(x + j, vmulq_f64(s, vld1q_f64(x + j)));
  for (; j < n; ++j) x[j] *= a;
}

constexpr KernelTable kTable{Isa::Neon, &apply_hamiltonian, &taylor_term, &scale};

}  // namespace

const KernelTable& neon_table() { return kTable; }

}  // namespace qwork::simd::detail
