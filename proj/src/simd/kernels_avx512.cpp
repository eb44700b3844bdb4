// Compiled with -mavx512f; only reached after a runtime CPU check.
#include <immintrin.h>

#include "qwork/simd/kernels.hpp"

namespace qwork::simd::detail {

namespace {

// Row r, doubles [j, j + 8 * N) under mask m for the last vector.
template <int N>
inline void row_product(const CsrView& h, const double* diag, const double* x, std::size_t r,
                        std::size_t j, std::size_t width, __mmask8 m, __m512d* out) {
  const __m512d d = _mm512_set1_pd(diag[r]);
  const double* xr = x + r * width + j;
  for (int q = 0; q < N; ++q) {
    const __mmask8 mq = q + 1 == N ? m : static_cast<__mmask8>(0xff);
    out[q] = _mm512_mul_pd(d, _mm512_maskz_loadu_pd(mq, xr + 8 * q));
  }
  for (auto k = h.row_offsets[r]; k < h.row_offsets[r + 1]; ++k) {
    const __m512d v = _mm512_set1_pd(h.values[k]);
    const double* xc = x + static_cast<std::size_t>(h.columns[k]) * width + j;
    for (int q = 0; q < N; ++q) {
      const __mmask8 mq = q + 1 == N ? m : static_cast<__mmask8>(0xff);
      out[q] = _mm512_fmadd_pd(v, _mm512_maskz_loadu_pd(mq, xc + 8 * q), out[q]);
    }
  }
}

// Calls f(j, vectors, count, tail mask) over one row in chunks of 32 doubles,
// then 8, then a masked remainder (width is even: 2, 4 or 6 doubles).
template <class F>
inline void for_chunks(const CsrView& h, const double* diag, const double* x, std::size_t r,
                       std::size_t width, F&& f) {
  __m512d p[4];
  std::size_t j = 0;
  for (; j + 32 <= width; j += 32) {
    row_product<4>(h, diag, x, r, j, width, 0xff, p);
    f(j, p, 4, static_cast<__mmask8>(0xff));
  }
  for (; j + 8 <= width; j += 8) {
    row_product<1>(h, diag, x, r, j, width, 0xff, p);
    f(j, p, 1, static_cast<__mmask8>(0xff));
  }
  if (j < width) {
    const auto m = static_cast<__mmask8>((1u << (width - j)) - 1u);
    row_product<1>(h, diag, x, r, j, width, m, p);
    f(j, p, 1, m);
  }
}

void apply_hamiltonian(const CsrView& h, const double* diag, const double* x, double* y,
                       std::size_t width) {
  for (std::size_t r = 0; r < h.rows; ++r) {
    double* yr = y + r * width;
    for_chunks(h, diag, x, r, width, [&](std::size_t j, const __m512d* p, int n, __mmask8 m) {
      for (int q = 0; q < n; ++q) {
        _mm512_mask_storeu_pd(yr + j + 8 * q, q + 1 == n ? m : static_cast<__mmask8>(0xff), p[q]);
      }
    });
  }
}

void taylor_term(const CsrView& h, const double* diag, double a, const double* x, double* term,
                 double* acc, std::size_t width) {
  const __m512d coef = _mm512_setr_pd(a, -a, a, -a, a, -a, a, -a);
  for (std::size_t r = 0; r < h.rows; ++r) {
    double* tr = term + r * width;
    double* ar = acc + r * width;
    for_chunks(h, diag, x, r, width, [&](std::size_t j, const __m512d* p, int n, __mmask8 m) {
      for (int q = 0; q < n; ++q) {
        const __mmask8 mq = q + 1 == n ? m : static_cast<__mmask8>(0xff);
        const std::size_t o = j + 8 * static_cast<std::size_t>(q);
        const __m512d u = _mm512_mul_pd(_mm512_permute_pd(p[q], 0x55), coef);
        _mm512_mask_storeu_pd(tr + o, mq, u);
        _mm512_mask_storeu_pd(ar + o, mq, _mm512_add_pd(_mm512_maskz_loadu_pd(mq, ar + o), u));
      }
    });
  }
}

void scale(double a, double* x, std::size_t n) {
  const __m512d s = _mm512_set1_pd(a);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) _mm512_storeu_pd(x + j, _mm512_mul_pd(s, _mm512_loadu_pd(x + j)));
  for (; j < n; ++j) x[j] *= a;
}

constexpr KernelTable kTable{Isa::Avx512, &apply_hamiltonian, &taylor_term, &scale};

}  // namespace

const KernelTable& avx512_table() { return kTable; }

}  // namespace qwork::simd::detail
