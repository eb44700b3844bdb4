// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "qwork/simd/kernels.hpp"

namespace qwork::simd::detail {

namespace {

// Row r, doubles [j, j + 4 * N): diag * x_r + sum_k v_k x_{c_k}.
template <int N>
inline void row_product(const CsrView& h, const double* diag, const double* x, std::size_t r,
                        std::size_t j, std::size_t width, __m256d* out) {
  const __m256d d = _mm256_set1_pd(diag[r]);
  const double* xr = x + r * width + j;
  for (int q = 0; q < N; ++q) out[q] = _mm256_mul_pd(d, _mm256_loadu_pd(xr + 4 * q));
  for (auto k = h.row_offsets[r]; k < h.row_offsets[r + 1]; ++k) {
    const __m256d v = _mm256_set1_pd(h.values[k]);
    const double* xc = x + static_cast<std::size_t>(h.columns[k]) * width + j;
    for (int q = 0; q < N; ++q) out[q] = _mm256_fmadd_pd(v, _mm256_loadu_pd(xc + 4 * q), out[q]);
  }
}

inline double tail_product(const CsrView& h, const double* diag, const double* x, std::size_t r,
                           std::size_t j, std::size_t width) {
  double s = diag[r] * x[r * width + j];
  for (auto k = h.row_offsets[r]; k < h.row_offsets[r + 1]; ++k) {
    s += h.values[k] * x[static_cast<std::size_t>(h.columns[k]) * width + j];
  }
  return s;
}

void apply_hamiltonian(const CsrView& h, const double* diag, const double* x, double* y,
                       std::size_t width) {
  __m256d a[4];
  for (std::size_t r = 0; r < h.rows; ++r) {
    double* yr = y + r * width;
    std::size_t j = 0;
    for (; j + 16 <= width; j += 16) {
      row_product<4>(h, diag, x, r, j, width, a);
      for (int q = 0; q < 4; ++q) _mm256_storeu_pd(yr + j + 4 * q, a[q]);
    }
    for (; j + 4 <= width; j += 4) {
      row_product<1>(h, diag, x, r, j, width, a);
      _mm256_storeu_pd(yr + j, a[0]);
    }
    for (; j < width; ++j) yr[j] = tail_product(h, diag, x, r, j, width);
  }
}

void taylor_term(const CsrView& h, const double* diag, double a, const double* x, double* term,
                 double* acc, std::size_t width) {
  // (re, im) -> (a im, -a re)
  const __m256d coef = _mm256_setr_pd(a, -a, a, -a);
  __m256d p[4];
  auto emit = [&](double* t, double* s, __m256d v) {
    const __m256d u = _mm256_mul_pd(_mm256_permute_pd(v, 0x5), coef);
    _mm256_storeu_pd(t, u);
    _mm256_storeu_pd(s, _mm256_add_pd(_mm256_loadu_pd(s), u));
  };
  for (std::size_t r = 0; r < h.rows; ++r) {
    double* tr = term + r * width;
    double* ar = acc + r * width;
    std::size_t j = 0;
    for (; j + 16 <= width; j += 16) {
      row_product<4>(h, diag, x, r, j, width, p);
      for (int q = 0; q < 4; ++q) emit(tr + j + 4 * q, ar + j + 4 * q, p[q]);
    }
    for (; j + 4 <= width; j += 4) {
      row_product<1>(h, diag, x, r, j, width, p);
      emit(tr + j, ar + j, p[0]);
    }
    for (; j + 1 < width; j += 2) {
      const double re = tail_product(h, diag, x, r, j, width);
      const double im = tail_product(h, diag, x, r, j + 1, width);
      tr[j] = a * im;
      tr[j + 1] = -a * re;
      ar[j] += tr[j];
      ar[j + 1] += tr[j + 1];
    }
  }
}

void scale(double a, double* x, std::size_t n) {
  const __m256d s = _mm256_set1_pd(a);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) _mm256_storeu_pd(x + j, _mm256_mul_pd(s, _mm256_loadu_pd(x + j)));
  for (; j < n; ++j) x[j] *= a;
}

constexpr KernelTable kTable{Isa::Avx2, &apply_hamiltonian, &taylor_term, &scale};

}  // namespace

const KernelTable& avx2_table() { return kTable; }

}  // namespace qwork::simd::detail
