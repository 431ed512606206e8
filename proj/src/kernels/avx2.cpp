// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// is only entered after the dispatcher has confirmed CPU support.

#include "feats/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace feats::kernels::detail {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256i tail_mask(std::size_t remaining) {
  alignas(32) static const long long table[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 4 - remaining));
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// Shared microkernel for C = op(A) * B where row p of B is broadcast-multiplied by
// a coefficient a(r, p). The strides `a_rs`/`a_cs` select A or A^T.
template <std::size_t Rows>
inline void block(std::size_t n, std::size_t k, const double* a, std::size_t a_rs, std::size_t a_cs,
                  const double* b, double* c, bool accumulate) {
  std::size_t j = 0;
  for (; j + kLanes <= n; j += kLanes) {
    __m256d acc[Rows];
    for (std::size_t r = 0; r < Rows; ++r)
      acc[r] = accumulate ? _mm256_loadu_pd(c + r * n + j) : _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d bv = _mm256_loadu_pd(b + p * n + j);
      for (std::size_t r = 0; r < Rows; ++r)
        acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * a_rs + p * a_cs), bv, acc[r]);
    }
    for (std::size_t r = 0; r < Rows; ++r) _mm256_storeu_pd(c + r * n + j, acc[r]);
  }
  if (j < n) {
    const __m256i mask = tail_mask(n - j);
    __m256d acc[Rows];
    for (std::size_t r = 0; r < Rows; ++r)
      acc[r] = accumulate ? _mm256_maskload_pd(c + r * n + j, mask) : _mm256_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d bv = _mm256_maskload_pd(b + p * n + j, mask);
      for (std::size_t r = 0; r < Rows; ++r)
        acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * a_rs + p * a_cs), bv, acc[r]);
    }
    for (std::size_t r = 0; r < Rows; ++r) _mm256_maskstore_pd(c + r * n + j, mask, acc[r]);
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) block<4>(n, k, a + i * k, k, 1, b, c + i * n, accumulate);
  for (; i < m; ++i) block<1>(n, k, a + i * k, k, 1, b, c + i * n, accumulate);
}

// C[k x n] = A^T B: output row p uses column p of A as coefficients over the m rows of B.
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) block<4>(n, m, a + p, 1, k, b, c + p * n, accumulate);
  for (; p < k; ++p) block<1>(n, m, a + p, 1, k, b, c + p * n, accumulate);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  // B is a small weight matrix in every caller; transpose it once and reuse the nn path.
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  gemm_nn(m, n, k, a, bt.data(), c, accumulate);
}

double dot(std::size_t n, const double* a, const double* b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    acc = _mm256_fmadd_pd(_mm256_maskload_pd(a + i, mask), _mm256_maskload_pd(b + i, mask), acc);
  }
  return hsum(acc);
}

void row_dot(std::size_t rows, std::size_t cols, const double* a, const double* b, double* out) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot(cols, a + r * cols, b + r * cols);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void hadamard(std::size_t n, const double* a, const double* b, double* out) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

constexpr KernelTable kAvx2{Isa::Avx2, "avx2", gemm_nn, gemm_tn, gemm_nt, dot, row_dot, axpy, hadamard};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace feats::kernels::detail

#else

namespace feats::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace feats::kernels::detail

#endif
