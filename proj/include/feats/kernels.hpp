#pragma once

// Dense inner-loop kernels behind the tensor ops.
//
// Every kernel has a portable scalar reference and, on x86-64 builds, an
// AVX2+FMA variant. The variant is chosen once per process from CPUID; the
// FEATS_KERNELS environment variable ("scalar" or "avx2") overrides it.
// The two variants agree to rounding (FMA contracts products), so results are
// bitwise reproducible only for a fixed variant.

#include <cstddef>

namespace feats::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  // C[m x n] (+)= A[m x k] * B[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
                  bool accumulate);
  // C[k x n] (+)= A^T * B, with A[m x k] and B[m x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
                  bool accumulate);
  // C[m x n] (+)= A * B^T, with A[m x k] and B[n x k]
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
                  bool accumulate);
  double (*dot)(std::size_t n, const double* a, const double* b);
  // out[r] = sum_c a[r, c] * b[r, c]
  void (*row_dot)(std::size_t rows, std::size_t cols, const double* a, const double* b, double* out);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // out = a * b elementwise; out may alias a or b
  void (*hadamard)(std::size_t n, const double* a, const double* b, double* out);
};

const KernelTable& scalar();

// nullptr when the build or the CPU lacks AVX2 and FMA.
const KernelTable* avx2();

const KernelTable& active();

// Pins the process-wide variant. Throws ConfigError when the variant is unavailable.
void select(Isa isa);

}  // namespace feats::kernels
