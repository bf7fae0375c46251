// Compiled with -mavx2 -mfma; only reached after cpu_has_avx2() said yes.
#include <immintrin.h>

#include "holoseis/simd/kernels.hpp"

namespace holoseis::simd {
namespace avx {

// Two complex numbers per register: [re0 im0 re1 im1].
inline __m256d load(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }

// x*y
inline __m256d mul(__m256d x, __m256d y) {
  const __m256d yr = _mm256_movedup_pd(y);
  const __m256d yi = _mm256_permute_pd(y, 0xF);
  const __m256d xs = _mm256_permute_pd(x, 0x5);
  return _mm256_fmaddsub_pd(x, yr, _mm256_mul_pd(xs, yi));
}

// x*conj(y)
inline __m256d mulc(__m256d x, __m256d y) {
  const __m256d yr = _mm256_movedup_pd(y);
  const __m256d yi = _mm256_permute_pd(y, 0xF);
  const __m256d xs = _mm256_permute_pd(x, 0x5);
  return _mm256_fmsubadd_pd(x, yr, _mm256_mul_pd(xs, yi));
}

inline cplx hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return {_mm_cvtsd_f64(s), _mm_cvtsd_f64(_mm_unpackhi_pd(s, s))};
}

void cmul_acc(cplx* out, const cplx* x, const cplx* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store(out + i, _mm256_add_pd(load(out + i), mul(load(x + i), load(y + i))));
  if (i < n) scalar_table().cmul_acc(out + i, x + i, y + i, n - i);
}

void cmulc_acc(cplx* out, const cplx* x, const cplx* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store(out + i, _mm256_add_pd(load(out + i), mulc(load(x + i), load(y + i))));
  if (i < n) scalar_table().cmulc_acc(out + i, x + i, y + i, n - i);
}

cplx cdotc(const cplx* x, const cplx* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, mulc(load(y + i), load(x + i)));
    acc1 = _mm256_add_pd(acc1, mulc(load(y + i + 2), load(x + i + 2)));
  }
  for (; i + 2 <= n; i += 2) acc0 = _mm256_add_pd(acc0, mulc(load(y + i), load(x + i)));
  cplx s = hsum(_mm256_add_pd(acc0, acc1));
  if (i < n) s += scalar_table().cdotc(x + i, y + i, n - i);
  return s;
}

cplx cdotu(const cplx* x, const cplx* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, mul(load(x + i), load(y + i)));
    acc1 = _mm256_add_pd(acc1, mul(load(x + i + 2), load(y + i + 2)));
  }
  for (; i + 2 <= n; i += 2) acc0 = _mm256_add_pd(acc0, mul(load(x + i), load(y + i)));
  cplx s = hsum(_mm256_add_pd(acc0, acc1));
  if (i < n) s += scalar_table().cdotu(x + i, y + i, n - i);
  return s;
}

void abs2_acc(double* out, const cplx* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = load(x + i), b = load(x + i + 2);
    // hadd gives [|x0|^2 |x2|^2 |x1|^2 |x3|^2]; fix the lane order after.
    const __m256d s = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
    const __m256d o = _mm256_permute4x64_pd(s, 0xD8);
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), o));
  }
  if (i < n) scalar_table().abs2_acc(out + i, x + i, n - i);
}

void caxpy(cplx a, const cplx* x, cplx* y, std::size_t n) {
  const __m256d av = _mm256_setr_pd(a.real(), a.imag(), a.real(), a.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store(y + i, _mm256_add_pd(load(y + i), mul(av, load(x + i))));
  if (i < n) scalar_table().caxpy(a, x + i, y + i, n - i);
}

}  // namespace avx

const KernelTable& avx2_table() {
  static const KernelTable t{avx::cmul_acc, avx::cmulc_acc, avx::cdotc, avx::cdotu, avx::abs2_acc, avx::caxpy};
  return t;
}

}  // namespace holoseis::simd
