#pragma once

#include <cstddef>

#include "holoseis/types.hpp"

// Complex inner-loop kernels. Each has a scalar reference and an AVX2/FMA
// variant; the variant is chosen once at runtime from cpuid. Setting
// HOLOSEIS_SIMD=scalar in the environment forces the reference path.
namespace holoseis::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  // out[i] += x[i] * y[i]
  void (*cmul_acc)(cplx* out, const cplx* x, const cplx* y, std::size_t n);
  // out[i] += x[i] * conj(y[i])
  void (*cmulc_acc)(cplx* out, const cplx* x, const cplx* y, std::size_t n);
  // sum conj(x[i]) * y[i]
  cplx (*cdotc)(const cplx* x, const cplx* y, std::size_t n);
  // sum x[i] * y[i]
  cplx (*cdotu)(const cplx* x, const cplx* y, std::size_t n);
  // out[i] += |x[i]|^2
  void (*abs2_acc)(double* out, const cplx* x, std::size_t n);
  // y[i] += a * x[i]
  void (*caxpy)(cplx a, const cplx* x, cplx* y, std::size_t n);
};

const KernelTable& scalar_table();
const KernelTable& avx2_table();
bool cpu_has_avx2();

Isa active_isa();
void force_isa(Isa isa);
const KernelTable& table();

inline void cmul_acc(cplx* out, const cplx* x, const cplx* y, std::size_t n) { table().cmul_acc(out, x, y, n); }
inline void cmulc_acc(cplx* out, const cplx* x, const cplx* y, std::size_t n) { table().cmulc_acc(out, x, y, n); }
inline cplx cdotc(const cplx* x, const cplx* y, std::size_t n) { return table().cdotc(x, y, n); }
inline cplx cdotu(const cplx* x, const cplx* y, std::size_t n) { return table().cdotu(x, y, n); }
inline void abs2_acc(double* out, const cplx* x, std::size_t n) { table().abs2_acc(out, x, n); }
inline void caxpy(cplx a, const cplx* x, cplx* y, std::size_t n) { table().caxpy(a, x, y, n); }

}  // namespace holoseis::simd
