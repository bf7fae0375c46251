#include "holoseis/simd/kernels.hpp"

namespace holoseis::simd {
namespace ref {

// Written out by components so the result does not depend on how the
// compiler lowers std::complex multiplication (no NaN/inf fixups).
void cmul_acc(cplx* out, const cplx* x, const cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x[i].real(), b = x[i].imag(), c = y[i].real(), d = y[i].imag();
    out[i] += cplx(a * c - b * d, b * c + a * d);
  }
}

void cmulc_acc(cplx* out, const cplx* x, const cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x[i].real(), b = x[i].imag(), c = y[i].real(), d = y[i].imag();
    out[i] += cplx(a * c + b * d, b * c - a * d);
  }
}

cplx cdotc(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x[i].real(), b = x[i].imag(), c = y[i].real(), d = y[i].imag();
    re += a * c + b * d;
    im += a * d - b * c;
  }
  return {re, im};
}

cplx cdotu(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = x[i].real(), b = x[i].imag(), c = y[i].real(), d = y[i].imag();
    re += a * c - b * d;
    im += a * d + b * c;
  }
  return {re, im};
}

void abs2_acc(double* out, const cplx* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
}

void caxpy(cplx a, const cplx* x, cplx* y, std::size_t n) {
  const double ar = a.real(), ai = a.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double c = x[i].real(), d = x[i].imag();
    y[i] += cplx(ar * c - ai * d, ai * c + ar * d);
  }
}

}  // namespace ref

const KernelTable& scalar_table() {
  static const KernelTable t{ref::cmul_acc, ref::cmulc_acc, ref::cdotc, ref::cdotu, ref::abs2_acc, ref::caxpy};
  return t;
}

}  // namespace holoseis::simd
