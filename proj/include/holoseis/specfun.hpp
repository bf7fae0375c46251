#pragma once

#include <vector>

#include "holoseis/types.hpp"

// Bessel, Hankel and spherical Bessel functions of integer order and complex
// argument. Accuracy targets hold for Re z >= 0 near the real axis, which is
// where damped wavenumbers live; |Im z| up to a few units is fine.
namespace holoseis::specfun {

inline constexpr int kMaxOrder = 200;
inline constexpr double kSeriesCrossover = 12.0;
inline constexpr double kEulerGamma = 0.57721566490153286061;

enum class Family { J, Y, H1, SphJ, SphY, SphH1 };

struct SpecialFunctionResult {
  cplx value;
  int order;
  cplx argument;
};

cplx bessel_j(int n, cplx z);
cplx bessel_y(int n, cplx z);
cplx hankel_h1(int n, cplx z);

enum class SphericalKind { j, y, h1 };
cplx spherical_bessel(SphericalKind kind, int n, cplx z);

SpecialFunctionResult evaluate(Family family, int n, cplx z);

// Orders 0..nmax in one pass; cheaper than repeated scalar calls.
std::vector<cplx> bessel_j_orders(int nmax, cplx z);
std::vector<cplx> bessel_y_orders(int nmax, cplx z);
std::vector<cplx> hankel_h1_orders(int nmax, cplx z);
std::vector<cplx> spherical_j_orders(int nmax, cplx z);
std::vector<cplx> spherical_h1_orders(int nmax, cplx z);

}  // namespace holoseis::specfun
