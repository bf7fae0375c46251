#include "holoseis/specfun.hpp"

#include <cmath>
#include <string>

#include "holoseis/errors.hpp"

namespace holoseis::specfun {
namespace {

constexpr double kEps = 1e-17;
constexpr double kRescale = 1e250;
constexpr double kArgLimit = 1e4;

void check_order(int n) {
  if (n < 0 || n > kMaxOrder)
    throw DomainError("order " + std::to_string(n) + " outside [0, 200]");
}

void check_argument(cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError("non-finite argument");
  if (std::abs(z) > kArgLimit) throw DomainError("|z| > 1e4: overflow guard");
}

void check_singular(cplx z, const char* what) {
  if (z == cplx(0.0)) throw SingularityError(std::string(what) + " is singular at z = 0");
  if (z.real() < 0.0) throw DomainError(std::string(what) + " requires Re z >= 0");
}

// (z/2)^n / n! * sum_k (-z^2/4)^k / (k! (n+1)_k)
cplx j_series(int n, cplx z) {
  if (z == cplx(0.0)) return n == 0 ? 1.0 : 0.0;
  const cplx half = 0.5 * z;
  const cplx lead = n == 0 ? cplx(1.0) : std::exp(double(n) * std::log(half) - std::lgamma(n + 1.0));
  const cplx q = -half * half;
  cplx term = 1.0, sum = 1.0;
  const double ah = std::abs(half);
  for (int k = 1; k < 600; ++k) {
    term *= q / (double(k) * double(n + k));
    sum += term;
    if (k > ah && std::abs(term) < kEps * std::abs(sum)) break;
  }
  return lead * sum;
}

double digamma_int(int m) {  // psi(m), m >= 1
  double s = -kEulerGamma;
  for (int j = 1; j < m; ++j) s += 1.0 / j;
  return s;
}

// Y_n for n in {0,1} by the logarithmic series, |z| moderate.
cplx y_series(int n, cplx z, cplx jn) {
  const cplx half = 0.5 * z;
  const cplx q = half * half;
  cplx head = 0.0;
  if (n == 1) head = -1.0 / (kPi * half);
  cplx tail = 0.0;
  cplx term = n == 0 ? cplx(1.0) : half;  // (z/2)^n (-q)^k / (k!(n+k)!)
  term /= std::tgamma(n + 1.0);
  double psi_a = digamma_int(1), psi_b = digamma_int(n + 1);
  const double ah = std::abs(half);
  for (int k = 0; k < 600; ++k) {
    const cplx add = (psi_a + psi_b) * term;
    tail += add;
    if (k > ah && std::abs(add) < kEps * std::abs(tail)) break;
    term *= -q / (double(k + 1) * double(n + k + 1));
    psi_a += 1.0 / (k + 1);
    psi_b += 1.0 / (n + k + 1);
  }
  return head + (2.0 / kPi) * std::log(half) * jn - tail / kPi;
}

// Hankel asymptotic series for nu in {0,1}; sign = +1 gives H1, -1 gives H2.
cplx hankel_asymptotic(int nu, cplx z, int sign) {
  const double mu = 4.0 * nu * nu;
  const cplx is = sign > 0 ? kI : -kI;
  cplx term = 1.0, sum = 1.0;
  double prev = 1e300;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= is * (mu - odd * odd) / (8.0 * k * z);
    const double mag = std::abs(term);
    if (mag > prev) break;
    sum += term;
    prev = mag;
    if (mag < kEps * std::abs(sum)) break;
  }
  const cplx phase = z - (0.5 * nu + 0.25) * kPi;
  return std::sqrt(2.0 / (kPi * z)) * std::exp(is * phase) * sum;
}

int miller_start(int nmax, cplx z) {
  const double az = std::abs(z);
  return std::max(nmax, int(std::ceil(az))) + 20 + int(std::ceil(8.0 * std::cbrt(az)));
}

// Backward recurrence f_{n-1} = (a n + b)/z f_n - f_{n+1}, normalized by least
// squares against the two known lowest orders so zeros of either do not hurt.
std::vector<cplx> miller(int nmax, cplx z, double a, double b, cplx f0, cplx f1) {
  const int start = miller_start(std::max(nmax, 1), z);
  std::vector<cplx> f(start + 2, 0.0);
  f[start] = 1.0;
  for (int n = start; n >= 1; --n) {
    f[n - 1] = ((a * n + b) / z) * f[n] - f[n + 1];
    if (std::abs(f[n - 1]) > kRescale) {
      for (int m = n - 1; m <= start; ++m) f[m] /= kRescale;
    }
  }
  // Scale first: |f0|^2 can overflow even when f0 itself is representable.
  const double m = std::max(std::abs(f[0]), std::abs(f[1]));
  const cplx g0 = f[0] / m, g1 = f[1] / m;
  const cplx s = (std::conj(g0) * f0 + std::conj(g1) * f1) / ((std::norm(g0) + std::norm(g1)) * m);
  std::vector<cplx> out(nmax + 1);
  for (int n = 0; n <= nmax; ++n) out[n] = s * f[n];
  return out;
}

std::vector<cplx> forward(int nmax, cplx z, double a, double b, cplx f0, cplx f1) {
  std::vector<cplx> out(nmax + 1);
  out[0] = f0;
  if (nmax >= 1) out[1] = f1;
  for (int n = 1; n < nmax; ++n) out[n + 1] = ((a * n + b) / z) * out[n] - out[n - 1];
  return out;
}

std::vector<cplx> j_orders_upper(int nmax, cplx z) {
  std::vector<cplx> out(nmax + 1);
  if (std::abs(z) <= kSeriesCrossover) {
    for (int n = 0; n <= nmax; ++n) out[n] = j_series(n, z);
    return out;
  }
  const cplx j0 = 0.5 * (hankel_asymptotic(0, z, 1) + hankel_asymptotic(0, z, -1));
  const cplx j1 = 0.5 * (hankel_asymptotic(1, z, 1) + hankel_asymptotic(1, z, -1));
  if (nmax == 0) return {j0};
  return miller(nmax, z, 2.0, 0.0, j0, j1);
}

void y01(cplx z, cplx& y0, cplx& y1) {
  if (std::abs(z) <= kSeriesCrossover) {
    y0 = y_series(0, z, j_series(0, z));
    y1 = y_series(1, z, j_series(1, z));
  } else {
    y0 = (hankel_asymptotic(0, z, 1) - hankel_asymptotic(0, z, -1)) / (2.0 * kI);
    y1 = (hankel_asymptotic(1, z, 1) - hankel_asymptotic(1, z, -1)) / (2.0 * kI);
  }
}

cplx sph_j_series(int n, cplx z) {
  if (z == cplx(0.0)) return n == 0 ? 1.0 : 0.0;
  // z^n / (2n+1)!!, with log((2n+1)!!) = lgamma(2n+2) - n log 2 - lgamma(n+1)
  const double logdf = std::lgamma(2.0 * n + 2.0) - n * std::log(2.0) - std::lgamma(n + 1.0);
  const cplx lead = n == 0 ? cplx(1.0) : std::exp(double(n) * std::log(z) - logdf);
  const cplx q = -0.5 * z * z;
  cplx term = 1.0, sum = 1.0;
  for (int k = 1; k < 600; ++k) {
    term *= q / (double(k) * (2.0 * n + 2.0 * k + 1.0));
    sum += term;
    if (k > std::abs(z) && std::abs(term) < kEps * std::abs(sum)) break;
  }
  return lead * sum;
}

}  // namespace

std::vector<cplx> bessel_j_orders(int nmax, cplx z) {
  check_order(nmax);
  check_argument(z);
  bool flip = false;
  if (z.real() < 0.0) {
    z = -z;
    flip = true;
  }
  // Compute in the upper half plane only so that conj symmetry is exact.
  const bool lower = z.imag() < 0.0;
  std::vector<cplx> out = j_orders_upper(nmax, lower ? std::conj(z) : z);
  for (int n = 0; n <= nmax; ++n) {
    if (lower) out[n] = std::conj(out[n]);
    if (flip && (n & 1)) out[n] = -out[n];
  }
  return out;
}

std::vector<cplx> bessel_y_orders(int nmax, cplx z) {
  check_order(nmax);
  check_argument(z);
  check_singular(z, "Y_n");
  const bool lower = z.imag() < 0.0;
  const cplx w = lower ? std::conj(z) : z;
  cplx y0, y1;
  y01(w, y0, y1);
  std::vector<cplx> out = forward(nmax, w, 2.0, 0.0, y0, y1);
  if (lower)
    for (auto& v : out) v = std::conj(v);
  return out;
}

std::vector<cplx> hankel_h1_orders(int nmax, cplx z) {
  check_order(nmax);
  check_argument(z);
  check_singular(z, "H1_n");
  if (std::abs(z) <= kSeriesCrossover) {
    const auto j = bessel_j_orders(nmax, z);
    const auto y = bessel_y_orders(nmax, z);
    std::vector<cplx> out(nmax + 1);
    for (int n = 0; n <= nmax; ++n) out[n] = j[n] + kI * y[n];
    return out;
  }
  return forward(nmax, z, 2.0, 0.0, hankel_asymptotic(0, z, 1), hankel_asymptotic(1, z, 1));
}

std::vector<cplx> spherical_j_orders(int nmax, cplx z) {
  check_order(nmax);
  check_argument(z);
  std::vector<cplx> out(nmax + 1);
  if (std::abs(z) < 1.0) {
    for (int n = 0; n <= nmax; ++n) out[n] = sph_j_series(n, z);
    return out;
  }
  const cplx s = std::sin(z), c = std::cos(z);
  const cplx j0 = s / z;
  const cplx j1 = s / (z * z) - c / z;
  if (nmax == 0) return {j0};
  return miller(nmax, z, 2.0, 1.0, j0, j1);
}

std::vector<cplx> spherical_h1_orders(int nmax, cplx z) {
  check_order(nmax);
  check_argument(z);
  check_singular(z, "h1_n");
  const cplx e = std::exp(kI * z);
  const cplx h0 = -kI * e / z;
  const cplx h1 = -e * (z + kI) / (z * z);
  return forward(nmax, z, 2.0, 1.0, h0, h1);
}

cplx bessel_j(int n, cplx z) { return bessel_j_orders(n, z)[n]; }
cplx bessel_y(int n, cplx z) { return bessel_y_orders(n, z)[n]; }

cplx hankel_h1(int n, cplx z) {
  if (n > 1) return hankel_h1_orders(n, z)[n];
  // Allocation-free path for the orders the Green's functions hit per entry.
  check_order(n);
  check_argument(z);
  check_singular(z, "H1_n");
  if (std::abs(z) > kSeriesCrossover) return hankel_asymptotic(n, z, 1);
  const bool lower = z.imag() < 0.0;
  const cplx w = lower ? std::conj(z) : z;
  const cplx j = j_series(n, w);
  cplx y = y_series(n, w, j);
  cplx jj = j;
  if (lower) {
    jj = std::conj(j);
    y = std::conj(y);
  }
  return jj + kI * y;
}

cplx spherical_bessel(SphericalKind kind, int n, cplx z) {
  switch (kind) {
    case SphericalKind::j:
      return spherical_j_orders(n, z)[n];
    case SphericalKind::h1:
      return spherical_h1_orders(n, z)[n];
    case SphericalKind::y: {
      check_order(n);
      check_argument(z);
      check_singular(z, "y_n");
      const cplx s = std::sin(z), c = std::cos(z);
      return forward(n, z, 2.0, 1.0, -c / z, -c / (z * z) - s / z)[n];
    }
  }
  throw UsageError("unknown spherical kind");
}

SpecialFunctionResult evaluate(Family family, int n, cplx z) {
  cplx v;
  switch (family) {
    case Family::J: v = bessel_j(n, z); break;
    case Family::Y: v = bessel_y(n, z); break;
    case Family::H1: v = hankel_h1(n, z); break;
    case Family::SphJ: v = spherical_bessel(SphericalKind::j, n, z); break;
    case Family::SphY: v = spherical_bessel(SphericalKind::y, n, z); break;
    case Family::SphH1: v = spherical_bessel(SphericalKind::h1, n, z); break;
  }
  return {v, n, z};
}

}  // namespace holoseis::specfun
