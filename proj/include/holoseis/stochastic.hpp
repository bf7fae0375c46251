#pragma once

#include <cstdint>
#include <string>

#include "holoseis/greens.hpp"
#include "holoseis/medium.hpp"
#include "holoseis/types.hpp"

namespace holoseis {

// SplitMix64 stream keyed by (seed, stream). Streams are independent of the
// order in which they are consumed, so parallel sampling is reproducible.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t next();
  double uniform();  // (0, 1)
  // Circular complex normal with E|z|^2 = 1.
  cplx complex_normal();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Receiver-space kernel matrix C(r_i, r_j) plus the receiver quadrature.
struct CovarianceOperator {
  CMatrix matrix;
  RVector weights;

  int size() const { return int(matrix.rows()); }
  // <A, B> = Re sum_ij w_i w_j A_ij conj(B_ij)
  double hs_dot(const CMatrix& a, const CMatrix& b) const;
  double hs_norm(const CMatrix& a) const { return std::sqrt(hs_dot(a, a)); }
};

struct RealizationSet {
  CMatrix fields;  // receiver x realization
  std::uint64_t seed = 0;
  double omega = 0.0;
  std::uint64_t grid_hash = 0;

  int count() const { return int(fields.cols()); }
};

// Boundary sources are given as a receiver-space matrix B in weighted form,
// i.e. the receiver block contributes G_RR B G_RR^*. For a multiplication
// operator M_b this is diag(b w).
CovarianceOperator forward_covariance(const RVector& S, const Grid& g, const CMatrix& h_rows,
                                      const CMatrix* boundary = nullptr);
CovarianceOperator forward_covariance(const HelmholtzParams& hp, const PerturbedGreens& gq,
                                      const CMatrix* boundary = nullptr);

// Draws s with Var(s_i) = S_i / w_i and returns fields = G_R (s w). Realization
// n uses stream n of the seed.
RealizationSet sample_wavefields(const RVector& S, const Grid& g, const CMatrix& h_rows, int n, std::uint64_t seed,
                                 const CMatrix* boundary = nullptr, int first = 0);
RealizationSet sample_wavefields(const HelmholtzParams& hp, const PerturbedGreens& gq, int n, std::uint64_t seed,
                                 const CMatrix* boundary = nullptr);

CovarianceOperator empirical_corr(const RealizationSet& r, const RVector& weights);

// (1/N) sum psi_n psi_n^T; vanishes in expectation for circular sources.
CMatrix empirical_pseudo_corr(const RealizationSet& r);

// S = Pi gamma / c^2.
RVector source_cov_from_damping(const MediumParams& p, const FrequencyContext& fc);

// Pi/(4 i omega) (G - conj(G)) on the receivers.
CMatrix imaginary_part_covariance(const CMatrix& g_rr, double omega, double power);

// Covariance of Corr entries for a single draw applied to E:
// (C4 E)(r1, r2) = sum C(r1, r3) E(r3, r4) C(r4, r2), i.e. C E C in the plain
// receiver basis. Divide by N for an N-sample average.
CMatrix isserlis_cov4_apply(const CovarianceOperator& c, const CMatrix& e);

// Archive: magic "HSREALZ1", u64 grid hash, f64 omega, u64 N, u64 seed, then a grid matrix.
void save_realizations(const std::string& path, const RealizationSet& r);
RealizationSet load_realizations(const std::string& path);

}  // namespace holoseis
