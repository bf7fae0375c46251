#pragma once

#include <array>
#include <memory>
#include <vector>

#include "holoseis/greens.hpp"
#include "holoseis/medium.hpp"
#include "holoseis/stochastic.hpp"

namespace holoseis {

// Diag(a b)(x_i) = sum_r a(i, r) b(r, i), a: interior x receiver, b: receiver x interior.
CVector diag_product(const CMatrix& a, const CMatrix& b);

// How the S-weighted ingression G S G^* is formed.
enum class BetaMode { exact, imaginary_part };

// Everything the derivative and adjoint need at one frequency, linearised
// about the current medium. Matrices in "weighted" form carry the receiver
// quadrature as W^{1/2} on the receiver side.
struct FrequencyModel {
  std::shared_ptr<const Grid> grid;
  MediumParams medium;
  FrequencyContext freq;
  HelmholtzParams hp;
  std::shared_ptr<const PerturbedGreens> green;
  CMatrix boundary;  // weighted-form boundary source, empty if none

  CMatrix h_int;      // G_q at (receiver, interior)
  CMatrix beta_star;  // interior x receiver: G_q Sigma G_q^* restricted
  CovarianceOperator cov;
  RVector w_int, w_rec;

  int n_interior() const { return int(w_int.size()); }
  int n_receivers() const { return int(w_rec.size()); }
  const Stencil& stencil() const { return *medium.stencil; }
};

FrequencyModel build_frequency_model(std::shared_ptr<const GreensOperator> g0, const MediumParams& p,
                                     const FrequencyContext& fc, const CMatrix* boundary = nullptr,
                                     BetaMode mode = BetaMode::exact);

// Receiver-to-interior propagators. h_beta_flow holds grad(H_beta / (rho^{1/2} c))
// for flow components; empty otherwise.
struct PropagatorPair {
  Quantity quantity = Quantity::S;
  CMatrix h_alpha, h_beta;
  std::array<CMatrix, 2> h_beta_flow;
  RVector pupil_alpha, pupil_beta;  // receiver masks (1 keep, 0 drop)
};

PropagatorPair build_propagators(Quantity q, const FrequencyModel& m, const RVector* pupil_alpha = nullptr,
                                 const RVector* pupil_beta = nullptr);

// dC for a parameter perturbation (only the fields present in dq are used).
CMatrix apply_derivative(const FrequencyModel& m, const ParamFields& dq);

// L^2 dual of D under the weighted HS pairing, for the listed quantities.
ParamFields apply_adjoint(const FrequencyModel& m, const CMatrix& d, const std::vector<Quantity>& qs);

// (1/N) sum (H_a^* psi_n) conj(H_b^* psi_n) with receiver quadrature and pupils.
CVector backprop_realizations(const PropagatorPair& pair, const RealizationSet& r, const RVector& w_rec);
// Lindsey-Braun: H_a = H_b = G_q restricted to the receivers.
CVector hologram_intensity(const FrequencyModel& m, const RealizationSet& r, const RVector* pupil = nullptr);
// Expected hologram Diag(H_a^* C H_b) for a given receiver covariance.
CVector hologram_expectation(const PropagatorPair& pair, const CMatrix& c, const RVector& w_rec);

// Lavrentiev weight in weighted receiver coordinates: (beta I + W^{1/2} C W^{1/2})^{-1}.
struct NoiseWeight {
  CMatrix gamma;
  double beta = 0.0;
  RVector w_rec;

  // Gamma D Gamma as a receiver kernel matrix.
  CMatrix apply(const CMatrix& d) const;
  // ||Gamma^{1/2} D Gamma^{1/2}||_HS^2 for Hermitian D.
  double misfit2(const CMatrix& d) const;
};

NoiseWeight identity_weight(const RVector& w_rec);

// F = X^* Gamma Y with X, Y receiver x interior propagators.
CMatrix forward_backward(const CMatrix& x, const CMatrix& y, const NoiseWeight& w);

// Integral kernel of C'^*(Gamma x Gamma)C' between q (rows) and q' (columns):
// (N dq)(x) = sum_y w_y K(x, y) dq(y). Flow blocks are stacked (x, y components).
RMatrix sensitivity_kernel(Quantity q, Quantity qp, const FrequencyModel& m, const NoiseWeight& w);
// Selected rows of the same kernel; only for quantities without stencil channels.
RMatrix kernel_rows(Quantity q, Quantity qp, const FrequencyModel& m, const NoiseWeight& w,
                    const std::vector<int>& rows);

// Symmetric Gaussian smoothing on the lattice, rows normalised to one in the bulk.
RMatrix gaussian_smoother(const Lattice& lat, double width);

}  // namespace holoseis
