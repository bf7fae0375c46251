#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>

#include "holoseis/stencil.hpp"
#include "holoseis/types.hpp"

namespace holoseis {

enum class Quantity { S, c, rho, gamma, u };

Quantity parse_quantity(const std::string& name);
std::string to_string(Quantity q);

// One field per physical parameter on the interior lattice. Empty vectors mean
// "absent" when the struct is used as a perturbation.
struct ParamFields {
  RVector S, c, rho, gamma;
  std::array<RVector, 2> u;

  static ParamFields zeros(int n);
  bool has(Quantity q) const;
  double dot(const ParamFields& o) const;  // plain sum over present fields
  double norm() const { return std::sqrt(dot(*this)); }
  ParamFields& axpy(double a, const ParamFields& x);  // this += a x on fields present in both
  ParamFields restricted(Quantity q) const;           // keeps only q
};

struct MediumParams {
  std::shared_ptr<const Stencil> stencil;
  ParamFields f;
  // Uniform background outside the interior; also the k^2 reference.
  double c0 = 1.0, rho0 = 1.0, gamma0 = 0.0;
  double c_min = 1e-3, rho_min = 1e-6;

  int size() const { return stencil ? stencil->size() : 0; }
  void validate() const;
};

MediumParams uniform_medium(std::shared_ptr<const Stencil> st, double c0, double rho0, double gamma0, double S0);

struct FrequencyContext {
  double omega = 1.0;
  double power_spectrum = 1.0;
  int n_frequencies = 1;
  double band_min = 0.0, band_max = 0.0;
};

struct HelmholtzParams {
  CVector v;
  std::array<RVector, 2> A;
  RVector S;
  cplx k_ref = 0.0;
  double omega = 0.0;
};

// k^2 = (omega^2 + 2i omega gamma0)/c0^2; the density scale-height term is dropped.
cplx reference_wavenumber(double omega, double c0, double gamma0);

HelmholtzParams recast(const MediumParams& p, const FrequencyContext& fc);

// [d_q v](dq) = order0 dq + order1 . grad dq + order2 lap dq for scalar q.
// For q = u the perturbation is a vector: order0_vec . du + div_coeff div(du).
struct PartialV {
  CVector order0, order2;
  std::array<CVector, 2> order1;
  std::array<CVector, 2> order0_vec;
  CVector div_coeff;
};

PartialV partial_v(Quantity q, const MediumParams& p, const FrequencyContext& fc);
CVector apply_partial_v(const PartialV& g, const Stencil& st, const RVector& dq);
CVector apply_partial_v(const PartialV& g, const Stencil& st, const std::array<RVector, 2>& du);

std::array<RVector, 2> partial_A(Quantity q, const MediumParams& p, const FrequencyContext& fc, const RVector& dq);
std::array<RVector, 2> partial_A(const MediumParams& p, const FrequencyContext& fc, const std::array<RVector, 2>& du);

// Linearised Helmholtz perturbation (dv, dA) for a mixed parameter perturbation.
void linearize(const MediumParams& p, const FrequencyContext& fc, const ParamFields& dq, CVector& dv,
               std::array<RVector, 2>& dA);

// Per-frequency damping of the solar surface layer (rad/s in, 1/s out).
double damping_profile(double omega);

// ||Div(rho u)|| / ||rho u||; zero for u = 0.
double mass_flux_divergence(const MediumParams& p);

// Analytic shapes used by presets: value at lattice node i relative to 1.
enum class Shape { uniform, gaussian_blob, block };
Shape parse_shape(const std::string& name);
RVector shape_field(const Lattice& lat, Shape s, double cx, double cy, double half_width);

}  // namespace holoseis
