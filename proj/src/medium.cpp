#include "holoseis/medium.hpp"

#include <cmath>

#include "holoseis/errors.hpp"

namespace holoseis {
namespace {

void need(const RVector& v, int n, const char* what) {
  if (v.size() != n) throw UsageError(std::string("field ") + what + " has the wrong length");
}

// (omega^2 + 2i omega gamma) / c^2, written once so the background value and
// the nodal values cancel exactly in a uniform medium.
cplx helm_term(double w, double gamma, double c) { return cplx(w * w, 2.0 * w * gamma) / (c * c); }

bool has_flow(const ParamFields& f) { return f.u[0].size() && f.u[1].size(); }

}  // namespace

Quantity parse_quantity(const std::string& s) {
  if (s == "S") return Quantity::S;
  if (s == "c") return Quantity::c;
  if (s == "rho") return Quantity::rho;
  if (s == "gamma") return Quantity::gamma;
  if (s == "u") return Quantity::u;
  throw UsageError("unknown quantity '" + s + "'");
}

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::S: return "S";
    case Quantity::c: return "c";
    case Quantity::rho: return "rho";
    case Quantity::gamma: return "gamma";
    case Quantity::u: return "u";
  }
  return "?";
}

ParamFields ParamFields::zeros(int n) {
  ParamFields f;
  f.S = f.c = f.rho = f.gamma = RVector::Zero(n);
  f.u = {RVector::Zero(n), RVector::Zero(n)};
  return f;
}

bool ParamFields::has(Quantity q) const {
  switch (q) {
    case Quantity::S: return S.size() > 0;
    case Quantity::c: return c.size() > 0;
    case Quantity::rho: return rho.size() > 0;
    case Quantity::gamma: return gamma.size() > 0;
    case Quantity::u: return u[0].size() > 0;
  }
  return false;
}

double ParamFields::dot(const ParamFields& o) const {
  double s = 0.0;
  auto acc = [&](const RVector& a, const RVector& b) {
    if (a.size() && b.size()) s += a.dot(b);
  };
  acc(S, o.S);
  acc(c, o.c);
  acc(rho, o.rho);
  acc(gamma, o.gamma);
  acc(u[0], o.u[0]);
  acc(u[1], o.u[1]);
  return s;
}

ParamFields& ParamFields::axpy(double a, const ParamFields& x) {
  auto go = [&](RVector& y, const RVector& v) {
    if (y.size() && v.size()) y += a * v;
  };
  go(S, x.S);
  go(c, x.c);
  go(rho, x.rho);
  go(gamma, x.gamma);
  go(u[0], x.u[0]);
  go(u[1], x.u[1]);
  return *this;
}

ParamFields ParamFields::restricted(Quantity q) const {
  ParamFields r;
  switch (q) {
    case Quantity::S: r.S = S; break;
    case Quantity::c: r.c = c; break;
    case Quantity::rho: r.rho = rho; break;
    case Quantity::gamma: r.gamma = gamma; break;
    case Quantity::u: r.u = u; break;
  }
  return r;
}

void MediumParams::validate() const {
  if (!stencil) throw UsageError("medium has no lattice");
  const int n = size();
  need(f.c, n, "c");
  need(f.rho, n, "rho");
  need(f.gamma, n, "gamma");
  need(f.S, n, "S");
  need(f.u[0], n, "u_x");
  need(f.u[1], n, "u_y");
  if (!(f.c.minCoeff() >= c_min)) throw InvalidParameter("sound speed below floor");
  if (!(f.rho.minCoeff() >= rho_min)) throw InvalidParameter("density below floor");
  if (!(f.gamma.minCoeff() >= 0.0)) throw InvalidParameter("negative damping");
  if (!(f.S.minCoeff() >= 0.0)) throw InvalidParameter("negative source strength");
  if (!(c0 >= c_min) || !(rho0 >= rho_min) || gamma0 < 0.0) throw InvalidParameter("invalid background");
}

MediumParams uniform_medium(std::shared_ptr<const Stencil> st, double c0, double rho0, double gamma0, double S0) {
  MediumParams p;
  const int n = st->size();
  p.stencil = std::move(st);
  p.c0 = c0;
  p.rho0 = rho0;
  p.gamma0 = gamma0;
  p.f.c = RVector::Constant(n, c0);
  p.f.rho = RVector::Constant(n, rho0);
  p.f.gamma = RVector::Constant(n, gamma0);
  p.f.S = RVector::Constant(n, S0);
  p.f.u = {RVector::Zero(n), RVector::Zero(n)};
  return p;
}

cplx reference_wavenumber(double omega, double c0, double gamma0) {
  return std::sqrt(cplx(omega * omega, 2.0 * omega * gamma0)) / c0;
}

HelmholtzParams recast(const MediumParams& p, const FrequencyContext& fc) {
  p.validate();
  if (!(fc.omega > 0.0)) throw UsageError("frequency must be positive");
  const Stencil& st = *p.stencil;
  const double w = fc.omega;
  const RVector& c = p.f.c;
  const RVector& rho = p.f.rho;
  const int n = p.size();

  HelmholtzParams hp;
  hp.omega = w;
  hp.k_ref = reference_wavenumber(w, p.c0, p.gamma0);
  const cplx k2 = helm_term(w, p.gamma0, p.c0);
  const RVector c2 = c.array().square();

  hp.v.resize(n);
  for (int i = 0; i < n; ++i) hp.v[i] = k2 - helm_term(w, p.f.gamma[i], c[i]);

  // rho^{1/2} lap rho^{-1/2}, expanded so that its linearisation is exactly
  // expressible with the same stencils acting on the perturbation. Stencils
  // act on deviations from the background so uniform media give exact zeros.
  const RVector drho = rho.array() - p.rho0;
  const RVector lr = st.lap * drho;
  const RVector gx = st.dx * drho, gy = st.dy * drho;
  hp.v.array() += (-0.5 * lr.array() / rho.array() +
                   0.75 * (gx.array().square() + gy.array().square()) / rho.array().square())
                      .cast<cplx>();

  const auto& u = p.f.u;
  const RVector divu = st.dx * u[0] + st.dy * u[1];
  const RVector dc = c.array() - p.c0;
  const RVector ugc = u[0].cwiseProduct(st.dx * dc) + u[1].cwiseProduct(st.dy * dc);
  // Advection term in divergence form, valid when div(rho u) = 0.
  hp.v.array() += kI * w * (-divu.array() / c2.array() + 2.0 * ugc.array() / (c2.array() * c.array()));

  hp.A = {w * u[0].cwiseQuotient(c2), w * u[1].cwiseQuotient(c2)};
  hp.S = p.f.S;
  return hp;
}

PartialV partial_v(Quantity q, const MediumParams& p, const FrequencyContext& fc) {
  p.validate();
  const Stencil& st = *p.stencil;
  const int n = p.size();
  const double w = fc.omega;
  const RVector& c = p.f.c;
  const RVector& rho = p.f.rho;
  const auto& u = p.f.u;
  PartialV g;
  g.order0 = g.order2 = CVector::Zero(n);
  g.order1 = {CVector::Zero(n), CVector::Zero(n)};
  const auto c2 = c.array().square();
  const auto c3 = c2 * c.array();

  switch (q) {
    case Quantity::gamma:
      g.order0.array() = (-2.0 * kI * w) / c2.cast<cplx>();
      break;
    case Quantity::c: {
      const RVector divu = st.dx * u[0] + st.dy * u[1];
      const RVector dc = c.array() - p.c0;
      const RVector ugc = u[0].cwiseProduct(st.dx * dc) + u[1].cwiseProduct(st.dy * dc);
      g.order0.array() = 2.0 * (w * w + 2.0 * kI * w * p.f.gamma.array()) / c3 +
                         2.0 * kI * w * divu.array() / c3 - 6.0 * kI * w * ugc.array() / (c3 * c.array());
      for (int d = 0; d < 2; ++d) g.order1[d].array() = (2.0 * kI * w) * (u[d].array() / c3).cast<cplx>();
      break;
    }
    case Quantity::rho: {
      const RVector drho = rho.array() - p.rho0;
      const RVector lr = st.lap * drho;
      const RVector gx = st.dx * drho, gy = st.dy * drho;
      const auto r2 = rho.array().square();
      g.order2.array() = (-0.5 / rho.array()).cast<cplx>();
      g.order1[0].array() = (1.5 * gx.array() / r2).cast<cplx>();
      g.order1[1].array() = (1.5 * gy.array() / r2).cast<cplx>();
      g.order0.array() =
          (0.5 * lr.array() / r2 - 1.5 * (gx.array().square() + gy.array().square()) / (r2 * rho.array()))
              .cast<cplx>();
      break;
    }
    case Quantity::u: {
      const RVector dc = c.array() - p.c0;
      const RVector cx = st.dx * dc, cy = st.dy * dc;
      g.order0_vec = {CVector((2.0 * kI * w) * (cx.array() / c3).cast<cplx>()),
                      CVector((2.0 * kI * w) * (cy.array() / c3).cast<cplx>())};
      g.div_coeff = (-kI * w) / c2.cast<cplx>();
      break;
    }
    case Quantity::S:
      break;
  }
  return g;
}

CVector apply_partial_v(const PartialV& g, const Stencil& st, const RVector& dq) {
  CVector out = g.order0.cwiseProduct(dq.cast<cplx>());
  if (g.order1[0].cwiseAbs().maxCoeff() > 0.0 || g.order1[1].cwiseAbs().maxCoeff() > 0.0) {
    const RVector dx = st.dx * dq, dy = st.dy * dq;
    out += g.order1[0].cwiseProduct(dx.cast<cplx>()) + g.order1[1].cwiseProduct(dy.cast<cplx>());
  }
  if (g.order2.cwiseAbs().maxCoeff() > 0.0) out += g.order2.cwiseProduct((st.lap * dq).cast<cplx>());
  return out;
}

CVector apply_partial_v(const PartialV& g, const Stencil& st, const std::array<RVector, 2>& du) {
  if (!g.div_coeff.size()) throw UsageError("vector perturbation needs flow coefficients");
  const RVector div = st.dx * du[0] + st.dy * du[1];
  return g.order0_vec[0].cwiseProduct(du[0].cast<cplx>()) + g.order0_vec[1].cwiseProduct(du[1].cast<cplx>()) +
         g.div_coeff.cwiseProduct(div.cast<cplx>());
}

std::array<RVector, 2> partial_A(Quantity q, const MediumParams& p, const FrequencyContext& fc, const RVector& dq) {
  const int n = p.size();
  std::array<RVector, 2> out{RVector::Zero(n), RVector::Zero(n)};
  if (q == Quantity::c) {
    const RVector s = (-2.0 * fc.omega) * dq.array() / p.f.c.array().cube();
    for (int d = 0; d < 2; ++d) out[d] = p.f.u[d].cwiseProduct(s);
  } else if (q == Quantity::u) {
    throw UsageError("flow derivative takes a vector perturbation");
  }
  return out;
}

std::array<RVector, 2> partial_A(const MediumParams& p, const FrequencyContext& fc, const std::array<RVector, 2>& du) {
  const RVector s = fc.omega / p.f.c.array().square();
  return {du[0].cwiseProduct(s), du[1].cwiseProduct(s)};
}

void linearize(const MediumParams& p, const FrequencyContext& fc, const ParamFields& dq, CVector& dv,
               std::array<RVector, 2>& dA) {
  const int n = p.size();
  const Stencil& st = *p.stencil;
  dv = CVector::Zero(n);
  dA = {RVector::Zero(n), RVector::Zero(n)};
  for (Quantity q : {Quantity::c, Quantity::rho, Quantity::gamma}) {
    if (!dq.has(q)) continue;
    const RVector& f = q == Quantity::c ? dq.c : q == Quantity::rho ? dq.rho : dq.gamma;
    dv += apply_partial_v(partial_v(q, p, fc), st, f);
    if (q == Quantity::c && has_flow(p.f)) {
      const auto a = partial_A(q, p, fc, f);
      dA[0] += a[0];
      dA[1] += a[1];
    }
  }
  if (dq.has(Quantity::u)) {
    dv += apply_partial_v(partial_v(Quantity::u, p, fc), st, dq.u);
    const auto a = partial_A(p, fc, dq.u);
    dA[0] += a[0];
    dA[1] += a[1];
  }
}

double damping_profile(double omega) {
  if (!(omega > 0.0)) throw UsageError("frequency must be positive");
  const double gamma0 = 2.0 * kPi * 4.29e-6;
  const double omega0 = 2.0 * kPi * 3e-3;
  if (omega <= 2.0 * kPi * 5.3e-3) return gamma0 * std::pow(omega / omega0, 5.77);
  return 2.0 * kPi * 125e-6;
}

double mass_flux_divergence(const MediumParams& p) {
  const Stencil& st = *p.stencil;
  const RVector fx = p.f.rho.cwiseProduct(p.f.u[0]), fy = p.f.rho.cwiseProduct(p.f.u[1]);
  const double nrm = std::sqrt(fx.squaredNorm() + fy.squaredNorm());
  if (nrm == 0.0) return 0.0;
  return (st.dx * fx + st.dy * fy).norm() / nrm;
}

Shape parse_shape(const std::string& s) {
  if (s == "uniform") return Shape::uniform;
  if (s == "gaussian-blob") return Shape::gaussian_blob;
  if (s == "block") return Shape::block;
  throw ConfigError("unknown medium preset '" + s + "'");
}

RVector shape_field(const Lattice& lat, Shape s, double cx, double cy, double hw) {
  RVector out(lat.size());
  for (int iy = 0; iy < lat.ny; ++iy)
    for (int ix = 0; ix < lat.nx; ++ix) {
      const double dx = lat.x(ix) - cx, dy = lat.y(iy) - cy;
      double v = 1.0;
      if (s == Shape::gaussian_blob) v = std::exp(-(dx * dx + dy * dy) / (hw * hw));
      if (s == Shape::block) v = std::abs(dx) <= hw && std::abs(dy) <= hw ? 1.0 : 0.0;
      out[lat.index(ix, iy)] = v;
    }
  return out;
}

}  // namespace holoseis
