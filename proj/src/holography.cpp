#include "holoseis/holography.hpp"

#include <cmath>

#include "holoseis/errors.hpp"
#include "holoseis/simd/kernels.hpp"

namespace holoseis {
namespace {

// The derivative is a sum of "channels": each contributes
//   -(Q + Q^*),  Q~ = P diag(a . (T dq) . w) X^*
// in weighted receiver coordinates, where P is the weighted egression, X one of
// the ingressions below and T a stencil acting on one parameter component.
enum Ingression { kBeta = 0, kBetaX = 1, kBetaY = 2, kSource = 3 };
enum Op { kId = 0, kDx = 1, kDy = 2, kLap = 3 };

struct Channel {
  Quantity q;
  int comp;  // flow component, 0 otherwise
  CVector a;
  Op t;
  Ingression x;
};

bool nonzero(const CVector& v) { return v.size() && v.cwiseAbs().maxCoeff() > 0.0; }

std::vector<Channel> channels(const FrequencyModel& m, Quantity q) {
  std::vector<Channel> out;
  const MediumParams& p = m.medium;
  const int n = m.n_interior();
  auto add = [&](int comp, const CVector& a, Op t, Ingression x) {
    if (nonzero(a)) out.push_back({q, comp, a, t, x});
  };
  const bool flow = p.f.u[0].cwiseAbs().maxCoeff() > 0.0 || p.f.u[1].cwiseAbs().maxCoeff() > 0.0;
  switch (q) {
    case Quantity::S:
      add(0, CVector::Constant(n, -0.5), kId, kSource);
      break;
    case Quantity::gamma:
    case Quantity::c:
    case Quantity::rho: {
      const PartialV g = partial_v(q, p, m.freq);
      add(0, g.order0, kId, kBeta);
      add(0, g.order1[0], kDx, kBeta);
      add(0, g.order1[1], kDy, kBeta);
      add(0, g.order2, kLap, kBeta);
      if (q == Quantity::c && flow) {
        // dA_d = -2 omega u_d dc / c^3 enters as -2i dA_d . grad.
        for (int d = 0; d < 2; ++d) {
          const RVector s = -2.0 * m.freq.omega * p.f.u[d].array() / p.f.c.array().cube();
          add(0, (-2.0 * kI) * s.cast<cplx>(), kId, d == 0 ? kBetaX : kBetaY);
        }
      }
      break;
    }
    case Quantity::u: {
      const PartialV g = partial_v(q, p, m.freq);
      const RVector s = m.freq.omega / p.f.c.array().square();
      for (int d = 0; d < 2; ++d) {
        add(d, g.order0_vec[d], kId, kBeta);
        add(d, g.div_coeff, d == 0 ? kDx : kDy, kBeta);
        add(d, (-2.0 * kI) * s.cast<cplx>(), kId, d == 0 ? kBetaX : kBetaY);
      }
      break;
    }
  }
  return out;
}

const RSparse& stencil_op(const Stencil& st, Op t) { return t == kDx ? st.dx : t == kDy ? st.dy : st.lap; }

RVector apply_op(const Stencil& st, Op t, const RVector& f) { return t == kId ? f : RVector(stencil_op(st, t) * f); }

// Quadrature-weighted transpose: W^{-1} T^T W.
RVector apply_op_adjoint(const Stencil& st, Op t, const RVector& f, const RVector& w) {
  if (t == kId) return f;
  return RVector(stencil_op(st, t).transpose() * f.cwiseProduct(w)).cwiseQuotient(w);
}

const RVector& component(const ParamFields& f, Quantity q, int comp) {
  switch (q) {
    case Quantity::S: return f.S;
    case Quantity::c: return f.c;
    case Quantity::rho: return f.rho;
    case Quantity::gamma: return f.gamma;
    case Quantity::u: return f.u[comp];
  }
  return f.S;
}

RVector& component(ParamFields& f, Quantity q, int comp) {
  return const_cast<RVector&>(component(static_cast<const ParamFields&>(f), q, comp));
}

// Weighted receiver x interior matrices for the four ingressions.
struct Weighted {
  CMatrix p;
  std::array<CMatrix, 4> x;
  std::array<bool, 4> have{};
};

Weighted weighted(const FrequencyModel& m, const std::vector<Channel>& chs) {
  Weighted w;
  const RVector sw = m.w_rec.cwiseSqrt();
  w.p = sw.cast<cplx>().asDiagonal() * m.h_int;
  for (const auto& c : chs) {
    if (w.have[c.x]) continue;
    w.have[c.x] = true;
    switch (c.x) {
      case kSource: w.x[kSource] = w.p; break;
      case kBeta: w.x[kBeta] = sw.cast<cplx>().asDiagonal() * m.beta_star.adjoint(); break;
      case kBetaX:
      case kBetaY: {
        const RSparse& d = c.x == kBetaX ? m.stencil().dx : m.stencil().dy;
        w.x[c.x] = sw.cast<cplx>().asDiagonal() * (d * m.beta_star).adjoint();
        break;
      }
    }
  }
  return w;
}

std::vector<Channel> channels(const FrequencyModel& m, const std::vector<Quantity>& qs) {
  std::vector<Channel> out;
  for (Quantity q : qs) {
    auto c = channels(m, q);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

std::vector<Quantity> present(const ParamFields& dq) {
  std::vector<Quantity> qs;
  for (Quantity q : {Quantity::S, Quantity::c, Quantity::rho, Quantity::gamma, Quantity::u})
    if (dq.has(q)) qs.push_back(q);
  return qs;
}

CMatrix unweight(const CMatrix& a, const RVector& w) {
  const RVector s = w.cwiseSqrt().cwiseInverse();
  return s.cast<cplx>().asDiagonal() * a * s.cast<cplx>().asDiagonal();
}

CMatrix weight(const CMatrix& a, const RVector& w) {
  const RVector s = w.cwiseSqrt();
  return s.cast<cplx>().asDiagonal() * a * s.cast<cplx>().asDiagonal();
}

RVector mask_or_ones(const RVector* m, int n) {
  if (!m) return RVector::Ones(n);
  if (m->size() != n) throw UsageError("pupil mask does not match receiver count");
  return *m;
}

}  // namespace

CVector diag_product(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols()) throw UsageError("diag_product shape mismatch");
  const CMatrix at = a.transpose();
  const std::size_t k = std::size_t(a.cols());
  CVector out(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) out[i] = simd::cdotu(at.col(i).data(), b.col(i).data(), k);
  return out;
}

FrequencyModel build_frequency_model(std::shared_ptr<const GreensOperator> g0, const MediumParams& p,
                                     const FrequencyContext& fc, const CMatrix* boundary, BetaMode mode) {
  FrequencyModel m;
  m.grid = g0->grid;
  m.medium = p;
  m.freq = fc;
  m.hp = recast(p, fc);
  const Grid& g = *m.grid;
  if (p.size() != g.n_interior()) throw UsageError("medium and grid interior differ");
  if (std::abs(m.hp.k_ref - g0->k_ref) > 1e-12 * std::abs(g0->k_ref))
    throw UsageError("reference Green's operator was assembled for a different wavenumber");

  const bool flow = m.hp.A[0].cwiseAbs().maxCoeff() > 0.0 || m.hp.A[1].cwiseAbs().maxCoeff() > 0.0;
  const DeltaOperator delta = flow ? make_delta(p.stencil, m.hp.v, m.hp.A[0], m.hp.A[1]) : make_delta(p.stencil, m.hp.v);
  m.green = std::make_shared<const PerturbedGreens>(g0, delta);

  m.w_int.resize(g.n_interior());
  for (int i = 0; i < g.n_interior(); ++i) m.w_int[i] = g.weights[g.interior_idx[i]];
  m.w_rec.resize(g.n_receivers());
  for (int i = 0; i < g.n_receivers(); ++i) m.w_rec[i] = g.weights[g.receiver_idx[i]];

  const CMatrix h = m.green->receiver_rows();
  m.h_int = h(Eigen::all, g.interior_idx);
  if (boundary) m.boundary = *boundary;
  m.cov = forward_covariance(m.hp.S, g, h, boundary);

  if (mode == BetaMode::exact) {
    CMatrix y = CMatrix::Zero(g.size(), g.n_receivers());
    const RVector sw = m.hp.S.cwiseProduct(m.w_int);
    for (int i = 0; i < g.n_interior(); ++i) y.row(g.interior_idx[i]) = sw[i] * m.h_int.col(i).adjoint();
    if (boundary) y(g.receiver_idx, Eigen::all) = (*boundary) * h(Eigen::all, g.receiver_idx).adjoint();
    m.beta_star = m.green->apply(y)(g.interior_idx, Eigen::all);
  } else {
    // G S G^* ~ Pi/(4i omega) (G - conj G) for S = Pi gamma / c^2 in a flow-free medium.
    const CMatrix kir = m.green->resolve(g0->kernel(Eigen::all, g.receiver_idx))(g.interior_idx, Eigen::all);
    m.beta_star = imaginary_part_covariance(kir, fc.omega, fc.power_spectrum);
  }
  return m;
}

PropagatorPair build_propagators(Quantity q, const FrequencyModel& m, const RVector* pa, const RVector* pb) {
  PropagatorPair pair;
  pair.quantity = q;
  const int nr = m.n_receivers();
  pair.pupil_alpha = mask_or_ones(pa, nr);
  pair.pupil_beta = mask_or_ones(pb, nr);
  pair.h_alpha = pair.pupil_alpha.cast<cplx>().asDiagonal() * m.h_int;
  if (q == Quantity::S) {
    pair.h_beta = pair.pupil_beta.cast<cplx>().asDiagonal() * m.h_int;
    return pair;
  }
  if (!m.beta_star.size()) throw UsageError("beta propagators need the source strength");
  pair.h_beta = pair.pupil_beta.cast<cplx>().asDiagonal() * m.beta_star.adjoint();
  if (q == Quantity::u) {
    const RVector scale = (m.medium.f.rho.cwiseSqrt().cwiseProduct(m.medium.f.c)).cwiseInverse();
    const CMatrix b = scale.cast<cplx>().asDiagonal() * m.beta_star;
    for (int d = 0; d < 2; ++d)
      pair.h_beta_flow[d] = pair.pupil_beta.cast<cplx>().asDiagonal() * (m.stencil().d(d) * b).adjoint();
  }
  return pair;
}

CMatrix apply_derivative(const FrequencyModel& m, const ParamFields& dq) {
  const auto chs = channels(m, present(dq));
  const int nr = m.n_receivers();
  if (chs.empty()) return CMatrix::Zero(nr, nr);
  const Weighted w = weighted(m, chs);
  std::array<CVector, 4> phi;
  for (auto& v : phi) v = CVector::Zero(m.n_interior());
  for (const auto& c : chs) {
    const RVector& f = component(dq, c.q, c.comp);
    if (f.size() != m.n_interior()) throw UsageError("perturbation has the wrong length");
    phi[c.x] += c.a.cwiseProduct(apply_op(m.stencil(), c.t, f).cast<cplx>());
  }
  CMatrix q = CMatrix::Zero(nr, nr);
  for (int x = 0; x < 4; ++x) {
    if (!w.have[x]) continue;
    q.noalias() += w.p * phi[x].cwiseProduct(m.w_int.cast<cplx>()).asDiagonal() * w.x[x].adjoint();
  }
  return unweight(-(q + q.adjoint()), m.w_rec);
}

ParamFields apply_adjoint(const FrequencyModel& m, const CMatrix& d, const std::vector<Quantity>& qs) {
  const int n = m.n_interior();
  ParamFields out;
  for (Quantity q : qs) {
    if (q == Quantity::u) out.u = {RVector::Zero(n), RVector::Zero(n)};
    else component(out, q, 0) = RVector::Zero(n);
  }
  const auto chs = channels(m, qs);
  if (chs.empty()) return out;
  if (d.rows() != m.n_receivers() || d.cols() != m.n_receivers()) throw UsageError("data matrix has the wrong shape");
  const Weighted w = weighted(m, chs);
  const CMatrix e = weight(d, m.w_rec);
  const CMatrix es = e + e.adjoint();
  std::array<CVector, 4> z;
  for (int x = 0; x < 4; ++x)
    if (w.have[x]) z[x] = -diag_product(w.x[x].adjoint() * es, w.p);
  for (const auto& c : chs) {
    const RVector g = c.a.cwiseProduct(z[c.x]).real();
    component(out, c.q, c.comp) += apply_op_adjoint(m.stencil(), c.t, g, m.w_int);
  }
  return out;
}

CVector backprop_realizations(const PropagatorPair& pair, const RealizationSet& r, const RVector& w_rec) {
  if (r.count() < 1) throw UsageError("empty realization set");
  const RVector wa = w_rec.cwiseProduct(pair.pupil_alpha), wb = w_rec.cwiseProduct(pair.pupil_beta);
  const CMatrix fa = pair.h_alpha.adjoint() * (wa.cast<cplx>().asDiagonal() * r.fields);
  const CMatrix fb = pair.h_beta.adjoint() * (wb.cast<cplx>().asDiagonal() * r.fields);
  CVector acc = CVector::Zero(fa.rows());
  for (Eigen::Index j = 0; j < fa.cols(); ++j)
    simd::cmulc_acc(acc.data(), fa.col(j).data(), fb.col(j).data(), std::size_t(fa.rows()));
  return acc / double(r.count());
}

CVector hologram_intensity(const FrequencyModel& m, const RealizationSet& r, const RVector* pupil) {
  return backprop_realizations(build_propagators(Quantity::S, m, pupil, pupil), r, m.w_rec);
}

CVector hologram_expectation(const PropagatorPair& pair, const CMatrix& c, const RVector& w_rec) {
  const RVector wa = w_rec.cwiseProduct(pair.pupil_alpha), wb = w_rec.cwiseProduct(pair.pupil_beta);
  const CMatrix left = pair.h_alpha.adjoint() * wa.cast<cplx>().asDiagonal() * c * wb.cast<cplx>().asDiagonal();
  return diag_product(left, pair.h_beta);
}

CMatrix NoiseWeight::apply(const CMatrix& d) const {
  const CMatrix dt = weight(d, w_rec);
  return unweight(gamma * dt * gamma, w_rec);
}

double NoiseWeight::misfit2(const CMatrix& d) const {
  const CMatrix m = gamma * weight(d, w_rec);
  return (m.array() * m.transpose().array()).sum().real();
}

NoiseWeight identity_weight(const RVector& w_rec) {
  NoiseWeight w;
  w.gamma = CMatrix::Identity(w_rec.size(), w_rec.size());
  w.w_rec = w_rec;
  return w;
}

CMatrix forward_backward(const CMatrix& x, const CMatrix& y, const NoiseWeight& w) {
  check_memory(x.cols(), y.cols(), "forward-backward operator");
  const RVector s = w.w_rec.cwiseSqrt();
  return (s.cast<cplx>().asDiagonal() * x).adjoint() * w.gamma * (s.cast<cplx>().asDiagonal() * y);
}

namespace {

// K_ch,ch'(x, y) = 2 Re[a_x a'_y F_XP(x,y) F_X'P(y,x) + a_x conj(a'_y) F_XX'(x,y) F_PP(y,x)]
// restricted to the given x rows.
RMatrix channel_kernel(const Channel& c, const Channel& cp, const Weighted& w, const CMatrix& gp,
                       const std::array<CMatrix, 4>& fxp, const CMatrix& fpp, const std::vector<int>* rows) {
  const CMatrix& xa = w.x[c.x];
  const CMatrix& xb = w.x[cp.x];
  const int n = int(fpp.rows());
  const int nr = rows ? int(rows->size()) : n;
  const CMatrix gb = gp * xb;
  const CMatrix fab = rows ? CMatrix(xa(Eigen::all, *rows).adjoint() * gb) : CMatrix(xa.adjoint() * gb);
  RMatrix out(nr, n);
  for (int r = 0; r < nr; ++r) {
    const int xi = rows ? (*rows)[r] : r;
    const cplx ax = c.a[xi];
    for (int y = 0; y < n; ++y) {
      const cplx t1 = ax * cp.a[y] * fxp[c.x](xi, y) * fxp[cp.x](y, xi);
      const cplx t2 = ax * std::conj(cp.a[y]) * fab(r, y) * fpp(y, xi);
      out(r, y) = 2.0 * (t1 + t2).real();
    }
  }
  return out;
}

RMatrix assemble_kernel(Quantity q, Quantity qp, const FrequencyModel& m, const NoiseWeight& nw,
                        const std::vector<int>* rows) {
  const auto ca = channels(m, q), cb = channels(m, qp);
  const int n = m.n_interior();
  const int bq = q == Quantity::u ? 2 : 1, bp = qp == Quantity::u ? 2 : 1;
  check_memory(std::size_t(n) * bq, std::size_t(n) * bp, "sensitivity kernel");
  std::vector<Channel> all = ca;
  all.insert(all.end(), cb.begin(), cb.end());
  const Weighted w = weighted(m, all);
  const CMatrix gp = nw.gamma * w.p;
  std::array<CMatrix, 4> fxp;
  for (int x = 0; x < 4; ++x)
    if (w.have[x]) fxp[x] = w.x[x].adjoint() * gp;
  const CMatrix fpp = w.p.adjoint() * gp;
  const int nrow = rows ? int(rows->size()) : n;
  RMatrix out = RMatrix::Zero(std::size_t(nrow) * bq, std::size_t(n) * bp);
  const RVector& wi = m.w_int;
  for (const auto& c : ca)
    for (const auto& cp : cb) {
      if (rows && (c.t != kId || cp.t != kId)) throw UsageError("kernel rows need multiplication-only channels");
      RMatrix k = channel_kernel(c, cp, w, nw.gamma, fxp, fpp, rows);
      if (!rows) {
        // W^{-1} T^T W K W T' W^{-1}, expressed through the column/row actions.
        if (cp.t != kId) {
          const RSparse& t = stencil_op(m.stencil(), cp.t);
          k = (k * wi.asDiagonal()) * t;
          k = k * wi.cwiseInverse().asDiagonal();
        }
        if (c.t != kId) {
          const RSparse& t = stencil_op(m.stencil(), c.t);
          k = wi.cwiseInverse().asDiagonal() * (RMatrix(t.transpose() * (wi.asDiagonal() * k)));
        }
      }
      out.block(std::size_t(c.comp) * nrow, std::size_t(cp.comp) * n, nrow, n) += k;
    }
  return out;
}

}  // namespace

RMatrix sensitivity_kernel(Quantity q, Quantity qp, const FrequencyModel& m, const NoiseWeight& w) {
  return assemble_kernel(q, qp, m, w, nullptr);
}

RMatrix kernel_rows(Quantity q, Quantity qp, const FrequencyModel& m, const NoiseWeight& w,
                    const std::vector<int>& rows) {
  return assemble_kernel(q, qp, m, w, &rows);
}

RMatrix gaussian_smoother(const Lattice& lat, double width) {
  const int n = lat.size();
  if (!(width > 0.0)) return RMatrix::Identity(n, n);
  const double s2 = 2.0 * width * width;
  double bulk = 0.0;
  const int reach = int(std::ceil(8.0 * width / lat.h));
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx) bulk += std::exp(-(dx * dx + dy * dy) * lat.h * lat.h / s2);
  RMatrix k(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double dx = (a % lat.nx - b % lat.nx) * lat.h, dy = (a / lat.nx - b / lat.nx) * lat.h;
      k(a, b) = std::exp(-(dx * dx + dy * dy) / s2) / bulk;
    }
  return k;
}

}  // namespace holoseis
