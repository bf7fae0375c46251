#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "holoseis/errors.hpp"
#include "holoseis/holography.hpp"

using namespace holoseis;

namespace {

constexpr double kLambda = 0.2;
const double kOmega = 2 * kPi / kLambda;

struct Desk {
  std::shared_ptr<const Grid> grid;
  std::shared_ptr<const Stencil> st;
  std::shared_ptr<const GreensOperator> g0;
  FrequencyContext fc;
};

Desk make_desk(double gamma0 = 0.5, int n_rec = 24) {
  DeskGridSpec s;
  s.half_width = 0.2;
  s.wavelength = kLambda;
  s.n_receivers = n_rec;
  s.receiver_radius = 0.35;
  Desk d;
  d.grid = std::make_shared<const Grid>(make_desk_grid(s));
  d.st = make_stencil(*d.grid->lattice);
  d.fc.omega = kOmega;
  d.g0 = std::make_shared<const GreensOperator>(
      assemble_green(d.grid, reference_wavenumber(kOmega, 1.0, gamma0), 2, kOmega));
  return d;
}

RVector bump(const Stencil& st, double cx, double cy, double w) {
  return shape_field(st.lattice, Shape::gaussian_blob, cx, cy, w);
}

// Heterogeneous background with a compactly concentrated solenoidal flow.
MediumParams background(const Desk& d, double gamma0 = 0.5, bool flow = true) {
  MediumParams p = uniform_medium(d.st, 1.0, 1.0, gamma0, 1.0);
  p.f.c = RVector::Ones(p.size()) + 0.05 * bump(*d.st, 0.03, 0.0, 0.06);
  p.f.rho = RVector::Ones(p.size()) + 0.1 * bump(*d.st, -0.04, 0.02, 0.06);
  p.f.S = RVector::Ones(p.size()) + 0.5 * bump(*d.st, 0.0, -0.05, 0.06);
  if (flow) {
    const RVector psi = 0.002 * bump(*d.st, 0.0, 0.0, 0.05);
    const RVector fx = d.st->dy * psi, fy = -(d.st->dx * psi);
    p.f.u = {fx.cwiseQuotient(p.f.rho), fy.cwiseQuotient(p.f.rho)};
  }
  return p;
}

ParamFields direction(const Desk& d, Quantity q) {
  ParamFields f;
  const RVector b = bump(*d.st, 0.05, 0.04, 0.05);
  switch (q) {
    case Quantity::S: f.S = b; break;
    case Quantity::c: f.c = 0.05 * b; break;
    case Quantity::rho: f.rho = 0.1 * b; break;
    case Quantity::gamma: f.gamma = 0.2 * b; break;
    case Quantity::u: f.u = {0.02 * b, -0.01 * bump(*d.st, -0.03, 0.0, 0.05)}; break;
  }
  return f;
}

MediumParams perturbed(const MediumParams& p, const ParamFields& dq, double t) {
  MediumParams out = p;
  out.f.axpy(t, dq);
  return out;
}

double hs_pair(const FrequencyModel& m, const CMatrix& a, const CMatrix& b) {
  return (m.w_rec * m.w_rec.transpose()).cwiseProduct((a.array() * b.conjugate().array()).real().matrix()).sum();
}

double l2_pair(const FrequencyModel& m, const ParamFields& a, const ParamFields& b) {
  double s = 0.0;
  auto term = [&](const RVector& x, const RVector& y) {
    if (x.size() && y.size()) s += (m.w_int.array() * x.array() * y.array()).sum();
  };
  term(a.S, b.S);
  term(a.c, b.c);
  term(a.rho, b.rho);
  term(a.gamma, b.gamma);
  term(a.u[0], b.u[0]);
  term(a.u[1], b.u[1]);
  return s;
}

CMatrix random_hermitian(int n, unsigned seed) {
  std::srand(seed);
  const CMatrix a = CMatrix::Random(n, n);
  return a + a.adjoint();
}

NoiseWeight lavrentiev(const FrequencyModel& m, double beta_rel) {
  NoiseWeight w;
  w.w_rec = m.w_rec;
  const RVector s = m.w_rec.cwiseSqrt();
  const CMatrix ct = s.cast<cplx>().asDiagonal() * m.cov.matrix * s.cast<cplx>().asDiagonal();
  w.beta = beta_rel * ct.trace().real() / ct.rows();
  const CMatrix a = w.beta * CMatrix::Identity(ct.rows(), ct.rows()) + ct;
  w.gamma = a.inverse();
  w.gamma = 0.5 * (w.gamma + w.gamma.adjoint()).eval();
  return w;
}

const std::vector<Quantity> kAll = {Quantity::S, Quantity::c, Quantity::rho, Quantity::gamma, Quantity::u};

}  // namespace

TEST(DiagProduct, MatchesDenseDiagonal) {
  std::srand(3);
  const CMatrix a = CMatrix::Random(7, 5), b = CMatrix::Random(5, 7);
  const CVector ref = (a * b).diagonal();
  EXPECT_LT((diag_product(a, b) - ref).norm(), 1e-13 * ref.norm());
  EXPECT_THROW(diag_product(a, a), UsageError);
}

TEST(Propagators, SourceDerivativeIsRankOne) {
  const Desk d = make_desk();
  const FrequencyModel m = build_frequency_model(d.g0, background(d), d.fc);
  const PropagatorPair pr = build_propagators(Quantity::S, m);
  EXPECT_LT((pr.h_alpha - pr.h_beta).norm(), 1e-14 * pr.h_alpha.norm());
  const int x0 = m.n_interior() / 3;
  ParamFields dq;
  dq.S = RVector::Zero(m.n_interior());
  dq.S[x0] = 1.0;
  const CMatrix dc = apply_derivative(m, dq);
  const CMatrix ref = m.w_int[x0] * m.h_int.col(x0) * m.h_int.col(x0).adjoint();
  EXPECT_LT((dc - ref).norm(), 1e-12 * ref.norm());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(dc);
  EXPECT_LT(std::abs(es.eigenvalues()[dc.rows() - 2]), 1e-10 * es.eigenvalues().maxCoeff());
}

TEST(Propagators, FlowPropagatorDifferentiatesScaledBeta) {
  const Desk d = make_desk();
  MediumParams p = background(d);
  const FrequencyModel m = build_frequency_model(d.g0, p, d.fc);
  const PropagatorPair pr = build_propagators(Quantity::u, m);
  ASSERT_EQ(pr.h_beta_flow[0].rows(), m.n_receivers());
  const CMatrix scaled = (p.f.rho.cwiseSqrt().cwiseProduct(p.f.c)).cwiseInverse().cast<cplx>().asDiagonal() * m.beta_star;
  const CMatrix ref = (d.st->dy * scaled).adjoint();
  EXPECT_LT((pr.h_beta_flow[1] - ref).norm(), 1e-12 * ref.norm());
  RVector pupil = RVector::Ones(m.n_receivers());
  pupil.head(m.n_receivers() / 2).setZero();
  const PropagatorPair half = build_propagators(Quantity::c, m, &pupil, &pupil);
  EXPECT_EQ(half.h_alpha.topRows(m.n_receivers() / 2).norm(), 0.0);
  EXPECT_EQ(half.h_beta.topRows(m.n_receivers() / 2).norm(), 0.0);
}

TEST(Derivative, AdjointIdentity) {
  const Desk d = make_desk();
  const FrequencyModel m = build_frequency_model(d.g0, background(d), d.fc);
  const CMatrix e = random_hermitian(m.n_receivers(), 11);
  for (Quantity q : kAll) {
    const ParamFields dq = direction(d, q);
    const double lhs = hs_pair(m, apply_derivative(m, dq), e);
    const double rhs = l2_pair(m, dq, apply_adjoint(m, e, {q}));
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs)) << to_string(q);
  }
  // Several quantities at once.
  ParamFields all = direction(d, Quantity::c);
  all.rho = direction(d, Quantity::rho).rho;
  all.u = direction(d, Quantity::u).u;
  const double lhs = hs_pair(m, apply_derivative(m, all), e);
  const double rhs = l2_pair(m, all, apply_adjoint(m, e, {Quantity::c, Quantity::rho, Quantity::u}));
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

TEST(Derivative, TaylorRemainderIsSecondOrder) {
  const Desk d = make_desk();
  const MediumParams p = background(d);
  const FrequencyModel m = build_frequency_model(d.g0, p, d.fc);
  for (Quantity q : kAll) {
    const ParamFields dq = direction(d, q);
    const CMatrix lin = apply_derivative(m, dq);
    std::vector<double> rem;
    for (double t : {0.4, 0.2, 0.1}) {
      const FrequencyModel mt = build_frequency_model(d.g0, perturbed(p, dq, t), d.fc);
      rem.push_back(m.cov.hs_norm(mt.cov.matrix - m.cov.matrix - t * lin) / m.cov.hs_norm(t * lin));
    }
    if (q == Quantity::S) {
      // C is linear in S.
      EXPECT_LT(rem.back(), 1e-10);
      continue;
    }
    EXPECT_LT(rem[2], 0.05) << to_string(q);
    EXPECT_NEAR(std::log2(rem[1] / rem[2]), 1.0, 0.3) << to_string(q);
  }
}

TEST(Hologram, BackpropagationEqualsDiagonalForm) {
  const Desk d = make_desk();
  const FrequencyModel m = build_frequency_model(d.g0, background(d), d.fc);
  const RealizationSet r = sample_wavefields(m.hp, *m.green, 64, 5);
  const CovarianceOperator corr = empirical_corr(r, m.w_rec);
  for (Quantity q : {Quantity::S, Quantity::c}) {
    const PropagatorPair pr = build_propagators(q, m);
    const CVector a = backprop_realizations(pr, r, m.w_rec);
    const CVector b = hologram_expectation(pr, corr.matrix, m.w_rec);
    EXPECT_LT((a - b).norm(), 1e-11 * b.norm());
  }
  EXPECT_LT((hologram_intensity(m, r) - backprop_realizations(build_propagators(Quantity::S, m), r, m.w_rec)).norm(),
            1e-13);
}

TEST(Hologram, SourceBlobFocuses) {
  const Desk d = make_desk(0.5, 48);
  const FrequencyModel m = build_frequency_model(d.g0, uniform_medium(d.st, 1.0, 1.0, 0.5, 1.0), d.fc);
  const double cx = 0.08, cy = -0.06;
  ParamFields dq;
  dq.S = shape_field(d.st->lattice, Shape::gaussian_blob, cx, cy, 0.02);
  const CVector img = hologram_expectation(build_propagators(Quantity::S, m), apply_derivative(m, dq), m.w_rec);
  Eigen::Index best;
  img.real().maxCoeff(&best);
  const Lattice& lat = d.st->lattice;
  const double bx = lat.x(int(best) % lat.nx), by = lat.y(int(best) / lat.nx);
  EXPECT_LT(std::hypot(bx - cx, by - cy), 0.25 * kLambda);
}

TEST(Kernels, ForwardBackwardIsPositive) {
  const Desk d = make_desk();
  const FrequencyModel m = build_frequency_model(d.g0, background(d), d.fc);
  const NoiseWeight w = lavrentiev(m, 0.1);
  const CMatrix f = forward_backward(m.h_int, m.h_int, w);
  EXPECT_LT((f - f.adjoint()).norm(), 1e-12 * f.norm());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (f + f.adjoint()));
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12 * es.eigenvalues().maxCoeff());
}

TEST(Kernels, MatchAdjointOfDerivative) {
  const Desk d = make_desk();
  const FrequencyModel m = build_frequency_model(d.g0, background(d), d.fc);
  const NoiseWeight w = lavrentiev(m, 0.1);
  const std::vector<std::pair<Quantity, Quantity>> pairs = {{Quantity::S, Quantity::S},   {Quantity::c, Quantity::c},
                                                            {Quantity::rho, Quantity::rho}, {Quantity::gamma, Quantity::c},
                                                            {Quantity::u, Quantity::u},   {Quantity::c, Quantity::u},
                                                            {Quantity::S, Quantity::rho}};
  const int n = m.n_interior();
  for (auto [q, qp] : pairs) {
    const ParamFields dq = direction(d, qp);
    const ParamFields ref = apply_adjoint(m, w.apply(apply_derivative(m, dq)), {q});
    const RMatrix k = sensitivity_kernel(q, qp, m, w);
    RVector in = qp == Quantity::u ? RVector(2 * n) : RVector(n);
    if (qp == Quantity::u) in << dq.u[0].cwiseProduct(m.w_int), dq.u[1].cwiseProduct(m.w_int);
    else in = (qp == Quantity::c     ? dq.c
               : qp == Quantity::rho ? dq.rho
               : qp == Quantity::S   ? dq.S
                                     : dq.gamma)
                  .cwiseProduct(m.w_int);
    const RVector out = k * in;
    RVector want = q == Quantity::u ? RVector(2 * n) : RVector(n);
    if (q == Quantity::u) want << ref.u[0], ref.u[1];
    else want = q == Quantity::c ? ref.c : q == Quantity::rho ? ref.rho : q == Quantity::S ? ref.S : ref.gamma;
    EXPECT_LT((out - want).norm(), 1e-9 * want.norm()) << to_string(q) << "," << to_string(qp);
  }
}

TEST(Kernels, SymmetryAndSourcePositivity) {
  const Desk d = make_desk();
  const FrequencyModel m = build_frequency_model(d.g0, background(d), d.fc);
  const NoiseWeight w = lavrentiev(m, 0.1);
  const RMatrix ks = sensitivity_kernel(Quantity::S, Quantity::S, m, w);
  EXPECT_GE(ks.minCoeff(), 0.0);
  EXPECT_LT((ks - ks.transpose()).norm(), 1e-12 * ks.norm());
  const RMatrix kcs = sensitivity_kernel(Quantity::c, Quantity::S, m, w);
  const RMatrix ksc = sensitivity_kernel(Quantity::S, Quantity::c, m, w);
  EXPECT_LT((kcs - ksc.transpose()).norm(), 1e-11 * kcs.norm());
  const std::vector<int> rows = {0, 17, m.n_interior() - 1};
  const RMatrix kg = sensitivity_kernel(Quantity::gamma, Quantity::S, m, w);
  const RMatrix kr = kernel_rows(Quantity::gamma, Quantity::S, m, w, rows);
  for (int i = 0; i < 3; ++i) EXPECT_LT((kr.row(i) - kg.row(rows[i])).norm(), 1e-13 * kg.norm());
  EXPECT_THROW(kernel_rows(Quantity::c, Quantity::S, m, w, rows), UsageError);
}

TEST(Kernels, GaussianSmoother) {
  Lattice lat;
  lat.nx = lat.ny = 20;
  lat.h = 0.01;
  const RMatrix k = gaussian_smoother(lat, 0.015);
  EXPECT_LT((k - k.transpose()).norm(), 1e-15);
  EXPECT_NEAR(k.row(lat.index(10, 10)).sum(), 1.0, 1e-8);
  EXPECT_LT(k.row(0).sum(), 0.5);
  EXPECT_EQ(gaussian_smoother(lat, 0.0), RMatrix::Identity(400, 400));
}

TEST(Model, RejectsMismatchedReference) {
  const Desk d = make_desk();
  EXPECT_THROW(build_frequency_model(d.g0, background(d, 0.7), d.fc), UsageError);
  FrequencyModel m = build_frequency_model(d.g0, background(d, 0.5, false), d.fc, nullptr, BetaMode::imaginary_part);
  EXPECT_EQ(m.beta_star.rows(), m.n_interior());
}
