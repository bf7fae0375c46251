#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "holoseis/errors.hpp"
#include "holoseis/parallel.hpp"
#include "holoseis/stochastic.hpp"

using namespace holoseis;

namespace {

struct Setup {
  std::shared_ptr<const Grid> grid;
  GreensOperator g0;
  CMatrix h;
  RVector S;
};

Setup make_setup(int n_rec = 16) {
  DeskGridSpec s;
  s.half_width = 0.2;
  s.wavelength = 0.2;
  s.n_receivers = n_rec;
  s.receiver_radius = 0.5;
  Setup st;
  st.grid = std::make_shared<const Grid>(make_desk_grid(s));
  st.g0 = assemble_green(st.grid, std::sqrt(cplx(1.0, 0.1)) * (2 * kPi / 0.2), 2);
  st.h = st.g0.receiver_rows();
  const Lattice& lat = *st.grid->lattice;
  st.S = 1.0 + shape_field(lat, Shape::gaussian_blob, 0.05, 0.0, 0.1).array();
  return st;
}

RVector rec_weights(const Grid& g) {
  RVector w(g.n_receivers());
  for (int i = 0; i < g.n_receivers(); ++i) w[i] = g.weights[g.receiver_idx[i]];
  return w;
}

double rel_hs(const CovarianceOperator& ref, const CMatrix& a) {
  return ref.hs_norm(a - ref.matrix) / ref.hs_norm(ref.matrix);
}

// Expected relative HS error of an N-sample correlation from the Gaussian
// fourth moments: E||Corr - C||^2 = (sum_i w_i C_ii)^2 / N.
double predicted_error(const CovarianceOperator& ref, int n) {
  const double tr = (ref.weights.array() * ref.matrix.diagonal().real().array()).sum();
  return tr / std::sqrt(double(n)) / ref.hs_norm(ref.matrix);
}

}  // namespace

TEST(Rng, DeterministicAndCircular) {
  CounterRng a(42, 7), b(42, 7), c(42, 8);
  EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(CounterRng(42, 7).next(), c.next());
  CounterRng r(1, 0);
  const int n = 200000;
  cplx mean = 0.0, pseudo = 0.0;
  double power = 0.0;
  for (int i = 0; i < n; ++i) {
    const cplx z = r.complex_normal();
    mean += z;
    pseudo += z * z;
    power += std::norm(z);
  }
  EXPECT_LT(std::abs(mean) / n, 5.0 / std::sqrt(n));
  EXPECT_LT(std::abs(pseudo) / n, 5.0 / std::sqrt(n));
  EXPECT_NEAR(power / n, 1.0, 5.0 / std::sqrt(n));
}

TEST(ForwardCovariance, PointMassIsRankOne) {
  const auto st = make_setup();
  const Grid& g = *st.grid;
  RVector S = RVector::Zero(g.n_interior());
  const int j = 37;
  S[j] = 1.0 / g.weights[g.interior_idx[j]];
  const auto c = forward_covariance(S, g, st.h);
  const CVector col = st.h.col(g.interior_idx[j]);
  EXPECT_LT((c.matrix - col * col.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  const auto z = forward_covariance(RVector::Zero(g.n_interior()), g, st.h);
  EXPECT_EQ(z.matrix.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ForwardCovariance, HermitianPsd) {
  const auto st = make_setup();
  CMatrix b = CMatrix::Zero(16, 16);
  b.diagonal().setConstant(0.01);
  const auto c = forward_covariance(st.S, *st.grid, st.h, &b);
  EXPECT_LT((c.matrix - c.matrix.adjoint()).cwiseAbs().maxCoeff(), 1e-12 * c.matrix.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(c.matrix);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().cwiseAbs().maxCoeff());
  EXPECT_THROW(forward_covariance(RVector::Ones(3), *st.grid, st.h), UsageError);
}

TEST(Sampling, ZeroSourceAndDeterminism) {
  const auto st = make_setup();
  const Grid& g = *st.grid;
  const auto z = sample_wavefields(RVector::Zero(g.n_interior()), g, st.h, 10, 3);
  EXPECT_EQ(z.fields.cwiseAbs().maxCoeff(), 0.0);
  const auto a = sample_wavefields(st.S, g, st.h, 300, 11);
  const auto b = sample_wavefields(st.S, g, st.h, 300, 11);
  EXPECT_TRUE(a.fields == b.fields);
  const int old = worker_count();
  set_worker_count(3);
  const auto c = sample_wavefields(st.S, g, st.h, 300, 11);
  set_worker_count(old);
  EXPECT_TRUE(a.fields == c.fields);
  const auto d = sample_wavefields(st.S, g, st.h, 40, 11, nullptr, 100);
  EXPECT_TRUE(d.fields == a.fields.middleCols(100, 40));
  EXPECT_FALSE(sample_wavefields(st.S, g, st.h, 300, 12).fields == a.fields);
}

TEST(Sampling, MonteCarloConvergence) {
  const auto st = make_setup();
  const Grid& g = *st.grid;
  const auto ref = forward_covariance(st.S, g, st.h);
  const RVector w = rec_weights(g);
  std::vector<double> err;
  for (int n : {2500, 10000}) err.push_back(rel_hs(ref, empirical_corr(sample_wavefields(st.S, g, st.h, n, 5), w).matrix));
  EXPECT_NEAR(err[1] / predicted_error(ref, 10000), 1.0, 0.3);
  EXPECT_NEAR(err[0] / err[1], 2.0, 0.6);
}

TEST(Sampling, BoundarySourcesEnterCovariance) {
  const auto st = make_setup();
  const Grid& g = *st.grid;
  CMatrix b = CMatrix::Zero(16, 16);
  for (int i = 0; i < 16; ++i) b(i, i) = 0.05 * (1.0 + i % 3);
  b(0, 1) = b(1, 0) = 0.02;
  const auto ref = forward_covariance(st.S, g, st.h, &b);
  const auto emp = empirical_corr(sample_wavefields(st.S, g, st.h, 10000, 9, &b), rec_weights(g));
  EXPECT_NEAR(rel_hs(ref, emp.matrix) / predicted_error(ref, 10000), 1.0, 0.3);
  CMatrix bad = -b;
  EXPECT_THROW(sample_wavefields(st.S, g, st.h, 10, 9, &bad), UsageError);
}

TEST(EmpiricalCorr, SingleDrawAndPhase) {
  const auto st = make_setup();
  const Grid& g = *st.grid;
  const RVector w = rec_weights(g);
  const auto r1 = sample_wavefields(st.S, g, st.h, 1, 2);
  const auto c1 = empirical_corr(r1, w);
  EXPECT_TRUE(c1.matrix == (r1.fields.col(0) * r1.fields.col(0).adjoint()));
  auto r = sample_wavefields(st.S, g, st.h, 50, 2);
  const auto c = empirical_corr(r, w);
  r.fields *= std::polar(1.0, 0.77);
  EXPECT_LT((empirical_corr(r, w).matrix - c.matrix).cwiseAbs().maxCoeff(), 1e-14 * c.matrix.cwiseAbs().maxCoeff());
}

TEST(EmpiricalCorr, UnbiasedAndNoPseudoCovariance) {
  const auto st = make_setup();
  const Grid& g = *st.grid;
  const auto ref = forward_covariance(st.S, g, st.h);
  const RVector w = rec_weights(g);
  const int batches = 50, n = 200;
  CMatrix mean = CMatrix::Zero(16, 16), pseudo = CMatrix::Zero(16, 16);
  double single = 0.0;
  for (int b = 0; b < batches; ++b) {
    const auto r = sample_wavefields(st.S, g, st.h, n, 1000 + b);
    const auto c = empirical_corr(r, w);
    mean += c.matrix / double(batches);
    pseudo += empirical_pseudo_corr(r) / double(batches);
    single += rel_hs(ref, c.matrix) / batches;
  }
  const double err = rel_hs(ref, mean);
  const double pred = predicted_error(ref, batches * n);
  EXPECT_NEAR(err / pred, 1.0, 0.3);
  EXPECT_LT(err, 0.3 * single);
  // Same fourth-moment budget, doubled by the |C_ij|^2 term.
  EXPECT_LT(ref.hs_norm(pseudo) / ref.hs_norm(ref.matrix), 1.3 * std::sqrt(2.0) * pred);
}

TEST(SourceModel, FromDamping) {
  Lattice lat;
  lat.nx = lat.ny = 6;
  lat.h = 0.1;
  auto p = uniform_medium(make_stencil(lat), 2.0, 1.0, 0.0, 0.0);
  FrequencyContext fc{1.0, 3.0};
  EXPECT_EQ(source_cov_from_damping(p, fc).cwiseAbs().maxCoeff(), 0.0);
  p.f.gamma.setConstant(0.4);
  const RVector s1 = source_cov_from_damping(p, fc);
  EXPECT_DOUBLE_EQ(s1[0], 3.0 * 0.4 / 4.0);
  fc.power_spectrum *= 2.0;
  EXPECT_TRUE(source_cov_from_damping(p, fc) == 2.0 * s1);
}

TEST(SourceModel, ImaginaryPartCovariance) {
  const auto st = make_setup();
  const CMatrix grr = st.g0.kernel(st.grid->receiver_idx, st.grid->receiver_idx);
  const CMatrix c = imaginary_part_covariance(grr, 2.0, 3.0);
  EXPECT_LT((c - c.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((c.real() - 3.0 * grr.imag() / 4.0).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(c.imag().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Isserlis, IdentityAndRankOne) {
  CovarianceOperator id;
  id.matrix = CMatrix::Identity(4, 4);
  const CMatrix e = CMatrix::Random(4, 4);
  EXPECT_TRUE(isserlis_cov4_apply(id, e) == e);
  CovarianceOperator c;
  const CMatrix a = CMatrix::Random(4, 4);
  c.matrix = a * a.adjoint();
  const CVector f = CVector::Random(4), gg = CVector::Random(4);
  const CMatrix lhs = isserlis_cov4_apply(c, f * gg.adjoint());
  const CMatrix rhs = (c.matrix * f) * (c.matrix * gg).adjoint();
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-13 * rhs.cwiseAbs().maxCoeff());
  EXPECT_THROW(isserlis_cov4_apply(c, CMatrix::Zero(3, 3)), UsageError);
}

TEST(Isserlis, MonteCarloFourthMoments) {
  // Four closely spaced receivers so every C entry is far from zero.
  const CMatrix l = (CMatrix(4, 4) << 1.0, 0, 0, 0, cplx(0.8, 0.2), 0.5, 0, 0, cplx(0.7, -0.3), cplx(0.1, 0.2), 0.4,
                     0, cplx(0.6, 0.4), cplx(-0.1, 0.1), cplx(0.1, 0.0), 0.5)
                        .finished();
  CovarianceOperator c;
  c.matrix = l * l.adjoint();
  const int n = 40000;
  CMatrix x(4, n);
  for (int j = 0; j < n; ++j) {
    CounterRng r(77, j);
    CVector z(4);
    for (int a = 0; a < 4; ++a) z[a] = r.complex_normal();
    x.col(j) = l * z;
  }
  // Sample Cov(X12, X34) with X_ab = psi_a conj(psi_b).
  const int r1 = 0, r2 = 1, r3 = 2, r4 = 3;
  const CVector x12 = x.row(r1).transpose().cwiseProduct(x.row(r2).adjoint());
  const CVector x34 = x.row(r3).transpose().cwiseProduct(x.row(r4).adjoint());
  const cplx m12 = x12.mean(), m34 = x34.mean();
  const cplx cov = ((x12.array() - m12) * (x34.array() - m34).conjugate()).mean();
  const cplx model = c.matrix(r1, r3) * c.matrix(r4, r2);
  EXPECT_LT(std::abs(cov - model) / std::abs(model), 0.08);
}

TEST(Archive, RoundTrip) {
  const auto st = make_setup();
  auto r = sample_wavefields(st.S, *st.grid, st.h, 7, 123);
  r.omega = 31.4;
  const auto path = (std::filesystem::temp_directory_path() / "holoseis_real.bin").string();
  save_realizations(path, r);
  const auto q = load_realizations(path);
  EXPECT_TRUE(q.fields == r.fields);
  EXPECT_EQ(q.seed, 123u);
  EXPECT_EQ(q.grid_hash, st.grid->hash());
  EXPECT_EQ(q.omega, 31.4);
  { std::ofstream(path, std::ios::binary) << "garbage!"; }
  EXPECT_THROW(load_realizations(path), IoError);
  std::filesystem::remove(path);
}
