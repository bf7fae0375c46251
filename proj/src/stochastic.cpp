#include "holoseis/stochastic.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <fstream>

#include "holoseis/errors.hpp"
#include "holoseis/io.hpp"
#include "holoseis/parallel.hpp"

namespace holoseis {
namespace {

constexpr char kArchiveMagic[8] = {'H', 'S', 'R', 'E', 'A', 'L', 'Z', '1'};
constexpr int kBatch = 128;

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Square root factor L with L L^* = B for a PSD receiver matrix.
CMatrix psd_factor(const CMatrix& b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (b + b.adjoint()));
  const double floor = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -floor) throw UsageError("boundary source covariance is not PSD");
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cplx>().asDiagonal();
}

RVector interior_weights(const Grid& g) {
  RVector w(g.n_interior());
  for (int i = 0; i < g.n_interior(); ++i) w[i] = g.weights[g.interior_idx[i]];
  return w;
}

RVector receiver_weights(const Grid& g) {
  RVector w(g.n_receivers());
  for (int i = 0; i < g.n_receivers(); ++i) w[i] = g.weights[g.receiver_idx[i]];
  return w;
}

void check_shapes(const RVector& S, const Grid& g, const CMatrix& h, const CMatrix* b) {
  if (S.size() != g.n_interior()) throw UsageError("source field does not match interior");
  if (h.rows() != g.n_receivers() || h.cols() != g.size()) throw UsageError("receiver rows have the wrong shape");
  if (b && (b->rows() != g.n_receivers() || b->cols() != g.n_receivers()))
    throw UsageError("boundary source has the wrong shape");
  if (S.size() && S.minCoeff() < 0.0) throw InvalidParameter("negative source strength");
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix(s);
  std::uint64_t t = stream ^ 0x5851f42d4c957f2dull;
  state_ = a ^ splitmix(t);
}

std::uint64_t CounterRng::next() { return splitmix(state_); }

double CounterRng::uniform() { return (double(next() >> 11) + 0.5) * 0x1.0p-53; }

cplx CounterRng::complex_normal() {
  // Box-Muller; each pair of uniforms gives one circular sample.
  const double r = std::sqrt(-std::log(uniform()));
  const double t = 2.0 * kPi * uniform();
  return {r * std::cos(t), r * std::sin(t)};
}

double CovarianceOperator::hs_dot(const CMatrix& a, const CMatrix& b) const {
  if (!weights.size()) return (a.array() * b.array().conjugate()).real().sum();
  const RMatrix ww = weights * weights.transpose();
  return (ww.array() * (a.array() * b.array().conjugate()).real()).sum();
}

CovarianceOperator forward_covariance(const RVector& S, const Grid& g, const CMatrix& h, const CMatrix* boundary) {
  check_shapes(S, g, h, boundary);
  const RVector w = interior_weights(g);
  const CMatrix hi = h(Eigen::all, g.interior_idx);
  const RVector sw = (S.array() * w.array()).sqrt();
  const CMatrix f = hi * sw.cast<cplx>().asDiagonal();
  CovarianceOperator c;
  c.matrix = f * f.adjoint();
  if (boundary) {
    const CMatrix hr = h(Eigen::all, g.receiver_idx);
    c.matrix += hr * (*boundary) * hr.adjoint();
  }
  c.matrix = 0.5 * (c.matrix + c.matrix.adjoint()).eval();
  c.weights = receiver_weights(g);
  return c;
}

CovarianceOperator forward_covariance(const HelmholtzParams& hp, const PerturbedGreens& gq, const CMatrix* boundary) {
  return forward_covariance(hp.S, gq.grid(), gq.receiver_rows(), boundary);
}

RealizationSet sample_wavefields(const RVector& S, const Grid& g, const CMatrix& h, int n, std::uint64_t seed,
                                 const CMatrix* boundary, int first) {
  if (n < 1) throw UsageError("need at least one realization");
  check_shapes(S, g, h, boundary);
  const int ni = g.n_interior(), nr = g.n_receivers();
  const RVector amp = (S.array() * interior_weights(g).array()).sqrt();
  std::vector<int> active;
  for (int i = 0; i < ni; ++i)
    if (amp[i] > 0.0) active.push_back(i);
  std::vector<int> cols;
  for (int i : active) cols.push_back(g.interior_idx[i]);
  const CMatrix ha = h(Eigen::all, cols) * amp(active).cast<cplx>().asDiagonal();
  CMatrix hb;
  if (boundary) hb = h(Eigen::all, g.receiver_idx) * psd_factor(*boundary);

  RealizationSet r;
  r.seed = seed;
  r.grid_hash = g.hash();
  r.fields = CMatrix::Zero(nr, n);
  const int nbatch = (n + kBatch - 1) / kBatch;
  parallel_for(std::size_t(nbatch), [&](std::size_t b) {
    const int j0 = int(b) * kBatch, j1 = std::min(n, j0 + kBatch);
    CMatrix xs(active.size(), j1 - j0);
    CMatrix xb(boundary ? nr : 0, j1 - j0);
    for (int j = j0; j < j1; ++j) {
      CounterRng rng(seed, std::uint64_t(first + j));
      for (std::size_t a = 0; a < active.size(); ++a) xs(a, j - j0) = rng.complex_normal();
      for (int a = 0; a < xb.rows(); ++a) xb(a, j - j0) = rng.complex_normal();
    }
    CMatrix out = ha * xs;
    if (boundary) out += hb * xb;
    r.fields.middleCols(j0, j1 - j0) = out;
  });
  return r;
}

RealizationSet sample_wavefields(const HelmholtzParams& hp, const PerturbedGreens& gq, int n, std::uint64_t seed,
                                 const CMatrix* boundary) {
  RealizationSet r = sample_wavefields(hp.S, gq.grid(), gq.receiver_rows(), n, seed, boundary);
  r.omega = hp.omega;
  return r;
}

CovarianceOperator empirical_corr(const RealizationSet& r, const RVector& weights) {
  if (r.count() < 1) throw UsageError("empty realization set");
  CovarianceOperator c;
  c.matrix = (r.fields * r.fields.adjoint()) / double(r.count());
  c.matrix = 0.5 * (c.matrix + c.matrix.adjoint()).eval();
  c.weights = weights;
  return c;
}

CMatrix empirical_pseudo_corr(const RealizationSet& r) { return (r.fields * r.fields.transpose()) / double(r.count()); }

RVector source_cov_from_damping(const MediumParams& p, const FrequencyContext& fc) {
  if (p.f.gamma.size() && p.f.gamma.minCoeff() < 0.0) throw InvalidParameter("negative damping");
  return fc.power_spectrum * p.f.gamma.array() / p.f.c.array().square();
}

CMatrix imaginary_part_covariance(const CMatrix& g_rr, double omega, double power) {
  return (power / (4.0 * kI * omega)) * (g_rr - g_rr.conjugate());
}

CMatrix isserlis_cov4_apply(const CovarianceOperator& c, const CMatrix& e) {
  if (e.rows() != c.size() || e.cols() != c.size()) throw UsageError("shape mismatch in fourth-moment apply");
  return c.matrix * e * c.matrix;
}

void save_realizations(const std::string& path, const RealizationSet& r) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kArchiveMagic, 8);
  io::write_u64(os, r.grid_hash);
  io::write_f64(os, r.omega);
  io::write_u64(os, std::uint64_t(r.count()));
  io::write_u64(os, r.seed);
  io::write_matrix(os, r.fields, io::MatrixKind::field);
  if (!os) throw IoError("failed writing " + path);
}

RealizationSet load_realizations(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kArchiveMagic, 8) != 0) throw IoError(path + " is not a realization archive");
  RealizationSet r;
  r.grid_hash = io::read_u64(is);
  r.omega = io::read_f64(is);
  const std::uint64_t n = io::read_u64(is);
  r.seed = io::read_u64(is);
  r.fields = io::read_matrix(is);
  if (std::uint64_t(r.fields.cols()) != n) throw IoError(path + ": realization count does not match payload");
  return r;
}

}  // namespace holoseis
