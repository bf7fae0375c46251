#include "holoseis/inversion.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "holoseis/errors.hpp"
#include "holoseis/io.hpp"
#include "holoseis/parallel.hpp"

namespace holoseis {

NoiseWeight lavrentiev_weight(const CovarianceOperator& c, double beta) {
  if (!(beta > 0.0)) throw UsageError("Lavrentiev beta must be positive");
  const RVector s = c.weights.cwiseSqrt();
  CMatrix ct = s.cast<cplx>().asDiagonal() * c.matrix * s.cast<cplx>().asDiagonal();
  ct = 0.5 * (ct + ct.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(ct);
  if (es.info() != Eigen::Success) throw NumericalBreakdown("eigendecomposition of the covariance failed");
  // Roundoff-negative eigenvalues of a PSD input are treated as zero.
  const RVector inv = (es.eigenvalues().cwiseMax(0.0).array() + beta).inverse();
  NoiseWeight w;
  w.beta = beta;
  w.w_rec = c.weights;
  w.gamma = es.eigenvectors() * inv.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  return w;
}

double default_beta(const CovarianceOperator& c, double rel) {
  const double tr = (c.weights.array() * c.matrix.diagonal().real().array()).sum();
  return rel * tr / double(c.size());
}

namespace {

double wdot(const RVector& a, const RVector& b, const RVector* w) {
  return w ? (a.array() * b.array() * w->array()).sum() : a.dot(b);
}

bool finite(const RVector& v) { return v.allFinite(); }

}  // namespace

CgResult cg_normal_solve(const LinearMap& apply_normal, const RVector& rhs, double alpha, int max_iter, double tol,
                         const RVector* weights, const LinearMap* project) {
  CgResult out;
  auto proj = [&](const RVector& v) { return project ? (*project)(v) : v; };
  RVector r = proj(rhs);
  out.x = RVector::Zero(rhs.size());
  const double bnorm = std::sqrt(wdot(r, r, weights));
  if (!std::isfinite(bnorm)) throw NumericalBreakdown("non-finite right-hand side in CG");
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  RVector p = r;
  double rr = bnorm * bnorm;
  for (int it = 0; it < max_iter; ++it) {
    const RVector ap = proj(apply_normal(p) + alpha * p);
    const double pap = wdot(p, ap, weights);
    if (!finite(ap) || !std::isfinite(pap)) throw NumericalBreakdown("non-finite value in CG");
    if (pap <= 0.0) throw NumericalBreakdown("normal operator is not positive definite");
    const double a = rr / pap;
    out.x += a * p;
    r -= a * ap;
    const double rr_new = wdot(r, r, weights);
    out.iterations = it + 1;
    out.rel_residual = std::sqrt(rr_new) / bnorm;
    if (out.rel_residual <= tol) {
      out.converged = true;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return out;
}

double power_iteration(const LinearMap& op, const RVector& w, double rel_tol, int max_iter, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  RVector v(w.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform() - 0.5;
  v /= std::sqrt(wdot(v, v, &w));
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const RVector av = op(v);
    const double next = wdot(v, av, &w);
    const double nrm = std::sqrt(wdot(av, av, &w));
    if (!std::isfinite(nrm)) throw NumericalBreakdown("non-finite value in power iteration");
    if (nrm == 0.0) return 0.0;
    v = av / nrm;
    // The Rayleigh quotient converges twice as fast as the vector; a tenth of
    // the target keeps the eigenvalue within rel_tol.
    if (it > 1 && std::abs(next - lambda) <= 0.1 * rel_tol * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

Parametrization::Parametrization(std::shared_ptr<const Stencil> st, const RVector& w_int, std::vector<Quantity> qs,
                                 double smoothing_width, int edge_layers)
    : st_(std::move(st)), n_(st_->size()), qs_(std::move(qs)) {
  if (qs_.empty()) throw UsageError("no quantities to invert for");
  if (w_int.size() != n_) throw UsageError("interior weights do not match the stencil");
  offsets_ = {0};
  for (Quantity q : qs_) offsets_.push_back(offsets_.back() + (q == Quantity::u ? 2 * n_ : n_));
  wz_.resize(size());
  for (std::size_t b = 0; b + 1 < offsets_.size(); ++b)
    for (int k = offsets_[b]; k < offsets_[b + 1]; ++k) wz_[k] = w_int[(k - offsets_[b]) % n_];
  if (smoothing_width > 0.0) {
    smoother_ = gaussian_smoother(st_->lattice, smoothing_width);
    smooth_ = true;
  }
  const Lattice& lat = st_->lattice;
  edge_mask_ = RVector::Ones(n_);
  for (int iy = 0; iy < lat.ny; ++iy)
    for (int ix = 0; ix < lat.nx; ++ix) {
      const int d = std::min({ix, iy, lat.nx - 1 - ix, lat.ny - 1 - iy});
      if (d < edge_layers) edge_mask_[lat.index(ix, iy)] = 0.0;
    }
}

int Parametrization::offset(Quantity q) const {
  for (std::size_t b = 0; b < qs_.size(); ++b)
    if (qs_[b] == q) return offsets_[b];
  return -1;
}

RVector Parametrization::apply_block(Quantity q, const RVector& x, bool transpose) const {
  // Source strength is not masked: it may extend to the lattice edge.
  const bool mask = q != Quantity::S;
  if (!transpose) {
    RVector y = smooth_ ? RVector(smoother_ * x) : x;
    return mask ? RVector(y.cwiseProduct(edge_mask_)) : y;
  }
  // W^{-1} P^T W with uniform-in-block weights reduces to P^T.
  const RVector y = mask ? RVector(x.cwiseProduct(edge_mask_)) : x;
  return smooth_ ? RVector(smoother_.transpose() * y) : y;
}

ParamFields Parametrization::to_fields(const RVector& z) const {
  if (z.size() != size()) throw UsageError("parameter vector has the wrong length");
  ParamFields f;
  for (std::size_t b = 0; b < qs_.size(); ++b) {
    const Quantity q = qs_[b];
    if (q == Quantity::u) {
      f.u = {apply_block(q, z.segment(offsets_[b], n_), false), apply_block(q, z.segment(offsets_[b] + n_, n_), false)};
      continue;
    }
    const RVector v = apply_block(q, z.segment(offsets_[b], n_), false);
    switch (q) {
      case Quantity::S: f.S = v; break;
      case Quantity::c: f.c = v; break;
      case Quantity::rho: f.rho = v; break;
      case Quantity::gamma: f.gamma = v; break;
      case Quantity::u: break;
    }
  }
  return f;
}

RVector Parametrization::from_dual(const ParamFields& g) const {
  RVector z(size());
  for (std::size_t b = 0; b < qs_.size(); ++b) {
    const Quantity q = qs_[b];
    if (!g.has(q)) throw UsageError("dual field missing quantity " + to_string(q));
    if (q == Quantity::u) {
      z.segment(offsets_[b], n_) = apply_block(q, g.u[0], true);
      z.segment(offsets_[b] + n_, n_) = apply_block(q, g.u[1], true);
      continue;
    }
    const RVector& v = q == Quantity::S ? g.S : q == Quantity::c ? g.c : q == Quantity::rho ? g.rho : g.gamma;
    z.segment(offsets_[b], n_) = apply_block(q, v, true);
  }
  return z;
}

RMatrix Parametrization::dense() const {
  check_memory(std::size_t(size()), std::size_t(size()), "dense parametrization");
  RMatrix p = RMatrix::Zero(size(), size());
  RMatrix block = smooth_ ? smoother_ : RMatrix::Identity(n_, n_);
  for (std::size_t b = 0; b < qs_.size(); ++b) {
    const RMatrix m = qs_[b] == Quantity::S ? block : RMatrix(edge_mask_.asDiagonal() * block);
    const int nb = qs_[b] == Quantity::u ? 2 : 1;
    for (int k = 0; k < nb; ++k) p.block(offsets_[b] + k * n_, offsets_[b] + k * n_, n_, n_) = m;
  }
  return p;
}

Evaluation evaluate(const MediumParams& q, const std::vector<FrequencyData>& data, const InversionOptions& o) {
  if (data.empty()) throw UsageError("no frequencies to evaluate");
  const std::size_t nf = data.size();
  Evaluation ev;
  ev.models.resize(nf);
  ev.weights.resize(nf);
  ev.residuals.resize(nf);
  ev.misfit2.resize(nf);
  std::vector<double> noise2(nf);
  parallel_for(nf, [&](std::size_t f) {
    const FrequencyData& d = data[f];
    FrequencyModel m = build_frequency_model(d.g0, q, d.fc, d.boundary.size() ? &d.boundary : nullptr, o.beta_mode);
    NoiseWeight w = o.weighted ? lavrentiev_weight(m.cov, default_beta(m.cov, o.beta_rel)) : identity_weight(m.w_rec);
    if (d.corr.rows() != m.n_receivers() || d.corr.cols() != m.n_receivers())
      throw UsageError("correlation data does not match the receiver count");
    CMatrix res = d.corr - m.cov.matrix;
    ev.misfit2[f] = d.weight * w.misfit2(res);
    const RVector s = m.w_rec.cwiseSqrt();
    const CMatrix ct = s.cast<cplx>().asDiagonal() * m.cov.matrix * s.cast<cplx>().asDiagonal();
    const double tr = (w.gamma * ct).trace().real();
    noise2[f] = d.weight * tr * tr / double(std::max(1, d.n_realizations));
    ev.models[f] = std::move(m);
    ev.weights[f] = std::move(w);
    ev.residuals[f] = std::move(res);
  });
  ev.misfit = std::sqrt(std::accumulate(ev.misfit2.begin(), ev.misfit2.end(), 0.0));
  ev.noise_level = std::sqrt(std::accumulate(noise2.begin(), noise2.end(), 0.0));
  return ev;
}

namespace {

ParamFields zero_fields(const std::vector<Quantity>& qs, int n) {
  ParamFields z;
  for (Quantity q : qs) {
    const RVector v = RVector::Zero(n);
    switch (q) {
      case Quantity::S: z.S = v; break;
      case Quantity::c: z.c = v; break;
      case Quantity::rho: z.rho = v; break;
      case Quantity::gamma: z.gamma = v; break;
      case Quantity::u: z.u = {v, v}; break;
    }
  }
  return z;
}

// sum_f weight_f apply_adjoint(m_f, E_f), evaluated per frequency in parallel
// and reduced in frequency order.
ParamFields band_adjoint(const Evaluation& ev, const std::vector<FrequencyData>& data, const std::vector<Quantity>& qs,
                         const std::function<CMatrix(std::size_t)>& residual) {
  const std::size_t nf = ev.models.size();
  std::vector<ParamFields> parts(nf);
  parallel_for(nf, [&](std::size_t f) { parts[f] = apply_adjoint(ev.models[f], ev.weights[f].apply(residual(f)), qs); });
  ParamFields acc = zero_fields(qs, ev.models.front().n_interior());
  for (std::size_t f = 0; f < nf; ++f) acc.axpy(data[f].weight, parts[f]);
  return acc;
}

}  // namespace

LinearMap normal_operator(const Evaluation& ev, const std::vector<FrequencyData>& data, const Parametrization& par) {
  return [&ev, &data, &par](const RVector& z) {
    const ParamFields dq = par.to_fields(z);
    return par.from_dual(band_adjoint(ev, data, par.quantities(),
                                      [&](std::size_t f) { return apply_derivative(ev.models[f], dq); }));
  };
}

RVector data_gradient(const Evaluation& ev, const std::vector<FrequencyData>& data, const Parametrization& par) {
  return par.from_dual(band_adjoint(ev, data, par.quantities(), [&](std::size_t f) { return ev.residuals[f]; }));
}

double ConstraintOperator::residual(const ParamFields& du) const {
  if (du.u[0].size() * 2 != matrix.cols()) throw UsageError("flow field does not match the constraint");
  RVector v(matrix.cols());
  v << du.u[0], du.u[1];
  const double n = v.norm();
  return n == 0.0 ? 0.0 : (matrix * v).norm() / n;
}

ConstraintOperator make_constraint(const Stencil& st, const RVector& rho) {
  const int n = st.size();
  if (rho.size() != n) throw UsageError("density does not match the stencil");
  ConstraintOperator r;
  r.matrix.resize(n, 2 * n);
  r.matrix.leftCols(n) = RMatrix(st.dx) * rho.asDiagonal();
  r.matrix.rightCols(n) = RMatrix(st.dy) * rho.asDiagonal();
  r.weights = RVector::Ones(n);
  return r;
}

ConstraintBasis constraint_basis(const ConstraintOperator& r, const Parametrization& par) {
  const int off = par.offset(Quantity::u);
  if (off < 0) throw UsageError("mass conservation needs the flow among the unknowns");
  const int n = par.n();
  const RMatrix p = par.dense();
  const RMatrix b = r.matrix * p.middleRows(off, 2 * n);  // n x size
  Eigen::ColPivHouseholderQR<RMatrix> qr(b.transpose());
  qr.setThreshold(1e-10);
  ConstraintBasis cb;
  cb.rank = int(qr.rank());
  if (cb.rank == 0 || cb.rank >= par.size()) throw ConstraintDegenerate("constraint leaves no admissible flow updates");
  const RMatrix q = qr.householderQ();
  cb.q = q.leftCols(cb.rank);
  return cb;
}

RVector irgnm_step(const InversionState& s, const Evaluation& ev, const std::vector<FrequencyData>& data,
                   const Parametrization& par, const InversionOptions& o, StepInfo* info) {
  const RVector z = s.z.size() ? s.z : RVector::Zero(par.size());
  const RVector rhs = data_gradient(ev, data, par) - s.alpha_n * z;
  const CgResult cg =
      cg_normal_solve(normal_operator(ev, data, par), rhs, s.alpha_n, o.max_cg, o.cg_tol, &par.weights());
  if (info) {
    info->cg_iterations = cg.iterations;
    info->cg_residual = cg.rel_residual;
  }
  return cg.x;
}

namespace {

// Field-space normal matrix sum_f w_f K_f W assembled from the kernels, then
// mapped to z coordinates.
RMatrix dense_normal(const Evaluation& ev, const std::vector<FrequencyData>& data, const Parametrization& par) {
  const auto& qs = par.quantities();
  const int m = par.size();
  RMatrix nf = RMatrix::Zero(m, m);
  std::vector<int> off;
  for (Quantity q : qs) off.push_back(par.offset(q));
  for (std::size_t f = 0; f < ev.models.size(); ++f)
    for (std::size_t a = 0; a < qs.size(); ++a)
      for (std::size_t b = 0; b < qs.size(); ++b) {
        const RMatrix k = sensitivity_kernel(qs[a], qs[b], ev.models[f], ev.weights[f]);
        nf.block(off[a], off[b], k.rows(), k.cols()) += data[f].weight * k;
      }
  nf = nf * par.weights().asDiagonal();
  const RMatrix p = par.dense();
  return p.transpose() * nf * p;
}

}  // namespace

RVector constrained_flow_step(const InversionState& s, const Evaluation& ev, const std::vector<FrequencyData>& data,
                              const Parametrization& par, const ConstraintBasis& basis, const InversionOptions& o,
                              StepInfo* info, int dense_limit) {
  const int m = par.size();
  const RVector z = s.z.size() ? s.z : RVector::Zero(m);
  const RVector rhs = data_gradient(ev, data, par) - s.alpha_n * z;
  StepInfo local;
  StepInfo& si = info ? *info : local;
  RVector dz;
  if (m <= dense_limit) {
    const int r = basis.rank;
    RMatrix kkt = RMatrix::Zero(m + r, m + r);
    kkt.topLeftCorner(m, m) = dense_normal(ev, data, par);
    kkt.topLeftCorner(m, m).diagonal().array() += s.alpha_n;
    kkt.topRightCorner(m, r) = basis.q;
    kkt.bottomLeftCorner(r, m) = basis.q.transpose();
    RVector b = RVector::Zero(m + r);
    b.head(m) = rhs;
    Eigen::PartialPivLU<RMatrix> lu(kkt);
    const RVector x = lu.solve(b);
    if (!x.allFinite()) throw NumericalBreakdown("KKT solve produced non-finite values");
    si.dense_kkt = true;
    si.kkt_residual = (kkt * x - b).norm() / b.norm();
    dz = basis.project(x.head(m));
  } else {
    const LinearMap proj = [&basis](const RVector& v) { return basis.project(v); };
    const CgResult cg = cg_normal_solve(normal_operator(ev, data, par), rhs, s.alpha_n, o.max_cg, o.cg_tol,
                                        &par.weights(), &proj);
    si.cg_iterations = cg.iterations;
    si.cg_residual = cg.rel_residual;
    dz = basis.project(cg.x);
  }
  return dz;
}

namespace {

bool clamp(MediumParams& p) {
  bool hit = false;
  auto floor = [&](RVector& v, double lo) {
    if ((v.array() < lo).any()) hit = true;
    v = v.cwiseMax(lo);
  };
  floor(p.f.S, 0.0);
  floor(p.f.c, p.c_min);
  floor(p.f.rho, p.rho_min);
  floor(p.f.gamma, 0.0);
  return hit;
}

MediumParams apply_update(const MediumParams& q0, const Parametrization& par, const RVector& z, bool* clamped) {
  MediumParams q = q0;
  q.f.axpy(1.0, par.to_fields(z));
  const bool hit = clamp(q);
  if (clamped) *clamped = hit;
  return q;
}

double param_error(const MediumParams& q, const MediumParams& truth, const RVector& w, const std::vector<Quantity>& qs) {
  double s = 0.0;
  auto acc = [&](const RVector& a, const RVector& b) { s += (w.array() * (a - b).array().square()).sum(); };
  for (Quantity k : qs) {
    switch (k) {
      case Quantity::S: acc(q.f.S, truth.f.S); break;
      case Quantity::c: acc(q.f.c, truth.f.c); break;
      case Quantity::rho: acc(q.f.rho, truth.f.rho); break;
      case Quantity::gamma: acc(q.f.gamma, truth.f.gamma); break;
      case Quantity::u:
        acc(q.f.u[0], truth.f.u[0]);
        acc(q.f.u[1], truth.f.u[1]);
        break;
    }
  }
  return std::sqrt(s);
}

std::string checkpoint_path(const std::string& dir) { return (std::filesystem::path(dir) / "checkpoint.json").string(); }

void save_checkpoint(const InversionResult& r, int fails, const std::string& dir) {
  io::ensure_directory(dir);
  nlohmann::json j;
  j["iteration"] = r.state.iteration;
  j["alpha_0"] = r.state.alpha_0;
  j["alpha_n"] = r.state.alpha_n;
  j["failures"] = fails;
  j["misfit_history"] = r.state.misfit_history;
  j["z"] = std::vector<double>(r.state.z.data(), r.state.z.data() + r.state.z.size());
  const std::string path = checkpoint_path(dir), tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw IoError("cannot write checkpoint " + tmp);
    os << j.dump(1) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

bool load_checkpoint(InversionState& s, int& fails, const std::string& dir, int size) {
  std::ifstream is(checkpoint_path(dir));
  if (!is) return false;
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw IoError(std::string("corrupt checkpoint: ") + e.what());
  }
  const auto z = j.at("z").get<std::vector<double>>();
  if (int(z.size()) != size) throw IoError("checkpoint does not match the parametrization");
  s.z = Eigen::Map<const RVector>(z.data(), Eigen::Index(z.size()));
  s.iteration = j.at("iteration").get<int>();
  s.alpha_0 = j.at("alpha_0").get<double>();
  s.alpha_n = j.at("alpha_n").get<double>();
  s.misfit_history = j.at("misfit_history").get<std::vector<double>>();
  fails = j.value("failures", 0);
  return true;
}

}  // namespace

InversionResult run_irgnm(const MediumParams& q0, const std::vector<FrequencyData>& data, const InversionOptions& o,
                          const MediumParams* truth) {
  if (data.empty()) throw UsageError("no frequencies to invert");
  if (o.max_outer < 0 || o.max_cg < 1) throw UsageError("iteration limits must be positive");
  if (!(o.tau > 0.0)) throw UsageError("discrepancy factor tau must be positive");
  const Grid& grid = *data.front().g0->grid;
  RVector w_int(grid.n_interior());
  for (int i = 0; i < grid.n_interior(); ++i) w_int[i] = grid.weights[grid.interior_idx[i]];
  const Parametrization par(q0.stencil, w_int, o.quantities, o.smoothing_width, o.edge_layers);

  InversionResult res;
  InversionState& s = res.state;
  s.q_0 = q0;
  s.z = RVector::Zero(par.size());
  int fails = 0;
  bool resumed = false;
  if (o.resume && !o.checkpoint_dir.empty()) resumed = load_checkpoint(s, fails, o.checkpoint_dir, par.size());
  s.q_n = apply_update(q0, par, s.z, nullptr);

  const double err0 = truth ? param_error(q0, *truth, w_int, o.quantities) : 0.0;
  auto record = [&](const Evaluation& ev, int cg_it, int backtracks, bool accepted, bool clamped, double cres) {
    IterationRecord r;
    r.iteration = s.iteration;
    r.alpha = s.alpha_n;
    r.misfit = ev.misfit;
    r.noise_level = ev.noise_level;
    if (truth && err0 > 0.0) r.param_error = param_error(s.q_n, *truth, w_int, o.quantities) / err0;
    r.cg_iterations = cg_it;
    r.backtracks = backtracks;
    r.accepted = accepted;
    r.clamped = clamped;
    r.constraint_residual = cres;
    r.per_frequency.assign(ev.misfit2.begin(), ev.misfit2.end());
    for (double& v : r.per_frequency) v = std::sqrt(v);
    res.history.push_back(std::move(r));
  };

  Evaluation ev = evaluate(s.q_n, data, o);
  s.noise_level = ev.noise_level;
  if (!resumed) {
    s.misfit_history = {ev.misfit};
    s.alpha_0 = o.alpha0 > 0.0 ? o.alpha0
                               : o.alpha0_rel * power_iteration(normal_operator(ev, data, par), par.weights());
    if (!(s.alpha_0 > 0.0)) throw NumericalBreakdown("normal operator vanishes; no sensitivity to the unknowns");
    s.alpha_n = s.alpha_0;
  }
  record(ev, 0, 0, true, false, 0.0);

  const bool constrained = o.mass_conservation;
  ConstraintBasis basis;
  if (constrained) basis = constraint_basis(make_constraint(*q0.stencil, q0.f.rho), par);

  res.stop_reason = "max_outer";
  while (s.iteration < o.max_outer) {
    if (ev.misfit <= o.tau * ev.noise_level) {
      res.stop_reason = "discrepancy";
      break;
    }
    StepInfo info;
    const RVector dz = constrained ? constrained_flow_step(s, ev, data, par, basis, o, &info)
                                   : irgnm_step(s, ev, data, par, o, &info);
    double t = 1.0;
    bool accepted = false, clamped = false;
    int bt = 0;
    Evaluation ev_try;
    RVector z_try;
    MediumParams q_try;
    for (; bt <= o.max_backtrack; ++bt, t *= 0.5) {
      z_try = s.z + t * dz;
      q_try = apply_update(q0, par, z_try, &clamped);
      ev_try = evaluate(q_try, data, o);
      if (ev_try.misfit <= ev.misfit) {
        accepted = true;
        break;
      }
    }
    ++s.iteration;
    s.alpha_n = s.alpha_0 * std::pow(o.alpha_decay, s.iteration);
    double cres = 0.0;
    if (accepted) {
      s.z = z_try;
      s.q_n = std::move(q_try);
      ev = std::move(ev_try);
      fails = 0;
      if (constrained) cres = make_constraint(*q0.stencil, q0.f.rho).residual(par.to_fields(t * dz));
    } else {
      ++fails;
    }
    s.noise_level = ev.noise_level;
    s.misfit_history.push_back(ev.misfit);
    record(ev, info.cg_iterations, std::min(bt, o.max_backtrack), accepted, accepted && clamped, cres);
    if (!o.checkpoint_dir.empty()) save_checkpoint(res, fails, o.checkpoint_dir);
    if (fails >= 3) {
      res.stop_reason = "divergence";
      break;
    }
  }
  if (res.stop_reason == "max_outer" && ev.misfit <= o.tau * ev.noise_level) res.stop_reason = "discrepancy";
  return res;
}

void write_diagnostics(const InversionResult& r, const std::string& dir) {
  io::ensure_directory(dir);
  std::vector<std::string> header = {"iteration",     "alpha",      "weighted_misfit", "noise_level",
                                     "param_error",   "cg_iterations", "backtracks",   "accepted",
                                     "clamped",       "constraint_residual"};
  const std::size_t nf = r.history.empty() ? 0 : r.history.front().per_frequency.size();
  for (std::size_t f = 0; f < nf; ++f) header.push_back("misfit_f" + std::to_string(f));
  std::vector<std::vector<double>> rows;
  for (const auto& h : r.history) {
    std::vector<double> row = {double(h.iteration), h.alpha, h.misfit, h.noise_level, h.param_error,
                               double(h.cg_iterations), double(h.backtracks), h.accepted ? 1.0 : 0.0,
                               h.clamped ? 1.0 : 0.0, h.constraint_residual};
    row.insert(row.end(), h.per_frequency.begin(), h.per_frequency.end());
    rows.push_back(std::move(row));
  }
  io::write_csv((std::filesystem::path(dir) / "diagnostics.csv").string(), header, rows);
  nlohmann::json j;
  j["stop_reason"] = r.stop_reason;
  j["iterations"] = r.state.iteration;
  j["alpha_0"] = r.state.alpha_0;
  j["alpha_final"] = r.state.alpha_n;
  j["misfit_history"] = r.state.misfit_history;
  j["noise_level"] = r.state.noise_level;
  if (!r.history.empty() && r.history.back().param_error >= 0.0) j["final_param_error"] = r.history.back().param_error;
  std::ofstream os((std::filesystem::path(dir) / "summary.json").string());
  if (!os) throw IoError("cannot write inversion summary in " + dir);
  os << j.dump(1) << "\n";
}

}  // namespace holoseis
