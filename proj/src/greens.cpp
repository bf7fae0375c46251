#include "holoseis/greens.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "holoseis/errors.hpp"
#include "holoseis/io.hpp"
#include "holoseis/parallel.hpp"
#include "holoseis/specfun.hpp"

namespace holoseis {
namespace {

std::size_t g_budget = std::size_t(1) << 30;

double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// Legendre P_0..P_n at x.
std::vector<double> legendre(int n, double x) {
  std::vector<double> p(n + 1);
  p[0] = 1.0;
  if (n >= 1) p[1] = x;
  for (int l = 1; l < n; ++l) p[l + 1] = ((2.0 * l + 1.0) * x * p[l] - l * p[l - 1]) / (l + 1.0);
  return p;
}

std::string cache_path(const Grid& g, cplx k, int d) {
  const char* dir = std::getenv("HOLOSEIS_CACHE");
  if (!dir || !*dir) return {};
  std::uint64_t key = g.hash();
  const double parts[3] = {k.real(), k.imag(), double(d)};
  for (double p : parts) {
    std::uint64_t bits;
    std::memcpy(&bits, &p, sizeof bits);
    key ^= bits + 0x9e3779b97f4a7c15ull + (key << 6) + (key >> 2);
  }
  char name[64];
  std::snprintf(name, sizeof name, "green_%016llx.hsgm", static_cast<unsigned long long>(key));
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

cplx green_uniform_r(int d, cplx k, double r) {
  if (!(r > 0.0)) throw SingularityError("Green's function evaluated at coincident points");
  if (d == 2) return 0.25 * kI * specfun::hankel_h1(0, k * r);
  if (d == 3) return std::exp(kI * k * r) / (4.0 * kPi * r);
  throw UsageError("dimension must be 2 or 3");
}

cplx green_uniform(int d, cplx k, const Vec3& x, const Vec3& y) { return green_uniform_r(d, k, distance(x, y)); }

cplx green_diagonal_2d(cplx k, double a) {
  if (!(a > 0.0)) throw UsageError("cell radius must be positive");
  // Average of ln(1/r) over a disk of radius a is ln(1/a) + 1/2.
  return (std::log(1.0 / a) + 0.5) / (2.0 * kPi) + 0.25 * kI - std::log(0.5 * k) / (2.0 * kPi) -
         specfun::kEulerGamma / (2.0 * kPi);
}

cplx green_diagonal_3d(cplx k, double a) {
  if (!(a > 0.0)) throw UsageError("cell radius must be positive");
  // Average of 1/r over a ball of radius a is 3/(2a).
  return 3.0 / (8.0 * kPi * a) + kI * k / (4.0 * kPi);
}

cplx green_modal(int d, cplx k, double r_out, double r_in, double angle, int n_max) {
  if (!(r_in < r_out)) throw DomainError("modal series needs r_in < r_out");
  if (n_max < 0 || n_max > specfun::kMaxOrder) throw DomainError("modal order out of range");
  if (d == 2) {
    const auto h = specfun::hankel_h1_orders(n_max, k * r_out);
    const auto j = specfun::bessel_j_orders(n_max, k * r_in);
    cplx s = h[0] * j[0];
    for (int n = 1; n <= n_max; ++n) {
      const cplx t = h[n] * j[n];
      if (!std::isfinite(t.real()) || !std::isfinite(t.imag())) break;
      s += 2.0 * t * std::cos(n * angle);
    }
    return 0.25 * kI * s;
  }
  if (d == 3) {
    const auto h = specfun::spherical_h1_orders(n_max, k * r_out);
    const auto j = r_in > 0.0 ? specfun::spherical_j_orders(n_max, k * r_in) : std::vector<cplx>{};
    const auto p = legendre(n_max, std::cos(angle));
    cplx s = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      const cplx jn = r_in > 0.0 ? j[n] : (n == 0 ? cplx(1.0) : cplx(0.0));
      const cplx t = h[n] * jn;
      if (!std::isfinite(t.real()) || !std::isfinite(t.imag())) break;
      s += (2.0 * n + 1.0) / (4.0 * kPi) * t * p[n];
    }
    return kI * k * s;
  }
  throw UsageError("dimension must be 2 or 3");
}

CMatrix GreensOperator::receiver_rows() const { return kernel(grid->receiver_idx, Eigen::all); }

void set_memory_budget(std::size_t bytes) { g_budget = bytes; }
std::size_t memory_budget() { return g_budget; }

void check_memory(std::size_t rows, std::size_t cols, const char* what) {
  const double bytes = double(rows) * double(cols) * sizeof(cplx);
  if (bytes > double(g_budget))
    throw MemoryBudgetError(std::string(what) + " needs " + std::to_string(bytes / (1 << 20)) +
                            " MiB, above the configured budget");
}

cplx self_interaction(const Grid& g, int i, cplx k) {
  const double w = g.weights[i];
  if (g.dim == 2) {
    if (g.volume_cell[i]) return green_diagonal_2d(k, std::sqrt(w / kPi));
    // Arc cell of length w: the mean of ln(1/|t|) over [-w/2, w/2] is ln(2/w) + 1,
    // which is the disk formula with radius a = (w/2) e^{-1/2}.
    return green_diagonal_2d(k, 0.5 * w * std::exp(-0.5));
  }
  if (g.volume_cell[i]) return green_diagonal_3d(k, std::cbrt(3.0 * w / (4.0 * kPi)));
  // Surface cell of area w taken as a disk: mean of 1/r is 2/a.
  const double a = std::sqrt(w / kPi);
  return 1.0 / (2.0 * kPi * a) + kI * k / (4.0 * kPi);
}

CMatrix assemble_green_block(const Grid& g, cplx k, const std::vector<int>& rows, const std::vector<int>& cols) {
  check_memory(rows.size(), cols.size(), "Green block");
  CMatrix out(rows.size(), cols.size());
  parallel_for(rows.size(), [&](std::size_t a) {
    const int i = rows[a];
    for (std::size_t b = 0; b < cols.size(); ++b) {
      const int j = cols[b];
      out(a, b) = i == j ? self_interaction(g, i, k) : green_uniform(g.dim, k, g.nodes[i], g.nodes[j]);
    }
  });
  return out;
}

GreensOperator assemble_green(std::shared_ptr<const Grid> grid, cplx k, int d, double omega) {
  if (!grid) throw UsageError("null grid");
  grid->validate();
  if (d != grid->dim) throw UsageError("dimension does not match grid");
  const int n = grid->size();
  check_memory(n, n, "Green's operator");
  GreensOperator g;
  g.k_ref = k;
  g.omega = omega;
  g.dim = d;
  g.grid = grid;

  const std::string cached = cache_path(*grid, k, d);
  if (!cached.empty() && std::filesystem::exists(cached)) {
    io::MatrixKind kind;
    CMatrix m = io::load_matrix(cached, &kind);
    if (m.rows() == n && m.cols() == n && kind == io::MatrixKind::green) {
      g.kernel = std::move(m);
      return g;
    }
  }

  g.kernel.resize(n, n);
  parallel_for(std::size_t(n), [&](std::size_t a) {
    const int i = int(a);
    g.kernel(i, i) = self_interaction(*grid, i, k);
    for (int j = i + 1; j < n; ++j) g.kernel(i, j) = green_uniform(d, k, grid->nodes[i], grid->nodes[j]);
  });
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.kernel(j, i) = g.kernel(i, j);

  if (!cached.empty()) {
    io::ensure_directory(std::filesystem::path(cached).parent_path().string());
    const std::string tmp = cached + ".tmp";
    io::save_matrix(tmp, g.kernel, io::MatrixKind::green);
    std::filesystem::rename(tmp, cached);
  }
  return g;
}

ModalFactors modal_factors(const Grid& g, cplx k, int n_max) {
  ModalFactors f;
  f.dim = g.dim;
  f.n_max = n_max;
  f.k = k;
  const int n = g.size();
  f.radius.resize(n);
  f.theta.resize(n);
  f.phi.resize(n);
  f.j.resize(n, n_max + 1);
  f.h.resize(n, n_max + 1);
  for (int i = 0; i < n; ++i) {
    const Vec3& x = g.nodes[i];
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    f.radius[i] = r;
    f.phi[i] = std::atan2(x[1], x[0]);
    f.theta[i] = r > 0.0 ? std::acos(std::clamp(x[2] / r, -1.0, 1.0)) : 0.0;
    std::vector<cplx> jj, hh;
    if (g.dim == 2) {
      jj = specfun::bessel_j_orders(n_max, k * r);
      if (r > 0.0) hh = specfun::hankel_h1_orders(n_max, k * r);
    } else {
      jj = specfun::spherical_j_orders(n_max, k * r);
      if (r > 0.0) hh = specfun::spherical_h1_orders(n_max, k * r);
    }
    for (int m = 0; m <= n_max; ++m) {
      f.j(i, m) = jj[m];
      f.h(i, m) = r > 0.0 ? hh[m] : cplx(INFINITY, 0.0);
    }
  }
  return f;
}

cplx modal_entry(const ModalFactors& f, const Grid& g, int a, int b) {
  if (a == b) return self_interaction(g, a, f.k);
  int out = a, in = b;
  if (f.radius[b] > f.radius[a]) std::swap(out, in);
  if (!(f.radius[in] < f.radius[out] * (1.0 - 1e-12))) return green_uniform(g.dim, f.k, g.nodes[a], g.nodes[b]);
  if (g.dim == 2) {
    const double angle = f.phi[a] - f.phi[b];
    cplx s = f.h(out, 0) * f.j(in, 0);
    for (int n = 1; n <= f.n_max; ++n) {
      const cplx t = f.h(out, n) * f.j(in, n);
      if (!std::isfinite(t.real()) || !std::isfinite(t.imag())) break;
      s += 2.0 * t * std::cos(n * angle);
    }
    return 0.25 * kI * s;
  }
  const Vec3& x = g.nodes[a];
  const Vec3& y = g.nodes[b];
  const double ra = f.radius[a], rb = f.radius[b];
  const double c = ra > 0.0 && rb > 0.0 ? (x[0] * y[0] + x[1] * y[1] + x[2] * y[2]) / (ra * rb) : 1.0;
  const auto p = legendre(f.n_max, std::clamp(c, -1.0, 1.0));
  cplx s = 0.0;
  for (int n = 0; n <= f.n_max; ++n) {
    const cplx t = f.h(out, n) * f.j(in, n);
    if (!std::isfinite(t.real()) || !std::isfinite(t.imag())) break;
    s += (2.0 * n + 1.0) / (4.0 * kPi) * t * p[n];
  }
  return kI * f.k * s;
}

GreensOperator assemble_green_modal(std::shared_ptr<const Grid> grid, cplx k, int n_max, double omega) {
  grid->validate();
  const int n = grid->size();
  check_memory(n, n, "Green's operator");
  const ModalFactors f = modal_factors(*grid, k, n_max);
  GreensOperator g;
  g.k_ref = k;
  g.omega = omega;
  g.dim = grid->dim;
  g.grid = grid;
  g.kernel.resize(n, n);
  parallel_for(std::size_t(n), [&](std::size_t a) {
    for (int b = 0; b < n; ++b) g.kernel(a, b) = modal_entry(f, *grid, int(a), b);
  });
  return g;
}

bool DeltaOperator::has_flow() const {
  for (const auto& a : dA)
    if (a.size() && a.cwiseAbs().maxCoeff() > 0.0) return true;
  return false;
}

bool DeltaOperator::is_zero() const { return row_support().empty(); }

std::vector<int> DeltaOperator::row_support() const {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < dv.size(); ++i) {
    bool nz = dv[i] != cplx(0.0);
    for (const auto& a : dA)
      if (a.size() && a[i] != 0.0) nz = true;
    if (nz) out.push_back(int(i));
  }
  return out;
}

Eigen::SparseMatrix<cplx> DeltaOperator::matrix() const {
  const int n = int(dv.size());
  std::vector<Eigen::Triplet<cplx>> t;
  for (int i = 0; i < n; ++i)
    if (dv[i] != cplx(0.0)) t.emplace_back(i, i, dv[i]);
  for (int axis = 0; axis < 2; ++axis) {
    const RVector& a = dA[axis];
    if (!a.size()) continue;
    if (!stencil) throw UsageError("flow perturbation needs a gradient stencil");
    const RSparse& d = stencil->d(axis);
    for (int k = 0; k < d.outerSize(); ++k)
      for (RSparse::InnerIterator it(d, k); it; ++it)
        if (a[it.row()] != 0.0) t.emplace_back(int(it.row()), int(it.col()), -2.0 * kI * a[it.row()] * it.value());
  }
  Eigen::SparseMatrix<cplx> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

DeltaOperator make_delta(std::shared_ptr<const Stencil> stencil, CVector dv) {
  DeltaOperator d;
  d.dv = std::move(dv);
  d.stencil = std::move(stencil);
  return d;
}

DeltaOperator make_delta(std::shared_ptr<const Stencil> stencil, CVector dv, RVector ax, RVector ay) {
  DeltaOperator d = make_delta(std::move(stencil), std::move(dv));
  d.dA = {std::move(ax), std::move(ay)};
  return d;
}

PerturbedGreens::PerturbedGreens(std::shared_ptr<const GreensOperator> g0, const DeltaOperator& delta)
    : g0_(std::move(g0)) {
  const Grid& g = *g0_->grid;
  if (delta.dv.size() != g.n_interior()) throw UsageError("perturbation size does not match interior");
  const auto rows = delta.row_support();
  if (rows.empty()) return;

  // Row-compressed W dL on the support rows.
  const Eigen::SparseMatrix<cplx, Eigen::RowMajor> dl = delta.matrix();
  std::set<int> cols;
  for (int r : rows)
    for (Eigen::SparseMatrix<cplx, Eigen::RowMajor>::InnerIterator it(dl, r); it; ++it) cols.insert(int(it.col()));
  std::vector<int> pos(g.n_interior(), -1);
  for (int c : cols) {
    pos[c] = int(t_nodes_.size());
    t_nodes_.push_back(g.interior_idx[c]);
  }
  const int nt = int(t_nodes_.size());
  const int n = g.size();
  check_memory(n, nt, "resolvent support block");

  m_t_ = CMatrix::Zero(n, nt);
  for (int r : rows) {
    const int node = g.interior_idx[r];
    const double w = g.weights[node];
    for (Eigen::SparseMatrix<cplx, Eigen::RowMajor>::InnerIterator it(dl, r); it; ++it)
      m_t_.col(pos[it.col()]) += (w * it.value()) * g0_->kernel.col(node);
  }
  CMatrix a = m_t_(t_nodes_, Eigen::all);
  a.diagonal().array() += 1.0;
  lu_.compute(a);
  rcond_ = lu_.rcond();
  if (!(rcond_ > 1e-12))
    throw ResonanceError("I + G0 dL is near singular (condition estimate above 1e12)");
}

CMatrix PerturbedGreens::resolve(const CMatrix& z) const {
  if (trivial()) return z;
  const CMatrix xt = lu_.solve(z(t_nodes_, Eigen::all));
  return z - m_t_ * xt;
}

CMatrix PerturbedGreens::receiver_rows() const {
  const auto& rec = g0_->grid->receiver_idx;
  CMatrix h = g0_->kernel(rec, Eigen::all);
  if (trivial()) return h;
  // Receivers are outside T, so row r of (I + M)^{-1} is e_r - M[r,T] A^{-1}.
  const CMatrix x = lu_.solve(g0_->kernel(t_nodes_, Eigen::all));
  h.noalias() -= m_t_(rec, Eigen::all) * x;
  return h;
}

CMatrix PerturbedGreens::apply(const CMatrix& y) const { return resolve(g0_->kernel * y); }

CMatrix PerturbedGreens::kernel() const { return resolve(g0_->kernel); }

GreensOperator update_green(const GreensOperator& g0, const DeltaOperator& delta) {
  if (delta.is_zero()) return g0;
  std::shared_ptr<const GreensOperator> view(std::shared_ptr<const GreensOperator>{}, &g0);
  PerturbedGreens pg(view, delta);
  GreensOperator out;
  out.k_ref = g0.k_ref;
  out.omega = g0.omega;
  out.dim = g0.dim;
  out.grid = g0.grid;
  out.kernel = pg.kernel();
  return out;
}

}  // namespace holoseis
