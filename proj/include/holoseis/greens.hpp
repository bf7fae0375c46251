#pragma once

#include <Eigen/LU>
#include <Eigen/Sparse>
#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "holoseis/grid.hpp"
#include "holoseis/stencil.hpp"
#include "holoseis/types.hpp"

namespace holoseis {

// Outgoing free-space Green's function of -(Laplace + k^2).
cplx green_uniform(int d, cplx k, const Vec3& x, const Vec3& y);
cplx green_uniform_r(int d, cplx k, double r);

// Self-interaction of a disk of the given radius: the cell average of the
// logarithmic singularity plus the constant terms of the small-r expansion.
cplx green_diagonal_2d(cplx k, double cell_radius);
// Ball average of 1/(4 pi r) plus the constant ik/(4 pi).
cplx green_diagonal_3d(cplx k, double cell_radius);

// Addition-theorem series, valid for r_in < r_out. The 2D series carries the
// i/4 normalisation so that it converges to green_uniform.
cplx green_modal(int d, cplx k, double r_out, double r_in, double angle, int n_max);

struct GreensOperator {
  CMatrix kernel;
  cplx k_ref = 0.0;
  double omega = 0.0;
  int dim = 2;
  std::shared_ptr<const Grid> grid;

  CMatrix receiver_rows() const;
};

void set_memory_budget(std::size_t bytes);
std::size_t memory_budget();
void check_memory(std::size_t rows, std::size_t cols, const char* what);

// Self term for node i: disk/ball average for lattice cells, segment/disk
// average for receiver arc cells.
cplx self_interaction(const Grid& g, int i, cplx k);

GreensOperator assemble_green(std::shared_ptr<const Grid> grid, cplx k, int d, double omega = 0.0);
CMatrix assemble_green_block(const Grid& g, cplx k, const std::vector<int>& rows, const std::vector<int>& cols);

// Radial-angular factors of the modal series for every node of a grid;
// entries are reassembled on demand. Pairs on equal radii use the closed form.
struct ModalFactors {
  int dim = 2;
  int n_max = 0;
  cplx k = 0.0;
  std::vector<double> radius, theta, phi;
  CMatrix j, h;  // node x order
};
ModalFactors modal_factors(const Grid& g, cplx k, int n_max);
cplx modal_entry(const ModalFactors& f, const Grid& g, int a, int b);
GreensOperator assemble_green_modal(std::shared_ptr<const Grid> grid, cplx k, int n_max, double omega = 0.0);

// (L_q - L_0) psi = dv psi - 2i dA . grad psi on the interior lattice.
struct DeltaOperator {
  CVector dv;
  std::array<RVector, 2> dA;
  std::shared_ptr<const Stencil> stencil;

  bool has_flow() const;
  bool is_zero() const;
  std::vector<int> row_support() const;
  Eigen::SparseMatrix<cplx> matrix() const;
};

DeltaOperator make_delta(std::shared_ptr<const Stencil> stencil, CVector dv);
DeltaOperator make_delta(std::shared_ptr<const Stencil> stencil, CVector dv, RVector ax, RVector ay);

// Factorised resolvent (I + G0 W dL)^{-1} restricted to the column support T
// of dL. Everything downstream (receiver rows, applications to right-hand
// sides, the full kernel) reuses one LU of size |T|.
class PerturbedGreens {
 public:
  PerturbedGreens(std::shared_ptr<const GreensOperator> g0, const DeltaOperator& delta);

  bool trivial() const { return t_nodes_.empty(); }
  double rcond() const { return rcond_; }
  const GreensOperator& reference() const { return *g0_; }
  const Grid& grid() const { return *g0_->grid; }

  // (I + M)^{-1} Z for a node-indexed right-hand side block.
  CMatrix resolve(const CMatrix& z) const;
  // Kernel rows of G_q at the receivers.
  CMatrix receiver_rows() const;
  // G_q Y, Y given as kernel-weighted right-hand sides (already multiplied
  // by quadrature weights where the caller wants an operator action).
  CMatrix apply(const CMatrix& y) const;
  CMatrix kernel() const;

 private:
  std::shared_ptr<const GreensOperator> g0_;
  std::vector<int> t_nodes_;
  CMatrix m_t_;  // columns of M = G0 W dL on T, all node rows
  Eigen::PartialPivLU<CMatrix> lu_;
  double rcond_ = 1.0;
};

GreensOperator update_green(const GreensOperator& g0, const DeltaOperator& delta);

}  // namespace holoseis
