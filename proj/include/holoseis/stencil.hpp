#pragma once

#include <Eigen/Sparse>
#include <memory>

#include "holoseis/grid.hpp"

namespace holoseis {

using RSparse = Eigen::SparseMatrix<double>;

// Second-order finite differences on the interior lattice: centred in the
// bulk, one-sided (still second order) on the first and last lattice lines.
// Dx and Dy act on different tensor factors, so they commute exactly and
// curl fields built from them are discretely divergence free.
struct Stencil {
  Lattice lattice;
  RSparse dx, dy, lap;

  const RSparse& d(int axis) const { return axis == 0 ? dx : dy; }
  int size() const { return lattice.size(); }
};

std::shared_ptr<const Stencil> make_stencil(const Lattice& lat);

// Nodes at least `margin` lattice lines away from the lattice edge.
std::vector<int> inner_nodes(const Lattice& lat, int margin);

}  // namespace holoseis
