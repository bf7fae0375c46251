#include "holoseis/stencil.hpp"

#include <vector>

#include "holoseis/errors.hpp"

namespace holoseis {
namespace {

using Triplet = Eigen::Triplet<double>;

RSparse first_derivative(int n, double h) {
  std::vector<Triplet> t;
  const double c = 1.0 / (2.0 * h);
  t.emplace_back(0, 0, -3.0 * c);
  t.emplace_back(0, 1, 4.0 * c);
  t.emplace_back(0, 2, -1.0 * c);
  for (int i = 1; i + 1 < n; ++i) {
    t.emplace_back(i, i - 1, -c);
    t.emplace_back(i, i + 1, c);
  }
  t.emplace_back(n - 1, n - 1, 3.0 * c);
  t.emplace_back(n - 1, n - 2, -4.0 * c);
  t.emplace_back(n - 1, n - 3, 1.0 * c);
  RSparse m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

RSparse second_derivative(int n, double h) {
  std::vector<Triplet> t;
  const double c = 1.0 / (h * h);
  const double edge[4] = {2.0, -5.0, 4.0, -1.0};
  for (int k = 0; k < 4; ++k) {
    t.emplace_back(0, k, edge[k] * c);
    t.emplace_back(n - 1, n - 1 - k, edge[k] * c);
  }
  for (int i = 1; i + 1 < n; ++i) {
    t.emplace_back(i, i - 1, c);
    t.emplace_back(i, i, -2.0 * c);
    t.emplace_back(i, i + 1, c);
  }
  RSparse m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

RSparse identity(int n) {
  RSparse m(n, n);
  m.setIdentity();
  return m;
}

// kron(A, B) for sparse matrices; index = row_of_A * rows(B) + row_of_B.
RSparse kron(const RSparse& a, const RSparse& b) {
  std::vector<Triplet> t;
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (RSparse::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (RSparse::InnerIterator ib(b, kb); ib; ++ib)
          t.emplace_back(int(ia.row() * b.rows() + ib.row()), int(ia.col() * b.cols() + ib.col()),
                         ia.value() * ib.value());
  RSparse m(a.rows() * b.rows(), a.cols() * b.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

std::shared_ptr<const Stencil> make_stencil(const Lattice& lat) {
  if (lat.nx < 4 || lat.ny < 4) throw UsageError("stencil needs at least 4 nodes per axis");
  auto s = std::make_shared<Stencil>();
  s->lattice = lat;
  // index = iy * nx + ix, so x acts on the fast (right) factor.
  s->dx = kron(identity(lat.ny), first_derivative(lat.nx, lat.h));
  s->dy = kron(first_derivative(lat.ny, lat.h), identity(lat.nx));
  s->lap = kron(identity(lat.ny), second_derivative(lat.nx, lat.h)) +
           kron(second_derivative(lat.ny, lat.h), identity(lat.nx));
  return s;
}

std::vector<int> inner_nodes(const Lattice& lat, int margin) {
  std::vector<int> out;
  for (int iy = margin; iy < lat.ny - margin; ++iy)
    for (int ix = margin; ix < lat.nx - margin; ++ix) out.push_back(lat.index(ix, iy));
  return out;
}

}  // namespace holoseis
