#include "holoseis/grid.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>

#include "holoseis/errors.hpp"

namespace holoseis {
namespace {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void Grid::validate() const {
  if (dim != 2 && dim != 3) throw UsageError("grid dimension must be 2 or 3");
  if (weights.size() != nodes.size() || volume_cell.size() != nodes.size())
    throw UsageError("grid arrays have inconsistent lengths");
  for (double w : weights)
    if (!(w > 0.0)) throw UsageError("grid weights must be positive");
  std::set<int> interior(interior_idx.begin(), interior_idx.end());
  if (interior.size() != interior_idx.size()) throw UsageError("duplicate interior index");
  for (int r : receiver_idx) {
    if (r < 0 || r >= size()) throw UsageError("receiver index out of range");
    if (interior.count(r)) throw UsageError("receiver and interior index sets overlap");
  }
  for (int i : interior_idx)
    if (i < 0 || i >= size()) throw UsageError("interior index out of range");
  if (wavelength_resolution < 7.0) {
    std::ostringstream os;
    os << "grid resolution " << wavelength_resolution << " points per wavelength is below 7";
    throw UsageError(os.str());
  }
  if (lattice && lattice->size() != n_interior()) throw UsageError("lattice size does not match interior");
}

std::uint64_t Grid::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv1a(&dim, sizeof dim, h);
  h = fnv1a(nodes.data(), nodes.size() * sizeof(Vec3), h);
  h = fnv1a(weights.data(), weights.size() * sizeof(double), h);
  h = fnv1a(receiver_idx.data(), receiver_idx.size() * sizeof(int), h);
  h = fnv1a(interior_idx.data(), interior_idx.size() * sizeof(int), h);
  return h;
}

std::vector<Vec3> ring_positions(int n, double radius, double phase) {
  std::vector<Vec3> out(n);
  for (int i = 0; i < n; ++i) {
    const double t = phase + 2.0 * kPi * i / n;
    out[i] = {radius * std::cos(t), radius * std::sin(t), 0.0};
  }
  return out;
}

Grid make_lattice_grid(const Lattice& lat, const std::vector<Vec3>& receivers, double receiver_weight,
                       double wavelength) {
  if (lat.nx < 4 || lat.ny < 4) throw UsageError("lattice needs at least 4 nodes per axis");
  Grid g;
  g.dim = 2;
  g.lattice = lat;
  const int ni = lat.size();
  g.nodes.reserve(ni + receivers.size());
  for (int iy = 0; iy < lat.ny; ++iy)
    for (int ix = 0; ix < lat.nx; ++ix) g.nodes.push_back({lat.x(ix), lat.y(iy), 0.0});
  g.weights.assign(ni, lat.h * lat.h);
  g.volume_cell.assign(ni, 1);
  g.interior_idx.resize(ni);
  std::iota(g.interior_idx.begin(), g.interior_idx.end(), 0);
  for (std::size_t r = 0; r < receivers.size(); ++r) {
    g.nodes.push_back(receivers[r]);
    g.weights.push_back(receiver_weight);
    g.volume_cell.push_back(0);
    g.receiver_idx.push_back(ni + int(r));
  }
  g.wavelength_resolution = wavelength / lat.h;
  g.validate();
  return g;
}

Grid make_desk_grid(const DeskGridSpec& s) {
  if (s.n_receivers < 2) throw UsageError("need at least two receivers");
  if (s.points_per_wavelength < 7.0) throw UsageError("points per wavelength must be at least 7");
  const double width = 2.0 * s.half_width;
  const int n = int(std::ceil(width * s.points_per_wavelength / s.wavelength - 1e-9));
  Lattice lat;
  lat.nx = lat.ny = n;
  lat.h = width / n;
  lat.x0 = s.center_x - s.half_width;
  lat.y0 = s.center_y - s.half_width;
  const double corner = std::hypot(std::abs(s.center_x) + s.half_width, std::abs(s.center_y) + s.half_width);
  if (corner >= s.receiver_radius) throw UsageError("interior box must lie inside the receiver ring");
  const double arc = 2.0 * kPi * s.receiver_radius / s.n_receivers;
  return make_lattice_grid(lat, ring_positions(s.n_receivers, s.receiver_radius, s.receiver_phase), arc,
                           s.wavelength);
}

RVector interior_coordinate(const Grid& g, int axis) {
  RVector out(g.n_interior());
  for (int i = 0; i < g.n_interior(); ++i) out[i] = g.nodes[g.interior_idx[i]][axis];
  return out;
}

}  // namespace holoseis
