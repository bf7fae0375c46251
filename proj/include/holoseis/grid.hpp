#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "holoseis/types.hpp"

namespace holoseis {

// Cell-centred Cartesian lattice carrying the interior nodes. Node (ix, iy)
// sits at (x0 + (ix + 1/2) h, y0 + (iy + 1/2) h) and has index iy * nx + ix.
struct Lattice {
  int nx = 0, ny = 0;
  double h = 0.0;
  double x0 = 0.0, y0 = 0.0;

  int size() const { return nx * ny; }
  int index(int ix, int iy) const { return iy * nx + ix; }
  double x(int ix) const { return x0 + (ix + 0.5) * h; }
  double y(int iy) const { return y0 + (iy + 0.5) * h; }
};

struct Grid {
  int dim = 2;
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<int> receiver_idx;
  std::vector<int> interior_idx;
  double wavelength_resolution = 0.0;
  std::optional<Lattice> lattice;  // present when the interior is a lattice
  // 1 for area/volume cells, 0 for arc/surface cells (receivers); drives the
  // choice of self-interaction average.
  std::vector<std::uint8_t> volume_cell;

  int size() const { return int(nodes.size()); }
  int n_interior() const { return int(interior_idx.size()); }
  int n_receivers() const { return int(receiver_idx.size()); }

  void validate() const;
  std::uint64_t hash() const;
};

struct DeskGridSpec {
  double half_width = 0.5;        // interior box [-hw, hw]^2 (+ center offset)
  double center_x = 0.0, center_y = 0.0;
  double wavelength = 0.2;
  double points_per_wavelength = 7.0;
  int n_receivers = 100;
  double receiver_radius = 1.0;
  double receiver_phase = 0.0;     // angle of the first receiver
};

// Interior lattice plus a ring of equally spaced receivers. The lattice
// spacing is the largest h <= wavelength / ppw that tiles the box exactly.
Grid make_desk_grid(const DeskGridSpec& spec);

// Interior lattice plus receivers at explicit positions (arc weight given).
Grid make_lattice_grid(const Lattice& lat, const std::vector<Vec3>& receivers, double receiver_weight,
                       double wavelength);

// Receiver ring radius used by make_desk_grid, for reuse by callers.
std::vector<Vec3> ring_positions(int n, double radius, double phase);

// Restriction helpers between full node vectors and interior fields.
RVector interior_coordinate(const Grid& g, int axis);

}  // namespace holoseis
