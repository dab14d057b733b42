#pragma once
// Rectangular 1d/2d lattice geometry: vertices, oriented links, oriented
// plaquettes, boundary conditions, staggering and the special-vertex classes
// used by constraint Hamiltonians.
//
// Orderings are frozen (and relied upon by every downstream basis):
//   - vertices: lexicographic in coordinates (n1, n2), n2 fastest
//     => id = n1 * extent2 + n2 (1d: id = n1)
//   - links: lexicographic by (source vertex id, direction)
//   - plaquettes: by base (lower-left) vertex id
// A plaquette based at n traverses n -> n+1^ -> n+1^+2^ -> n+2^ -> n using
// links (n,1), (n+1^,2), (n+2^,1), (n,2); the last two are flagged reversed.

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lgw {

enum class Boundary { open, periodic };

struct Link {
  int source = 0;      // vertex id
  int target = 0;      // vertex id (wrapped if periodic)
  int direction = 0;   // 1-based axis index (1 or 2)
};

struct Plaquette {
  std::array<int, 4> links{};      // link ids in traversal order 1,2,3,4
  std::array<bool, 4> reversed{};  // true for links 3,4
  int base_vertex = 0;
};

struct VertexClass {
  int parity_sign = +1;      // (-1)^(n1+n2)  (1d: (-1)^n1)
  bool psi_special = false;  // both coordinates even (2d only)
  bool chi_special = false;  // both coordinates odd  (2d only)
};

struct LatticeGeometry {
  int spatial_dim = 1;
  std::vector<int> extents;        // vertex counts per dimension
  std::vector<Boundary> boundary;  // per dimension
  int n_vertices = 0;
  std::vector<Link> links;
  std::vector<Plaquette> plaquettes;

  std::vector<int> vertex_coords(int v) const;
  int vertex_id(const std::vector<int>& coords) const;
  // Neighbor of v in +direction (1-based axis); -1 if it exits an open boundary.
  int neighbor(int v, int direction) const;
};

LatticeGeometry build_lattice(int spatial_dim, const std::vector<int>& extents,
                              const std::vector<Boundary>& boundary);

// Links starting at the vertex (positive) and ending there (negative).
struct IncidentLinks {
  std::vector<int> positive;
  std::vector<int> negative;
};
IncidentLinks incident_links(const LatticeGeometry& geom, int vertex);

// Per-vertex staggering and special-vertex classification. 1d lattices carry
// only the parity sign; the special flags stay false (loop constraints are a
// 2d construction).
std::vector<VertexClass> vertex_classes(const LatticeGeometry& geom);

// JSON description of the geometry (schema in docs/formats.md).
std::string geometry_to_json(const LatticeGeometry& geom);

}  // namespace lgw
