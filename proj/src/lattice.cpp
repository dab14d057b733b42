#include "lgw/lattice.hpp"

#include <sstream>

namespace lgw {

std::vector<int> LatticeGeometry::vertex_coords(int v) const {
  if (spatial_dim == 1) return {v};
  return {v / extents[1], v % extents[1]};
}

int LatticeGeometry::vertex_id(const std::vector<int>& c) const {
  if (spatial_dim == 1) return c[0];
  return c[0] * extents[1] + c[1];
}

int LatticeGeometry::neighbor(int v, int direction) const {
  std::vector<int> c = vertex_coords(v);
  int axis = direction - 1;
  c[axis] += 1;
  if (c[axis] == extents[axis]) {
    if (boundary[axis] == Boundary::open) return -1;
    c[axis] = 0;
  }
  return vertex_id(c);
}

LatticeGeometry build_lattice(int spatial_dim, const std::vector<int>& extents,
                              const std::vector<Boundary>& boundary) {
  if (spatial_dim != 1 && spatial_dim != 2)
    throw std::invalid_argument("build_lattice: spatial_dim must be 1 or 2");
  if (static_cast<int>(extents.size()) != spatial_dim ||
      static_cast<int>(boundary.size()) != spatial_dim)
    throw std::invalid_argument("build_lattice: extents/boundary size mismatch");
  for (int e : extents)
    if (e < 2) throw std::invalid_argument("build_lattice: extents must be >= 2");
  if (spatial_dim == 2) {
    for (int a = 0; a < 2; ++a)
      if (boundary[a] == Boundary::periodic && extents[a] % 2 != 0)
        throw std::invalid_argument(
            "build_lattice: periodic 2d lattices require even extents "
            "(vertex classes inconsistent otherwise)");
  }

  LatticeGeometry g;
  g.spatial_dim = spatial_dim;
  g.extents = extents;
  g.boundary = boundary;
  g.n_vertices = 1;
  for (int e : extents) g.n_vertices *= e;

  // Links: lexicographic by (source vertex, direction).
  std::map<std::pair<int, int>, int> link_index;  // (source, direction) -> id
  for (int v = 0; v < g.n_vertices; ++v) {
    for (int d = 1; d <= spatial_dim; ++d) {
      int t = g.neighbor(v, d);
      if (t < 0) continue;
      link_index[{v, d}] = static_cast<int>(g.links.size());
      g.links.push_back({v, t, d});
    }
  }

  // Plaquettes (2d): base vertex n with links (n,1), (n+1^,2), (n+2^,1), (n,2).
  if (spatial_dim == 2) {
    for (int v = 0; v < g.n_vertices; ++v) {
      int v1 = g.neighbor(v, 1);
      int v2 = g.neighbor(v, 2);
      if (v1 < 0 || v2 < 0) continue;
      auto l1 = link_index.find({v, 1});
      auto l2 = link_index.find({v1, 2});
      auto l3 = link_index.find({v2, 1});
      auto l4 = link_index.find({v, 2});
      if (l1 == link_index.end() || l2 == link_index.end() ||
          l3 == link_index.end() || l4 == link_index.end())
        continue;
      Plaquette p;
      p.links = {l1->second, l2->second, l3->second, l4->second};
      p.reversed = {false, false, true, true};
      p.base_vertex = v;
      g.plaquettes.push_back(p);
    }
  }
  return g;
}

IncidentLinks incident_links(const LatticeGeometry& geom, int vertex) {
  if (vertex < 0 || vertex >= geom.n_vertices)
    throw std::invalid_argument("incident_links: unknown vertex");
  IncidentLinks out;
  for (int l = 0; l < static_cast<int>(geom.links.size()); ++l) {
    if (geom.links[l].source == vertex) out.positive.push_back(l);
    if (geom.links[l].target == vertex) out.negative.push_back(l);
  }
  return out;
}

std::vector<VertexClass> vertex_classes(const LatticeGeometry& geom) {
  std::vector<VertexClass> classes(geom.n_vertices);
  for (int v = 0; v < geom.n_vertices; ++v) {
    std::vector<int> c = geom.vertex_coords(v);
    int s = 0;
    for (int x : c) s += x;
    classes[v].parity_sign = (s % 2 == 0) ? +1 : -1;
    if (geom.spatial_dim == 2) {
      classes[v].psi_special = (c[0] % 2 == 0) && (c[1] % 2 == 0);
      classes[v].chi_special = (c[0] % 2 == 1) && (c[1] % 2 == 1);
    }
  }
  return classes;
}

std::string geometry_to_json(const LatticeGeometry& geom) {
  std::ostringstream os;
  os << "{\"spatial_dim\":" << geom.spatial_dim << ",\"extents\":[";
  for (size_t i = 0; i < geom.extents.size(); ++i)
    os << (i ? "," : "") << geom.extents[i];
  os << "],\"boundary\":[";
  for (size_t i = 0; i < geom.boundary.size(); ++i)
    os << (i ? "," : "")
       << (geom.boundary[i] == Boundary::open ? "\"open\"" : "\"periodic\"");
  os << "],\"vertices\":" << geom.n_vertices << ",\"links\":[";
  for (size_t i = 0; i < geom.links.size(); ++i) {
    const Link& l = geom.links[i];
    os << (i ? "," : "") << "{\"source\":" << l.source
       << ",\"target\":" << l.target << ",\"direction\":" << l.direction << "}";
  }
  os << "],\"plaquettes\":[";
  for (size_t i = 0; i < geom.plaquettes.size(); ++i) {
    const Plaquette& p = geom.plaquettes[i];
    os << (i ? "," : "") << "{\"base_vertex\":" << p.base_vertex << ",\"links\":[";
    for (int j = 0; j < 4; ++j) os << (j ? "," : "") << p.links[j];
    os << "],\"reversed\":[";
    for (int j = 0; j < 4; ++j)
      os << (j ? "," : "") << (p.reversed[j] ? "true" : "false");
    os << "]}";
  }
  os << "]}";
  return os.str();
}

}  // namespace lgw
