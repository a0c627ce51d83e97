// SPDX-License-Identifier: Apache-2.0
#pragma once

// ASCII mesh files:
//   dim 2
//   <V>
//   x y            (V lines)
//   <T>
//   v0 v1 v2 r     (T lines; r = local index of the vertex opposite the refinement edge)

#include "hodgefem/mesh.hpp"

#include <istream>
#include <locale>
#include <ostream>
#include <sstream>
#include <string>

namespace hodgefem {

inline void write_mesh(std::ostream &os, const Mesh &mesh) {
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "dim 2\n" << mesh.num_vertices() << '\n';
  for (const auto &v : mesh.vertices()) os << v.x() << ' ' << v.y() << '\n';
  os << mesh.num_triangles() << '\n';
  for (const auto &t : mesh.triangles()) os << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << " 0\n";
}

inline Mesh read_mesh(std::istream &is) {
  is.imbue(std::locale::classic());
  std::string word;
  int dim = 0;
  if (!(is >> word >> dim) || word != "dim") throw InputError("mesh file: expected header 'dim 2'");
  if (dim != 2) throw InputError("mesh file: only dim 2 is supported");
  long nv = -1;
  if (!(is >> nv) || nv < 0) throw InputError("mesh file: bad vertex count");
  std::vector<Vec2> vertices(nv);
  for (long i = 0; i < nv; ++i) {
    double x, y;
    if (!(is >> x >> y)) throw InputError("mesh file: truncated vertex list at " + std::to_string(i));
    vertices[i] = Vec2(x, y);
  }
  long nt = -1;
  if (!(is >> nt) || nt < 0) throw InputError("mesh file: bad triangle count");
  std::vector<std::array<int, 3>> tris(nt);
  for (long t = 0; t < nt; ++t) {
    std::array<int, 3> v;
    int ref;
    if (!(is >> v[0] >> v[1] >> v[2] >> ref)) throw InputError("mesh file: truncated triangle list at " + std::to_string(t));
    if (ref < 0 || ref > 2) throw InputError("mesh file: refinement-edge index must be 0, 1 or 2");
    tris[t] = {v[ref], v[(ref + 1) % 3], v[(ref + 2) % 3]};
  }
  if (is >> word) throw InputError("mesh file: trailing content '" + word + "'");
  return Mesh(std::move(vertices), std::move(tris));
}

inline Mesh read_mesh_string(const std::string &text) {
  std::istringstream is(text);
  return read_mesh(is);
}

}  // namespace hodgefem
