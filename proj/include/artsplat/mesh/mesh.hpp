#pragma once

#include <artsplat/core/common.hpp>

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace artsplat {

struct TriangleMesh {
  std::vector<Vec3d> vertices;                 // part-local frame, meters
  std::vector<std::array<int, 3>> triangles;   // zero-based

  void validate() const {
    const int n = int(vertices.size());
    for (const auto& t : triangles)
      for (int k = 0; k < 3; ++k)
        if (t[k] < 0 || t[k] >= n) throw ValidationError("mesh: triangle index out of range");
  }

  Vec3d triangle_normal(int i) const {
    const auto& t = triangles[i];
    const Vec3d e1 = vertices[t[1]] - vertices[t[0]];
    const Vec3d e2 = vertices[t[2]] - vertices[t[0]];
    Vec3d n = e1.cross(e2);
    const double len = n.norm();
    return len > 0 ? Vec3d(n / len) : Vec3d::Zero();
  }

  double triangle_area(int i) const {
    const auto& t = triangles[i];
    return 0.5 *
           (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }

  double surface_area() const {
    double a = 0;
    for (int i = 0; i < int(triangles.size()); ++i) a += triangle_area(i);
    return a;
  }

  void bounding_box(Vec3d& lo, Vec3d& hi) const {
    if (vertices.empty()) throw ValidationError("mesh: empty");
    lo = hi = vertices[0];
    for (const Vec3d& v : vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
  }

  Vec3d centroid() const {
    Vec3d c = Vec3d::Zero();
    for (const Vec3d& v : vertices) c += v;
    return vertices.empty() ? c : Vec3d(c / double(vertices.size()));
  }
};

namespace detail {

// "f" entries may be i, i/t, i/t/n or i//n; only the vertex index matters
// here. OBJ counts from 1; negative values count back from the end.
inline int obj_vertex_index(const std::string& token, int n_vertices, int lineno) {
  const std::string head = token.substr(0, token.find('/'));
  try {
    size_t used = 0;
    int idx = std::stoi(head, &used);
    if (used != head.size() || idx == 0) throw std::invalid_argument(head);
    idx = idx > 0 ? idx - 1 : n_vertices + idx;
    if (idx < 0 || idx >= n_vertices)
      throw IoError("obj line " + std::to_string(lineno) + ": vertex index out of range");
    return idx;
  } catch (const std::invalid_argument&) {
    throw IoError("obj line " + std::to_string(lineno) + ": bad face token '" + token + "'");
  }
}

}  // namespace detail

// Minimal OBJ subset: v and f (polygons fan-triangulated); other directives
// are ignored.
inline TriangleMesh parse_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    std::string tag;
    if (!(is >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3d v;
      if (!(is >> v.x() >> v.y() >> v.z()))
        throw IoError("obj line " + std::to_string(lineno) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (is >> tok)
        idx.push_back(detail::obj_vertex_index(tok, int(mesh.vertices.size()), lineno));
      if (idx.size() < 3) throw IoError("obj line " + std::to_string(lineno) + ": face needs >= 3 vertices");
      for (size_t k = 2; k < idx.size(); ++k)
        mesh.triangles.push_back({idx[0], idx[k - 1], idx[k]});
    }
    // vn/vt/o/g/s/usemtl/mtllib carry no geometry we use
  }
  mesh.validate();
  return mesh;
}

inline TriangleMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path);
  return parse_obj(in);
}

inline void save_mesh(const std::string& path, const TriangleMesh& mesh) {
  mesh.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write mesh file: " + path);
  for (const Vec3d& v : mesh.vertices)
    out << "v " << g17(v.x()) << ' ' << g17(v.y()) << ' ' << g17(v.z()) << "\n";
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace artsplat
