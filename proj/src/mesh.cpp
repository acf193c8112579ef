#include "tacsim/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "tacsim/errors.hpp"

namespace tacsim {

namespace {

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c,
                     const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double TetMesh::tet_volume(std::size_t t) const {
  const auto& e = tets[t];
  return signed_volume(vertices[e[0]], vertices[e[1]], vertices[e[2]],
                       vertices[e[3]]);
}

double TetMesh::total_volume() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < tets.size(); ++t) sum += tet_volume(t);
  return sum;
}

Vec3 TetMesh::tet_centroid(std::size_t t) const {
  const auto& e = tets[t];
  Vec3 c = vertices[e[0]] + vertices[e[1]] + vertices[e[2]] + vertices[e[3]];
  return c * 0.25;
}

TetMesh generate_box_mesh(double lx, double ly, double lz, int nx, int ny,
                          int nz) {
  if (!(lx > 0.0) || !(ly > 0.0) || !(lz > 0.0))
    throw InvalidArgument("box dimensions must be positive");
  if (nx < 1 || ny < 1 || nz < 1)
    throw InvalidArgument("mesh resolution must be >= 1 in every direction");

  TetMesh mesh;
  mesh.lx = lx;
  mesh.ly = ly;
  mesh.lz = lz;

  const std::size_t vx = static_cast<std::size_t>(nx) + 1;
  const std::size_t vy = static_cast<std::size_t>(ny) + 1;
  const std::size_t vz = static_cast<std::size_t>(nz) + 1;
  mesh.vertices.reserve(vx * vy * vz);
  for (std::size_t k = 0; k < vz; ++k)
    for (std::size_t j = 0; j < vy; ++j)
      for (std::size_t i = 0; i < vx; ++i)
        mesh.vertices.push_back({lx * static_cast<double>(i) / nx,
                                 ly * static_cast<double>(j) / ny,
                                 lz * static_cast<double>(k) / nz});

  auto vid = [&](std::size_t i, std::size_t j, std::size_t k) {
    return i + vx * (j + vy * k);
  };

  // Kuhn split: the six tets of a cell share the main diagonal 000-111 and
  // correspond to the six monotone lattice paths between those corners.
  static const int kPaths[6][2][3] = {
      {{1, 0, 0}, {1, 1, 0}}, {{1, 0, 0}, {1, 0, 1}}, {{0, 1, 0}, {1, 1, 0}},
      {{0, 1, 0}, {0, 1, 1}}, {{0, 0, 1}, {1, 0, 1}}, {{0, 0, 1}, {0, 1, 1}}};

  mesh.tets.reserve(6u * nx * ny * nz);
  for (std::size_t k = 0; k + 1 < vz; ++k) {
    for (std::size_t j = 0; j + 1 < vy; ++j) {
      for (std::size_t i = 0; i + 1 < vx; ++i) {
        const std::size_t c000 = vid(i, j, k);
        const std::size_t c111 = vid(i + 1, j + 1, k + 1);
        for (const auto& path : kPaths) {
          std::array<std::size_t, 4> tet = {
              c000, vid(i + path[0][0], j + path[0][1], k + path[0][2]),
              vid(i + path[1][0], j + path[1][1], k + path[1][2]), c111};
          if (signed_volume(mesh.vertices[tet[0]], mesh.vertices[tet[1]],
                            mesh.vertices[tet[2]],
                            mesh.vertices[tet[3]]) < 0.0)
            std::swap(tet[1], tet[2]);
          mesh.tets.push_back(tet);
        }
      }
    }
  }

  // Boundary faces: each interior face is shared by exactly two tets. The
  // orientation of the owning tet is kept, so boundary normals point out.
  std::map<std::array<std::size_t, 3>, std::pair<std::array<std::size_t, 3>, int>>
      face_count;
  static const int kFace[4][3] = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
  for (const auto& tet : mesh.tets) {
    for (const auto& f : kFace) {
      std::array<std::size_t, 3> face = {tet[f[0]], tet[f[1]], tet[f[2]]};
      std::array<std::size_t, 3> key = face;
      std::sort(key.begin(), key.end());
      auto it = face_count.find(key);
      if (it == face_count.end())
        face_count.emplace(key, std::make_pair(face, 1));
      else
        it->second.second++;
    }
  }
  for (const auto& [key, entry] : face_count)
    if (entry.second == 1) mesh.surface_faces.push_back(entry.first);

  return mesh;
}

NodeSets classify_nodes(const TetMesh& mesh,
                        const std::vector<Vec3>& taxel_positions,
                        double cluster_radius) {
  constexpr double kPlaneTol = 1e-9;
  if (!(cluster_radius > 0.0))
    throw InvalidArgument("cluster_radius must be positive");
  if (taxel_positions.size() != 8)
    throw InvalidArgument("expected 8 taxel positions, got " +
                          std::to_string(taxel_positions.size()));
  for (std::size_t i = 0; i < taxel_positions.size(); ++i) {
    const Vec3& p = taxel_positions[i];
    if (p.x < -kPlaneTol || p.x > mesh.lx + kPlaneTol || p.y < -kPlaneTol ||
        p.y > mesh.ly + kPlaneTol)
      throw InvalidArgument("taxel " + std::to_string(i) +
                            " lies outside the block footprint");
  }

  NodeSets sets;
  sets.taxel_positions = taxel_positions;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const double z = mesh.vertices[v].z;
    if (std::abs(z) <= kPlaneTol) sets.fixed.push_back(v);
    if (std::abs(z - mesh.lz) <= kPlaneTol) sets.top_surface.push_back(v);
  }

  sets.taxel_clusters.resize(taxel_positions.size());
  for (std::size_t i = 0; i < taxel_positions.size(); ++i) {
    const Vec3& t = taxel_positions[i];
    for (std::size_t v : sets.top_surface) {
      const double dx = mesh.vertices[v].x - t.x;
      const double dy = mesh.vertices[v].y - t.y;
      if (std::sqrt(dx * dx + dy * dy) <= cluster_radius)
        sets.taxel_clusters[i].push_back(v);
    }
    if (sets.taxel_clusters[i].empty())
      throw ConfigError("taxel " + std::to_string(i) +
                        ": no top-surface node within cluster_radius " +
                        std::to_string(cluster_radius) +
                        " m; increase the radius or the mesh resolution");
  }
  return sets;
}

void write_tetmesh(const TetMesh& mesh, std::ostream& out) {
  out << "TETMESH v1 " << mesh.vertex_count() << ' ' << mesh.tet_count()
      << '\n';
  for (const Vec3& v : mesh.vertices)
    out << fmt_double(v.x) << ' ' << fmt_double(v.y) << ' ' << fmt_double(v.z)
        << '\n';
  for (const auto& t : mesh.tets)
    out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
}

TetMesh read_tetmesh(std::istream& in) {
  std::string magic, version;
  std::size_t nv = 0, nt = 0;
  if (!(in >> magic >> version >> nv >> nt) || magic != "TETMESH")
    throw CorruptionError("not a TETMESH file");
  if (version != "v1")
    throw UnsupportedVersion("unsupported TETMESH version " + version);

  TetMesh mesh;
  mesh.vertices.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!(in >> mesh.vertices[i].x >> mesh.vertices[i].y >> mesh.vertices[i].z))
      throw CorruptionError("truncated vertex list");
  }
  mesh.tets.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t k = 0; k < 4; ++k) {
      long long idx = -1;
      if (!(in >> idx)) throw CorruptionError("truncated tet list");
      if (idx < 0 || static_cast<std::size_t>(idx) >= nv)
        throw CorruptionError("tet " + std::to_string(t) +
                              " references vertex " + std::to_string(idx));
      mesh.tets[t][k] = static_cast<std::size_t>(idx);
    }
  }
  for (const Vec3& v : mesh.vertices) {
    mesh.lx = std::max(mesh.lx, v.x);
    mesh.ly = std::max(mesh.ly, v.y);
    mesh.lz = std::max(mesh.lz, v.z);
  }
  return mesh;
}

void save_tetmesh(const TetMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_tetmesh(mesh, out);
  if (!out) throw IoError("write failed: " + path);
}

TetMesh load_tetmesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_tetmesh(in);
}

}  // namespace tacsim
