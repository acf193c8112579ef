#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "tacsim/vec3.hpp"

namespace tacsim {

/// Tetrahedral mesh of the elastomer block. All tets carry positive signed
/// volume; surface faces are outward-oriented boundary triangles.
struct TetMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::size_t, 4>> tets;
  std::vector<std::array<std::size_t, 3>> surface_faces;

  // Block extents recorded at generation time (structured meshes only).
  double lx = 0.0, ly = 0.0, lz = 0.0;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t tet_count() const { return tets.size(); }

  double tet_volume(std::size_t t) const;
  double total_volume() const;
  Vec3 tet_centroid(std::size_t t) const;
};

/// Node index sets classified from a box mesh: Dirichlet-fixed bottom,
/// exposed top surface, and one vertex cluster above each taxel.
struct NodeSets {
  std::vector<std::size_t> fixed;
  std::vector<std::size_t> top_surface;
  std::vector<std::vector<std::size_t>> taxel_clusters;  // size 8
  std::vector<Vec3> taxel_positions;                     // size 8
};

/// Structured box mesh: (nx,ny,nz) hex cells, each split into 6 tets along
/// the main diagonal (Kuhn split). Vertices are laid out in lattice order,
/// x fastest, so the mesh is a pure function of its arguments.
TetMesh generate_box_mesh(double lx, double ly, double lz, int nx, int ny,
                          int nz);

/// Classifies bottom-plane nodes as fixed, top-plane nodes as the exposed
/// surface, and assigns each taxel the top-surface nodes within
/// cluster_radius of its xy position. Throws ConfigError naming the taxel
/// index when a cluster comes up empty.
NodeSets classify_nodes(const TetMesh& mesh,
                        const std::vector<Vec3>& taxel_positions,
                        double cluster_radius);

// Text serialization: "TETMESH v1 <nv> <nt>" header, vertex lines, tet lines.
void write_tetmesh(const TetMesh& mesh, std::ostream& out);
TetMesh read_tetmesh(std::istream& in);
void save_tetmesh(const TetMesh& mesh, const std::string& path);
TetMesh load_tetmesh(const std::string& path);

}  // namespace tacsim
