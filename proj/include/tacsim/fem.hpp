#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <cstddef>
#include <vector>

#include "tacsim/mesh.hpp"
#include "tacsim/vec3.hpp"

namespace tacsim {

/// Isotropic linear-elastic material. E in pascals, nu dimensionless and
/// strictly inside (-1, 0.5) so the elasticity tensor stays positive
/// definite.
struct MaterialParams {
  double young_modulus = 1e5;
  double poisson_ratio = 0.45;

  void validate() const;
  double lame_lambda() const;
  double lame_mu() const;
};

struct Constraint {
  std::size_t node = 0;
  int axis = 0;  // 0=x, 1=y, 2=z
  double value = 0.0;
};

/// Prescribed-displacement entries. Duplicate (node, axis) pairs are
/// rejected at solve time.
struct ConstraintSet {
  std::vector<Constraint> entries;

  void add(std::size_t node, int axis, double value) {
    entries.push_back({node, axis, value});
  }
  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

struct FemSolution {
  std::vector<Vec3> displacements;   // per node, meters
  ConstraintSet constraints;         // the set this solution satisfies
  std::vector<double> reactions;     // per constraint entry, newtons
  std::size_t solver_iterations = 0;
  double residual = 0.0;             // relative, ||K_ff u_f - b|| / ||b||
};

/// Per-tet stress state in the displaced configuration. Voigt order is
/// (xx, yy, zz, xy, yz, zx).
struct StressField {
  std::vector<std::array<double, 6>> stress;
  std::vector<double> von_mises;
  std::vector<Vec3> centroids;  // displaced tet centroids

  std::size_t size() const { return von_mises.size(); }
};

struct SolverConfig {
  double tolerance = 1e-8;
  std::size_t max_iterations = 0;  // 0 -> 20 * nDOF
};

/// Constant-strain tetrahedron stiffness, 12x12, symmetric PSD with the six
/// rigid-body modes in its null space. Throws DegenerateElement when the
/// tet volume magnitude is below 1e-18 m^3.
Eigen::Matrix<double, 12, 12> element_stiffness(
    const std::array<Vec3, 4>& verts, const MaterialParams& material,
    std::size_t tet_index = 0);

/// Global stiffness assembly, 3*nv x 3*nv, element contributions summed in
/// element index order.
Eigen::SparseMatrix<double> assemble(const TetMesh& mesh,
                                     const MaterialParams& material);

/// Prescribed-displacement solve with Jacobi-preconditioned conjugate
/// gradients on the free DOFs. Reactions are reported per constraint entry,
/// in entry order.
FemSolution solve(const Eigen::SparseMatrix<double>& stiffness,
                  const ConstraintSet& constraints,
                  const SolverConfig& config = {});

/// Constant-strain stress recovery: per-tet stress tensor, Von Mises scalar
/// and displaced centroid.
StressField compute_stress(const TetMesh& mesh, const MaterialParams& material,
                           const std::vector<Vec3>& displacements);

/// Net axial force transmitted through the given contact constraints,
/// positive when the indenter pushes down on the elastomer.
double axial_contact_force(const FemSolution& solution,
                           const ConstraintSet& contact_constraints);

double von_mises(const std::array<double, 6>& stress_voigt);

}  // namespace tacsim
