#include "tacsim/fem.hpp"

#include <cmath>
#include <unordered_set>

#include "tacsim/errors.hpp"

namespace tacsim {

namespace {

constexpr double kDegenerateVolume = 1e-18;

// Shape-function gradients of the four linear basis functions; also returns
// the signed volume.
double shape_gradients(const std::array<Vec3, 4>& v,
                       std::array<Vec3, 4>& grads) {
  Eigen::Matrix3d jac;
  for (int c = 0; c < 3; ++c) {
    const Vec3 e = v[c + 1] - v[0];
    jac(0, c) = e.x;
    jac(1, c) = e.y;
    jac(2, c) = e.z;
  }
  const double det = jac.determinant();
  if (std::abs(det) <= 6.0 * kDegenerateVolume) return det / 6.0;
  const Eigen::Matrix3d inv = jac.inverse();
  for (int m = 1; m < 4; ++m)
    grads[m] = {inv(m - 1, 0), inv(m - 1, 1), inv(m - 1, 2)};
  grads[0] = {-(grads[1].x + grads[2].x + grads[3].x),
              -(grads[1].y + grads[2].y + grads[3].y),
              -(grads[1].z + grads[2].z + grads[3].z)};
  return det / 6.0;
}

Eigen::Matrix<double, 6, 12> strain_matrix(const std::array<Vec3, 4>& grads) {
  Eigen::Matrix<double, 6, 12> b = Eigen::Matrix<double, 6, 12>::Zero();
  for (int m = 0; m < 4; ++m) {
    const double gx = grads[m].x, gy = grads[m].y, gz = grads[m].z;
    const int c = 3 * m;
    b(0, c) = gx;
    b(1, c + 1) = gy;
    b(2, c + 2) = gz;
    b(3, c) = gy;
    b(3, c + 1) = gx;
    b(4, c + 1) = gz;
    b(4, c + 2) = gy;
    b(5, c) = gz;
    b(5, c + 2) = gx;
  }
  return b;
}

Eigen::Matrix<double, 6, 6> elasticity_matrix(const MaterialParams& mat) {
  const double lambda = mat.lame_lambda();
  const double mu = mat.lame_mu();
  Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d(i, j) = lambda;
    d(i, i) = lambda + 2.0 * mu;
    d(i + 3, i + 3) = mu;
  }
  return d;
}

}  // namespace

void MaterialParams::validate() const {
  if (!(young_modulus > 0.0))
    throw InvalidArgument("young_modulus must be positive");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5))
    throw InvalidArgument("poisson_ratio must lie in (-1, 0.5)");
}

double MaterialParams::lame_lambda() const {
  return young_modulus * poisson_ratio /
         ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
}

double MaterialParams::lame_mu() const {
  return young_modulus / (2.0 * (1.0 + poisson_ratio));
}

Eigen::Matrix<double, 12, 12> element_stiffness(
    const std::array<Vec3, 4>& verts, const MaterialParams& material,
    std::size_t tet_index) {
  material.validate();
  std::array<Vec3, 4> grads;
  const double vol = shape_gradients(verts, grads);
  if (std::abs(vol) <= kDegenerateVolume)
    throw DegenerateElement(tet_index, "volume below 1e-18 m^3");
  const auto b = strain_matrix(grads);
  const auto d = elasticity_matrix(material);
  return std::abs(vol) * (b.transpose() * d * b);
}

Eigen::SparseMatrix<double> assemble(const TetMesh& mesh,
                                     const MaterialParams& material) {
  material.validate();
  const std::size_t ndof = 3 * mesh.vertex_count();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.tet_count() * 144);
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const auto& tet = mesh.tets[t];
    const std::array<Vec3, 4> verts = {
        mesh.vertices[tet[0]], mesh.vertices[tet[1]], mesh.vertices[tet[2]],
        mesh.vertices[tet[3]]};
    const auto ke = element_stiffness(verts, material, t);
    for (int a = 0; a < 4; ++a) {
      for (int i = 0; i < 3; ++i) {
        const auto row = static_cast<int>(3 * tet[a]) + i;
        for (int b = 0; b < 4; ++b)
          for (int j = 0; j < 3; ++j)
            triplets.emplace_back(row, static_cast<int>(3 * tet[b]) + j,
                                  ke(3 * a + i, 3 * b + j));
      }
    }
  }
  Eigen::SparseMatrix<double> k(static_cast<Eigen::Index>(ndof),
                                static_cast<Eigen::Index>(ndof));
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

FemSolution solve(const Eigen::SparseMatrix<double>& stiffness,
                  const ConstraintSet& constraints,
                  const SolverConfig& config) {
  const std::size_t ndof = static_cast<std::size_t>(stiffness.rows());
  const std::size_t nnode = ndof / 3;

  std::vector<char> is_constrained(ndof, 0);
  std::vector<std::array<char, 3>> axes_fixed(nnode, {0, 0, 0});
  for (const Constraint& c : constraints.entries) {
    if (c.node >= nnode || c.axis < 0 || c.axis > 2)
      throw InvalidArgument("constraint addresses node " +
                            std::to_string(c.node) + " axis " +
                            std::to_string(c.axis));
    const std::size_t dof = 3 * c.node + static_cast<std::size_t>(c.axis);
    if (is_constrained[dof])
      throw InvalidArgument("duplicate constraint on node " +
                            std::to_string(c.node) + " axis " +
                            std::to_string(c.axis));
    is_constrained[dof] = 1;
    axes_fixed[c.node][c.axis] = 1;
  }

  std::size_t fully_fixed = 0;
  for (const auto& a : axes_fixed)
    if (a[0] && a[1] && a[2]) ++fully_fixed;
  if (fully_fixed < 3)
    throw SingularSystem(
        "constraints leave rigid-body modes: fewer than 3 fully fixed nodes");

  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ndof));
  for (const Constraint& c : constraints.entries)
    u[static_cast<Eigen::Index>(3 * c.node + c.axis)] = c.value;

  // Right-hand side on the free DOFs: b = -K_fc u_c.
  Eigen::VectorXd b_full = -(stiffness * u);
  std::vector<std::size_t> free_dofs;
  free_dofs.reserve(ndof);
  for (std::size_t d = 0; d < ndof; ++d)
    if (!is_constrained[d]) free_dofs.push_back(d);

  const std::size_t nfree = free_dofs.size();
  Eigen::VectorXd b(static_cast<Eigen::Index>(nfree));
  Eigen::VectorXd inv_diag(static_cast<Eigen::Index>(nfree));
  const Eigen::VectorXd diag = stiffness.diagonal();
  for (std::size_t i = 0; i < nfree; ++i) {
    b[static_cast<Eigen::Index>(i)] =
        b_full[static_cast<Eigen::Index>(free_dofs[i])];
    const double d = diag[static_cast<Eigen::Index>(free_dofs[i])];
    if (!(d > 0.0))
      throw SingularSystem("non-positive stiffness diagonal at free DOF " +
                           std::to_string(free_dofs[i]));
    inv_diag[static_cast<Eigen::Index>(i)] = 1.0 / d;
  }

  FemSolution sol;
  sol.constraints = constraints;

  const double b_norm = b.norm();
  std::size_t iterations = 0;
  double rel_residual = 0.0;

  if (nfree > 0 && b_norm > 0.0) {
    const std::size_t max_iter = config.max_iterations > 0
                                     ? config.max_iterations
                                     : 20 * std::max<std::size_t>(nfree, 1);
    // K_ff * p via scatter to the full space; constrained slots stay zero.
    Eigen::VectorXd p_full =
        Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ndof));
    auto apply_kff = [&](const Eigen::VectorXd& p, Eigen::VectorXd& out) {
      for (std::size_t i = 0; i < nfree; ++i)
        p_full[static_cast<Eigen::Index>(free_dofs[i])] =
            p[static_cast<Eigen::Index>(i)];
      Eigen::VectorXd y_full = stiffness * p_full;
      for (std::size_t i = 0; i < nfree; ++i)
        out[static_cast<Eigen::Index>(i)] =
            y_full[static_cast<Eigen::Index>(free_dofs[i])];
    };

    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nfree));
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    Eigen::VectorXd ap(static_cast<Eigen::Index>(nfree));
    double rz = r.dot(z);
    rel_residual = r.norm() / b_norm;
    while (rel_residual > config.tolerance) {
      if (iterations >= max_iter)
        throw SolverFailure(rel_residual,
                            "conjugate gradients did not converge after " +
                                std::to_string(max_iter) + " iterations");
      apply_kff(p, ap);
      const double p_ap = p.dot(ap);
      if (!(p_ap > 0.0))
        throw SolverFailure(rel_residual,
                            "stiffness not positive definite on free DOFs");
      const double alpha = rz / p_ap;
      x += alpha * p;
      r -= alpha * ap;
      ++iterations;
      rel_residual = r.norm() / b_norm;
      if (rel_residual <= config.tolerance) break;
      z = inv_diag.cwiseProduct(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    for (std::size_t i = 0; i < nfree; ++i)
      u[static_cast<Eigen::Index>(free_dofs[i])] =
          x[static_cast<Eigen::Index>(i)];
  }

  sol.solver_iterations = iterations;
  sol.residual = rel_residual;

  sol.displacements.resize(nnode);
  for (std::size_t n = 0; n < nnode; ++n)
    sol.displacements[n] = {u[static_cast<Eigen::Index>(3 * n)],
                            u[static_cast<Eigen::Index>(3 * n + 1)],
                            u[static_cast<Eigen::Index>(3 * n + 2)]};

  const Eigen::VectorXd f = stiffness * u;
  sol.reactions.reserve(constraints.size());
  for (const Constraint& c : constraints.entries)
    sol.reactions.push_back(f[static_cast<Eigen::Index>(3 * c.node + c.axis)]);
  return sol;
}

double von_mises(const std::array<double, 6>& s) {
  const double d1 = s[0] - s[1];
  const double d2 = s[1] - s[2];
  const double d3 = s[2] - s[0];
  return std::sqrt(0.5 * (d1 * d1 + d2 * d2 + d3 * d3) +
                   3.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]));
}

StressField compute_stress(const TetMesh& mesh, const MaterialParams& material,
                           const std::vector<Vec3>& displacements) {
  material.validate();
  if (displacements.size() != mesh.vertex_count())
    throw InvalidArgument("displacement vector length != vertex count");

  StressField field;
  field.stress.resize(mesh.tet_count());
  field.von_mises.resize(mesh.tet_count());
  field.centroids.resize(mesh.tet_count());

  const auto d = elasticity_matrix(material);
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const auto& tet = mesh.tets[t];
    const std::array<Vec3, 4> verts = {
        mesh.vertices[tet[0]], mesh.vertices[tet[1]], mesh.vertices[tet[2]],
        mesh.vertices[tet[3]]};
    std::array<Vec3, 4> grads;
    const double vol = shape_gradients(verts, grads);
    if (std::abs(vol) <= kDegenerateVolume)
      throw DegenerateElement(t, "volume below 1e-18 m^3");

    Eigen::Matrix<double, 6, 1> strain = Eigen::Matrix<double, 6, 1>::Zero();
    Vec3 mean_disp{0, 0, 0};
    for (int m = 0; m < 4; ++m) {
      const Vec3& du = displacements[tet[m]];
      const Vec3& g = grads[m];
      strain[0] += g.x * du.x;
      strain[1] += g.y * du.y;
      strain[2] += g.z * du.z;
      strain[3] += g.y * du.x + g.x * du.y;
      strain[4] += g.z * du.y + g.y * du.z;
      strain[5] += g.z * du.x + g.x * du.z;
      mean_disp += du * 0.25;
    }
    const Eigen::Matrix<double, 6, 1> sigma = d * strain;
    for (int i = 0; i < 6; ++i) field.stress[t][i] = sigma[i];
    field.von_mises[t] = von_mises(field.stress[t]);
    field.centroids[t] = mesh.tet_centroid(t) + mean_disp;
  }
  return field;
}

double axial_contact_force(const FemSolution& solution,
                           const ConstraintSet& contact_constraints) {
  std::unordered_set<std::size_t> solved;
  std::vector<double> reaction_by_dof(3 * solution.displacements.size(), 0.0);
  for (std::size_t i = 0; i < solution.constraints.size(); ++i) {
    const Constraint& c = solution.constraints.entries[i];
    const std::size_t dof = 3 * c.node + static_cast<std::size_t>(c.axis);
    solved.insert(dof);
    reaction_by_dof[dof] = solution.reactions[i];
  }
  double force = 0.0;
  for (const Constraint& c : contact_constraints.entries) {
    const std::size_t dof = 3 * c.node + static_cast<std::size_t>(c.axis);
    if (!solved.count(dof))
      throw InvalidArgument("contact constraint on node " +
                            std::to_string(c.node) +
                            " is not part of the solution");
    if (c.axis == 2) force -= reaction_by_dof[dof];
  }
  return force;
}

}  // namespace tacsim
