#include "tacsim/fem.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "tacsim/errors.hpp"
#include "tacsim/mesh.hpp"

using namespace tacsim;

namespace {

// Independent dense reference: scatter every element matrix into a dense
// global matrix with plain index arithmetic.
Eigen::MatrixXd dense_assembly(const TetMesh& mesh,
                               const MaterialParams& material) {
  const Eigen::Index n = static_cast<Eigen::Index>(3 * mesh.vertex_count());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    std::array<Vec3, 4> verts;
    for (int v = 0; v < 4; ++v) verts[v] = mesh.vertices[mesh.tets[t][v]];
    const auto ke = element_stiffness(verts, material, t);
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 3; ++i)
        for (int b = 0; b < 4; ++b)
          for (int j = 0; j < 3; ++j)
            K(3 * mesh.tets[t][a] + i, 3 * mesh.tets[t][b] + j) +=
                ke(3 * a + i, 3 * b + j);
  }
  return K;
}

std::array<Vec3, 4> reference_tet() {
  return {Vec3{0.0, 0.0, 0.0}, Vec3{0.011, 0.001, 0.0},
          Vec3{0.002, 0.009, 0.001}, Vec3{0.001, 0.002, 0.012}};
}

// Closed-form stress of a constant strain field under isotropic elasticity.
std::array<double, 6> constant_stress(const MaterialParams& m,
                                      const Eigen::Matrix3d& strain) {
  const double lambda = m.lame_lambda();
  const double mu = m.lame_mu();
  const double tr = strain.trace();
  return {lambda * tr + 2.0 * mu * strain(0, 0),
          lambda * tr + 2.0 * mu * strain(1, 1),
          lambda * tr + 2.0 * mu * strain(2, 2),
          2.0 * mu * strain(0, 1),
          2.0 * mu * strain(1, 2),
          2.0 * mu * strain(2, 0)};
}

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("element stiffness annihilates rigid translations") {
  const MaterialParams material;
  const auto ke = element_stiffness(reference_tet(), material);
  const double scale = ke.cwiseAbs().maxCoeff();
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::Matrix<double, 12, 1> rigid = Eigen::Matrix<double, 12, 1>::Zero();
    for (int v = 0; v < 4; ++v) rigid(3 * v + axis) = 1.0;
    CHECK((ke * rigid).cwiseAbs().maxCoeff() / scale < 1e-9);
  }
}

TEST_CASE("element stiffness is symmetric") {
  const auto ke = element_stiffness(reference_tet(), MaterialParams{});
  CHECK((ke - ke.transpose()).cwiseAbs().maxCoeff() /
            ke.cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("scaling the vertices by 2 scales the stiffness entries by 2") {
  const MaterialParams material;
  auto verts = reference_tet();
  const auto ke = element_stiffness(verts, material);
  for (auto& v : verts) v = {2.0 * v.x, 2.0 * v.y, 2.0 * v.z};
  const auto ke2 = element_stiffness(verts, material);
  CHECK((ke2 - 2.0 * ke).cwiseAbs().maxCoeff() / ke.cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("degenerate tet is rejected with its index") {
  std::array<Vec3, 4> flat = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0},
                              Vec3{0.5, 0.5, 0.0}};
  CHECK_THROWS_AS(element_stiffness(flat, MaterialParams{}, 7),
                  DegenerateElement);
}

TEST_CASE("single-tet assembly equals the element matrix scattered") {
  TetMesh mesh;
  const auto verts = reference_tet();
  mesh.vertices.assign(verts.begin(), verts.end());
  mesh.tets.push_back({0, 1, 2, 3});
  const MaterialParams material;
  const auto K = assemble(mesh, material);
  const auto ke = element_stiffness(verts, material);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(K);
  CHECK((dense - ke).cwiseAbs().maxCoeff() / ke.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("two disjoint tets assemble block-diagonally") {
  TetMesh mesh;
  const auto verts = reference_tet();
  mesh.vertices.assign(verts.begin(), verts.end());
  for (const auto& v : verts)
    mesh.vertices.push_back({v.x + 0.1, v.y, v.z});
  mesh.tets.push_back({0, 1, 2, 3});
  mesh.tets.push_back({4, 5, 6, 7});
  const Eigen::MatrixXd dense = Eigen::MatrixXd(assemble(mesh, MaterialParams{}));
  CHECK(dense.block(0, 12, 12, 12).cwiseAbs().maxCoeff() == 0.0);
  CHECK(dense.block(12, 0, 12, 12).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sparse assembly matches the dense reference on a 384-tet box") {
  const TetMesh mesh = generate_box_mesh(0.04, 0.02, 0.01, 8, 4, 2);
  const MaterialParams material;
  const auto K = assemble(mesh, material);
  const Eigen::MatrixXd dense = dense_assembly(mesh, material);
  Eigen::VectorXd x(dense.rows());
  std::uint64_t s = 1234;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    x(i) = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
  }
  const Eigen::VectorXd sparse_product = K * x;
  const Eigen::VectorXd dense_product = dense * x;
  const double scale = dense_product.cwiseAbs().maxCoeff();
  CHECK((sparse_product - dense_product).cwiseAbs().maxCoeff() / scale < 1e-12);
}

TEST_CASE("all-zero constraints give zero displacements and reactions") {
  const TetMesh mesh = generate_box_mesh(0.01, 0.01, 0.01, 2, 2, 2);
  const auto K = assemble(mesh, MaterialParams{});
  ConstraintSet constraints;
  for (std::size_t n = 0; n < mesh.vertex_count(); n += 3)
    for (int axis = 0; axis < 3; ++axis) constraints.add(n, axis, 0.0);
  const FemSolution sol = solve(K, constraints);
  for (const auto& u : sol.displacements) {
    CHECK(u.x == 0.0);
    CHECK(u.y == 0.0);
    CHECK(u.z == 0.0);
  }
  for (double r : sol.reactions) CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("linear patch test: boundary u = A x reproduces the field inside") {
  const TetMesh mesh = generate_box_mesh(0.04, 0.02, 0.01, 4, 3, 2);
  const MaterialParams material;
  const auto K = assemble(mesh, material);
  Eigen::Matrix3d A;
  A << 1e-3, 2e-4, 1e-4, 2e-4, -5e-4, 3e-4, 1e-4, 3e-4, 4e-4;

  auto on_boundary = [&](const Vec3& p) {
    const double eps = 1e-12;
    return p.x < eps || p.x > mesh.lx - eps || p.y < eps ||
           p.y > mesh.ly - eps || p.z < eps || p.z > mesh.lz - eps;
  };
  ConstraintSet constraints;
  for (std::size_t n = 0; n < mesh.vertex_count(); ++n) {
    const Vec3& p = mesh.vertices[n];
    if (!on_boundary(p)) continue;
    const Eigen::Vector3d u = A * Eigen::Vector3d(p.x, p.y, p.z);
    for (int axis = 0; axis < 3; ++axis) constraints.add(n, axis, u(axis));
  }
  SolverConfig solver;
  solver.tolerance = 1e-12;
  const FemSolution sol = solve(K, constraints, solver);
  for (std::size_t n = 0; n < mesh.vertex_count(); ++n) {
    if (on_boundary(mesh.vertices[n])) continue;
    const Vec3& p = mesh.vertices[n];
    const Eigen::Vector3d expect = A * Eigen::Vector3d(p.x, p.y, p.z);
    CHECK(std::abs(sol.displacements[n].x - expect(0)) < 1e-8);
    CHECK(std::abs(sol.displacements[n].y - expect(1)) < 1e-8);
    CHECK(std::abs(sol.displacements[n].z - expect(2)) < 1e-8);
  }

  SUBCASE("reactions balance globally") {
    double sum = 0.0;
    for (double r : sol.reactions) sum += r;
    CHECK(std::abs(sum) < 1e-8);
  }

  SUBCASE("interior stress matches the constant closed form") {
    std::vector<Vec3> u(mesh.vertex_count());
    for (std::size_t n = 0; n < mesh.vertex_count(); ++n)
      u[n] = sol.displacements[n];
    const StressField field = compute_stress(mesh, material, u);
    const Eigen::Matrix3d strain = 0.5 * (A + A.transpose());
    const double vm_expect = von_mises(constant_stress(material, strain));
    for (std::size_t t = 0; t < field.size(); ++t)
      CHECK(std::abs(field.von_mises[t] - vm_expect) / vm_expect < 1e-6);
  }
}

TEST_CASE("von mises closed forms") {
  CHECK(von_mises({0, 0, 0, 0, 0, 0}) == 0.0);
  CHECK(von_mises({5.0, 5.0, 5.0, 0, 0, 0}) == doctest::Approx(0.0));
  CHECK(von_mises({0, 0, 0, 1.0, 0, 0}) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("zero displacement gives zero stress everywhere") {
  const TetMesh mesh = generate_box_mesh(0.01, 0.01, 0.01, 2, 2, 1);
  const std::vector<Vec3> u(mesh.vertex_count(), Vec3{0, 0, 0});
  const StressField field = compute_stress(mesh, MaterialParams{}, u);
  for (std::size_t t = 0; t < field.size(); ++t) {
    CHECK(field.von_mises[t] == 0.0);
    for (double c : field.stress[t]) CHECK(c == 0.0);
  }
}

TEST_CASE("axial force: zero prescribed displacement transmits zero force") {
  const TetMesh mesh = generate_box_mesh(0.02, 0.02, 0.01, 3, 3, 2);
  const auto K = assemble(mesh, MaterialParams{});
  ConstraintSet constraints;
  ConstraintSet contact;
  for (std::size_t n = 0; n < mesh.vertex_count(); ++n) {
    if (mesh.vertices[n].z == 0.0)
      for (int axis = 0; axis < 3; ++axis) constraints.add(n, axis, 0.0);
  }
  // One top node pressed by nothing: prescribed displacement zero.
  for (std::size_t n = 0; n < mesh.vertex_count(); ++n) {
    if (std::abs(mesh.vertices[n].z - 0.01) < 1e-12 &&
        std::abs(mesh.vertices[n].x - 0.01) < 1e-6 &&
        std::abs(mesh.vertices[n].y - 0.01) < 1e-6) {
      constraints.add(n, 2, 0.0);
      contact.add(n, 2, 0.0);
    }
  }
  const FemSolution sol = solve(K, constraints);
  CHECK(std::abs(axial_contact_force(sol, contact)) < 1e-12);
}

TEST_CASE("doubling the modulus doubles the contact force") {
  const TetMesh mesh = generate_box_mesh(0.02, 0.02, 0.01, 4, 4, 2);
  MaterialParams soft;
  soft.young_modulus = 1e5;
  MaterialParams stiff = soft;
  stiff.young_modulus = 2e5;

  auto press = [&](const MaterialParams& material) {
    const auto K = assemble(mesh, material);
    ConstraintSet constraints;
    ConstraintSet contact;
    for (std::size_t n = 0; n < mesh.vertex_count(); ++n) {
      const Vec3& p = mesh.vertices[n];
      if (p.z == 0.0)
        for (int axis = 0; axis < 3; ++axis) constraints.add(n, axis, 0.0);
      if (std::abs(p.z - 0.01) < 1e-12 &&
          std::hypot(p.x - 0.01, p.y - 0.01) < 0.006) {
        constraints.add(n, 2, -0.001);
        contact.add(n, 2, -0.001);
      }
    }
    SolverConfig solver;
    solver.tolerance = 1e-10;
    return axial_contact_force(solve(K, constraints, solver), contact);
  };
  const double f1 = press(soft);
  const double f2 = press(stiff);
  CHECK(f1 > 0.0);
  CHECK(f2 / f1 == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("uniform top compression is mesh-convergent within 5%") {
  auto press = [&](int nx, int ny, int nz) {
    const TetMesh mesh = generate_box_mesh(0.02, 0.02, 0.01, nx, ny, nz);
    const auto K = assemble(mesh, MaterialParams{});
    ConstraintSet constraints;
    ConstraintSet contact;
    for (std::size_t n = 0; n < mesh.vertex_count(); ++n) {
      const Vec3& p = mesh.vertices[n];
      if (p.z == 0.0)
        for (int axis = 0; axis < 3; ++axis) constraints.add(n, axis, 0.0);
      if (std::abs(p.z - 0.01) < 1e-12) {
        constraints.add(n, 2, -0.001);
        contact.add(n, 2, -0.001);
      }
    }
    SolverConfig solver;
    solver.tolerance = 1e-10;
    return axial_contact_force(solve(K, constraints, solver), contact);
  };
  // The bonded bottom face slows convergence near the edges, so the check
  // needs a reasonably fine base mesh before halving the element size lands
  // within 5% (measured: 2.2% for this pair, vs 16% from a 4x4x2 base).
  const double coarse = press(16, 16, 8);
  const double fine = press(32, 32, 16);
  CHECK(std::abs(fine - coarse) / fine < 0.05);
}

}  // TEST_SUITE
