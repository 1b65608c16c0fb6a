#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "litt/assembly.hpp"
#include "litt/errors.hpp"
#include "litt/mesh.hpp"
#include "test_support.hpp"

using namespace litt;
using doctest::Approx;

namespace {

constexpr double kEps = 1e-12;

double total(const SparseMatrix& m) {
  const Vector ones(m.rows(), 1.0);
  return dot(ones, m.multiply(ones));
}

double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Single rectangle [1e-3, 2e-3] x [0, 1e-3] split into two triangles.
AxiMesh unit_cell() {
  return test::rectangle_mesh(1e-3, 2e-3, 0.0, 1e-3, 1, 1,
                              {BoundaryTag::Cool, BoundaryTag::Amb, BoundaryTag::Amb,
                               BoundaryTag::Amb});
}

}  // namespace

TEST_CASE("geometry validation") {
  GeometryConfig g;
  CHECK_NOTHROW(g.validate());
  g.applicator_radius = 40e-3;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = GeometryConfig{};
  g.cooled_length = 35e-3;
  CHECK_THROWS_AS(build_mesh(g), ConfigError);
  g = GeometryConfig{};
  g.target_edge_size = 0.0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("default mesh carries all tags and the analytic area") {
  const GeometryConfig g;
  const AxiMesh mesh = build_mesh(g);
  for (auto tag : {BoundaryTag::Rad, BoundaryTag::Cool, BoundaryTag::Amb, BoundaryTag::Axis}) {
    CHECK(mesh.has_tag(tag));
  }
  CHECK(mesh.untagged_boundary_edges().empty());
  CHECK(std::abs(mesh.area() - analytic_area(g)) <= kEps * analytic_area(g));
  CHECK(std::abs(mesh.weighted_area() - analytic_weighted_area(g)) <=
        kEps * analytic_weighted_area(g));
  CHECK(mesh.num_nodes() > 2000);
  CHECK(mesh.num_nodes() < 3500);
}

TEST_CASE("tagged edges lie on their geometric boundary") {
  const GeometryConfig g;
  const AxiMesh mesh = build_mesh(g);
  const double a = g.applicator_radius, big_r = g.liver_radius, big_h = g.liver_half_height;
  const double tip = g.tip_z(), rad = g.radiating_half_length;
  auto near = [](double x, double y) { return std::abs(x - y) <= 1e-12; };
  for (const auto& e : mesh.boundary_edges()) {
    for (std::size_t v : e.nodes) {
      const Point& p = mesh.nodes()[v];
      switch (e.tag) {
        case BoundaryTag::Rad:
          CHECK(near(p.r, a));
          CHECK(p.z >= -rad - 1e-12);
          CHECK(p.z <= rad + 1e-12);
          break;
        case BoundaryTag::Cool:
          CHECK(((near(p.r, a) && p.z >= tip - 1e-12) || (near(p.z, tip) && p.r <= a + 1e-12)));
          break;
        case BoundaryTag::Amb:
          CHECK((near(p.r, big_r) || near(std::abs(p.z), big_h)));
          break;
        case BoundaryTag::Axis:
          CHECK(near(p.r, 0.0));
          CHECK(p.z <= tip + 1e-12);
          break;
      }
    }
  }
  // The radiating wall has the analytic r-weighted length a * 2 * rad.
  CHECK(boundary_measure(mesh, {BoundaryTag::Rad}) == Approx(a * 2.0 * rad).epsilon(1e-12));
}

TEST_CASE("halving the edge size roughly quadruples the node count") {
  GeometryConfig g;
  g.target_edge_size = 2e-3;
  const double coarse = static_cast<double>(build_mesh(g).num_nodes());
  g.target_edge_size = 1e-3;
  const double fine = static_cast<double>(build_mesh(g).num_nodes());
  CHECK(fine / coarse >= 3.5);
  CHECK(fine / coarse <= 4.5);
}

TEST_CASE("refinement leaves the mass total unchanged") {
  GeometryConfig g;
  g.target_edge_size = 2e-3;
  const double coarse = total(assemble_mass(build_mesh(g), 1.0));
  g.target_edge_size = 1e-3;
  const double fine = total(assemble_mass(build_mesh(g), 1.0));
  CHECK(std::abs(fine - coarse) <= kEps * coarse);
}

TEST_CASE("mesh constructor rejects invalid input") {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(AxiMesh({{-1, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {}), InvalidArgument);
  CHECK_THROWS_AS(AxiMesh(pts, {{0, 2, 1}}, {}), InvalidArgument);
  CHECK_THROWS_AS(AxiMesh(pts, {{0, 1, 3}}, {}), InvalidArgument);
  CHECK_THROWS_AS(AxiMesh(pts, {{0, 1, 2}}, {{{0, 1}, BoundaryTag::Amb}, {{1, 0}, BoundaryTag::Rad}}),
                  InvalidArgument);
  const AxiMesh two = test::rectangle_mesh(0, 1, 0, 1, 1, 1);
  // The diagonal is interior.
  CHECK_THROWS_AS(AxiMesh(two.nodes(), two.triangles(), {{{0, 3}, BoundaryTag::Amb}}),
                  InvalidArgument);
}

TEST_CASE("nearest node") {
  const AxiMesh mesh = test::rectangle_mesh(0, 1, 0, 1, 2, 2);
  CHECK(mesh.nearest_node({0.49, 0.51}) == 4);
  CHECK(mesh.nearest_node({1.2, -0.3}) == 2);
}

TEST_CASE("mass matrix") {
  const AxiMesh cell = unit_cell();
  SUBCASE("unit coefficient integrates r over the rectangle") {
    CHECK(total(assemble_mass(cell, 1.0)) == Approx(1.5e-9).epsilon(1e-13));
  }
  SUBCASE("zero coefficient gives the zero matrix") {
    const SparseMatrix zero = assemble_mass(cell, 0.0);
    for (double v : zero.values()) CHECK(v == 0.0);
  }
  SUBCASE("linear nodal coefficient is integrated exactly") {
    Vector c(cell.num_nodes());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = cell.nodes()[i].r;
    const double exact = (std::pow(2e-3, 3) - std::pow(1e-3, 3)) / 3.0 * 1e-3;
    CHECK(total(assemble_mass(cell, c)) == Approx(exact).epsilon(1e-13));
  }
  SUBCASE("symmetric with positive row sums on the default mesh") {
    const AxiMesh mesh = build_mesh(GeometryConfig{});
    const SparseMatrix m = assemble_mass(mesh, 2.5);
    CHECK(m.is_symmetric());
    const Vector rows = m.multiply(Vector(m.rows(), 1.0));
    for (double v : rows) CHECK(v > 0.0);
  }
}

TEST_CASE("stiffness matrix") {
  const AxiMesh mesh = test::rectangle_mesh(0.0, 3e-3, -1e-3, 2e-3, 4, 5);
  const SparseMatrix k = assemble_stiffness(mesh, 0.7);
  CHECK(k.is_symmetric());
  CHECK(test::max_abs(k.multiply(Vector(mesh.num_nodes(), 1.0))) <= 1e-12 * test::max_abs(k.values()));

  const SparseMatrix k2 = assemble_stiffness(mesh, 1.4);
  for (std::size_t i = 0; i < k.nnz(); ++i) CHECK(k2.values()[i] == Approx(2.0 * k.values()[i]));

  std::mt19937_64 rng(11);
  const Vector u = test::random_vector(mesh.num_nodes(), rng);
  CHECK(weighted_dot(u, k.multiply(u), SparseMatrix::identity(u.size())) >= 0.0);

  SUBCASE("linear field r reproduces the exact energy") {
    const AxiMesh cell = unit_cell();
    Vector r(cell.num_nodes());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = cell.nodes()[i].r;
    const double c = 3.0;
    const SparseMatrix kc = assemble_stiffness(cell, c);
    CHECK(dot(r, kc.multiply(r)) == Approx(c * 1.5e-9).epsilon(1e-13));
  }
}

TEST_CASE("boundary forms") {
  const double r1 = 2e-3, len = 3e-3;
  const AxiMesh strip = test::rectangle_mesh(1e-3, r1, 0.0, len, 2, 5,
                                             {BoundaryTag::Axis, BoundaryTag::Rad, std::nullopt,
                                              std::nullopt});
  CHECK(total(assemble_boundary_mass(strip, {BoundaryTag::Rad}, 1.0)) ==
        Approx(r1 * len).epsilon(1e-13));
  CHECK(sum(assemble_boundary_load(strip, {BoundaryTag::Rad}, 1.0)) ==
        Approx(r1 * len).epsilon(1e-13));
  for (double v : assemble_boundary_load(strip, {BoundaryTag::Rad}, 0.0)) CHECK(v == 0.0);
  CHECK(boundary_measure(strip, {BoundaryTag::Rad}) == Approx(r1 * len).epsilon(1e-13));
  CHECK_THROWS_AS(assemble_boundary_mass(strip, {BoundaryTag::Cool}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(assemble_boundary_load(strip, {BoundaryTag::Amb}, 1.0), InvalidArgument);

  SUBCASE("axis edges contribute nothing") {
    const AxiMesh axis = test::rectangle_mesh(0.0, 1e-3, 0.0, 1e-3, 2, 2,
                                              {BoundaryTag::Axis, std::nullopt, std::nullopt,
                                               std::nullopt});
    const SparseMatrix b = assemble_boundary_mass(axis, {BoundaryTag::Axis}, 5.0);
    for (double v : b.values()) CHECK(v == 0.0);
    for (double v : assemble_boundary_load(axis, {BoundaryTag::Axis}, 5.0)) CHECK(v == 0.0);
  }
  SUBCASE("default mesh axis contributes nothing either") {
    const AxiMesh mesh = build_mesh(GeometryConfig{});
    CHECK(boundary_measure(mesh, {BoundaryTag::Axis}) == 0.0);
  }
}

TEST_CASE("coefficient sensitivities are the gradients of the bilinear forms") {
  const AxiMesh mesh = test::rectangle_mesh(0.0, 2e-3, 0.0, 3e-3, 3, 4);
  std::mt19937_64 rng(12);
  const std::size_t n = mesh.num_nodes();
  const Vector u = test::random_vector(n, rng), v = test::random_vector(n, rng);
  const Vector c = test::random_vector(n, rng, 0.5, 2.0);
  const Vector h = test::random_vector(n, rng);

  // Both forms are linear in the coefficient, so the directional derivative
  // equals the form evaluated with coefficient h.
  const Vector sm = mass_sensitivity(mesh, u, v);
  CHECK(dot(sm, h) == Approx(dot(u, assemble_mass(mesh, h).multiply(v))).epsilon(1e-12));
  CHECK(dot(sm, c) == Approx(dot(u, assemble_mass(mesh, c).multiply(v))).epsilon(1e-12));
  CHECK(sum(sm) == Approx(dot(u, assemble_mass(mesh, 1.0).multiply(v))).epsilon(1e-12));

  const Vector sk = stiffness_sensitivity(mesh, u, v);
  CHECK(dot(sk, h) == Approx(dot(u, assemble_stiffness(mesh, h).multiply(v))).epsilon(1e-12));
  CHECK(sum(sk) == Approx(dot(u, assemble_stiffness(mesh, 1.0).multiply(v))).epsilon(1e-12));

  CHECK_THROWS_AS(mass_sensitivity(mesh, Vector{1.0}, v), InvalidArgument);
}
