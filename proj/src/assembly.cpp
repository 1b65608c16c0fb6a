#include "litt/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "litt/errors.hpp"

namespace litt {

namespace {

constexpr double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// int_T prod lambda over the given local indices = area * table value.
// For n factors: 2 * prod(m_k!) / (n + 2)!.
template <std::size_t N>
constexpr double simplex_factor(const std::array<int, N>& idx) {
  std::array<int, 3> m{};
  for (int i : idx) ++m[static_cast<std::size_t>(i)];
  return 2.0 * factorial(m[0]) * factorial(m[1]) * factorial(m[2]) / factorial(static_cast<int>(N) + 2);
}

// Same on an edge: prod(m_k!) / (n + 1)! times length.
template <std::size_t N>
constexpr double edge_factor(const std::array<int, N>& idx) {
  std::array<int, 2> m{};
  for (int i : idx) ++m[static_cast<std::size_t>(i)];
  return factorial(m[0]) * factorial(m[1]) / factorial(static_cast<int>(N) + 1);
}

struct Tables {
  double f2[3][3];
  double f3[3][3][3];
  double f4[3][3][3][3];
  double e2[2][2];
  double e3[2][2][2];
};

const Tables& tables() {
  static const Tables t = [] {
    Tables x{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        x.f2[i][j] = simplex_factor(std::array<int, 2>{i, j});
        for (int a = 0; a < 3; ++a) {
          x.f3[i][j][a] = simplex_factor(std::array<int, 3>{i, j, a});
          for (int b = 0; b < 3; ++b) x.f4[i][j][a][b] = simplex_factor(std::array<int, 4>{i, j, a, b});
        }
      }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        x.e2[i][j] = edge_factor(std::array<int, 2>{i, j});
        for (int a = 0; a < 2; ++a) x.e3[i][j][a] = edge_factor(std::array<int, 3>{i, j, a});
      }
    return x;
  }();
  return t;
}

void check_field(const AxiMesh& mesh, std::span<const double> f, const char* what) {
  if (f.size() != mesh.num_nodes()) {
    throw InvalidArgument(std::string(what) + ": field length does not match node count");
  }
}

bool tag_selected(BoundaryTag tag, std::initializer_list<BoundaryTag> tags) {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

void check_tags(const AxiMesh& mesh, std::initializer_list<BoundaryTag> tags) {
  for (auto t : tags) {
    if (!mesh.has_tag(t)) {
      throw InvalidArgument("boundary form: mesh has no edges tagged '" + std::string(to_string(t)) + "'");
    }
  }
}

double edge_length(const AxiMesh& mesh, const BoundaryEdge& e) {
  const Point& p = mesh.nodes()[e.nodes[0]];
  const Point& q = mesh.nodes()[e.nodes[1]];
  return std::hypot(q.r - p.r, q.z - p.z);
}

// Element matrix of int c phi_a phi_b r with c interpolated from nodal values.
template <class Coeff>
SparseMatrix mass_impl(const AxiMesh& mesh, Coeff coeff_at) {
  const auto& tb = tables();
  SparseMatrix m = mesh.pattern().zeros_like();
  auto& vals = m.values();
  const auto& tris = mesh.triangles();
  const auto& nodes = mesh.nodes();
  for (std::size_t e = 0; e < tris.size(); ++e) {
    const auto& t = tris[e];
    const double area = mesh.elements()[e].area;
    std::array<double, 3> c{}, r{};
    for (int k = 0; k < 3; ++k) {
      c[k] = coeff_at(t[k]);
      r[k] = nodes[t[k]].r;
    }
    const auto& slot = mesh.element_slots()[e];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) s += c[i] * r[j] * tb.f4[i][j][a][b];
        vals[slot[3 * a + b]] += area * s;
      }
    }
  }
  return m;
}

template <class Coeff>
SparseMatrix stiffness_impl(const AxiMesh& mesh, Coeff coeff_at) {
  const auto& tb = tables();
  SparseMatrix k = mesh.pattern().zeros_like();
  auto& vals = k.values();
  const auto& tris = mesh.triangles();
  const auto& nodes = mesh.nodes();
  for (std::size_t e = 0; e < tris.size(); ++e) {
    const auto& t = tris[e];
    const auto& g = mesh.elements()[e];
    double weight = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) weight += coeff_at(t[i]) * nodes[t[j]].r * tb.f2[i][j];
    weight *= g.area;
    const auto& slot = mesh.element_slots()[e];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const double gg = g.grad[a][0] * g.grad[b][0] + g.grad[a][1] * g.grad[b][1];
        vals[slot[3 * a + b]] += weight * gg;
      }
    }
  }
  return k;
}

}  // namespace

SparseMatrix assemble_mass(const AxiMesh& mesh, double coeff) {
  return mass_impl(mesh, [coeff](std::size_t) { return coeff; });
}

SparseMatrix assemble_mass(const AxiMesh& mesh, std::span<const double> coeff) {
  check_field(mesh, coeff, "assemble_mass");
  return mass_impl(mesh, [coeff](std::size_t i) { return coeff[i]; });
}

SparseMatrix assemble_stiffness(const AxiMesh& mesh, double coeff) {
  return stiffness_impl(mesh, [coeff](std::size_t) { return coeff; });
}

SparseMatrix assemble_stiffness(const AxiMesh& mesh, std::span<const double> coeff) {
  check_field(mesh, coeff, "assemble_stiffness");
  return stiffness_impl(mesh, [coeff](std::size_t i) { return coeff[i]; });
}

SparseMatrix assemble_boundary_mass(const AxiMesh& mesh, std::initializer_list<BoundaryTag> tags,
                                    double coeff) {
  check_tags(mesh, tags);
  const auto& tb = tables();
  SparseMatrix m = mesh.pattern().zeros_like();
  auto& vals = m.values();
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!tag_selected(edges[e].tag, tags)) continue;
    const double len = edge_length(mesh, edges[e]);
    const std::array<double, 2> r{mesh.nodes()[edges[e].nodes[0]].r, mesh.nodes()[edges[e].nodes[1]].r};
    const auto& slot = mesh.edge_slots()[e];
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        double s = 0.0;
        for (int j = 0; j < 2; ++j) s += r[j] * tb.e3[j][a][b];
        vals[slot[2 * a + b]] += coeff * len * s;
      }
    }
  }
  return m;
}

Vector assemble_boundary_load(const AxiMesh& mesh, std::initializer_list<BoundaryTag> tags,
                              double value) {
  check_tags(mesh, tags);
  const auto& tb = tables();
  Vector f(mesh.num_nodes(), 0.0);
  for (const auto& edge : mesh.boundary_edges()) {
    if (!tag_selected(edge.tag, tags)) continue;
    const double len = edge_length(mesh, edge);
    const std::array<double, 2> r{mesh.nodes()[edge.nodes[0]].r, mesh.nodes()[edge.nodes[1]].r};
    for (int a = 0; a < 2; ++a) {
      f[edge.nodes[a]] += value * len * (r[0] * tb.e2[0][a] + r[1] * tb.e2[1][a]);
    }
  }
  return f;
}

double boundary_measure(const AxiMesh& mesh, std::initializer_list<BoundaryTag> tags) {
  check_tags(mesh, tags);
  double s = 0.0;
  for (const auto& edge : mesh.boundary_edges()) {
    if (!tag_selected(edge.tag, tags)) continue;
    s += edge_length(mesh, edge) * 0.5 *
         (mesh.nodes()[edge.nodes[0]].r + mesh.nodes()[edge.nodes[1]].r);
  }
  return s;
}

Vector mass_sensitivity(const AxiMesh& mesh, std::span<const double> u, std::span<const double> v) {
  check_field(mesh, u, "mass_sensitivity(u)");
  check_field(mesh, v, "mass_sensitivity(v)");
  const auto& tb = tables();
  Vector s(mesh.num_nodes(), 0.0);
  const auto& tris = mesh.triangles();
  const auto& nodes = mesh.nodes();
  for (std::size_t e = 0; e < tris.size(); ++e) {
    const auto& t = tris[e];
    const double area = mesh.elements()[e].area;
    std::array<double, 3> r{}, ul{}, vl{};
    for (int k = 0; k < 3; ++k) {
      r[k] = nodes[t[k]].r;
      ul[k] = u[t[k]];
      vl[k] = v[t[k]];
    }
    for (int i = 0; i < 3; ++i) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) acc += r[j] * ul[a] * vl[b] * tb.f4[i][j][a][b];
      s[t[i]] += area * acc;
    }
  }
  return s;
}

Vector stiffness_sensitivity(const AxiMesh& mesh, std::span<const double> u,
                             std::span<const double> v) {
  check_field(mesh, u, "stiffness_sensitivity(u)");
  check_field(mesh, v, "stiffness_sensitivity(v)");
  const auto& tb = tables();
  Vector s(mesh.num_nodes(), 0.0);
  const auto& tris = mesh.triangles();
  const auto& nodes = mesh.nodes();
  for (std::size_t e = 0; e < tris.size(); ++e) {
    const auto& t = tris[e];
    const auto& g = mesh.elements()[e];
    std::array<double, 2> gu{}, gv{};
    for (int k = 0; k < 3; ++k) {
      for (int d = 0; d < 2; ++d) {
        gu[d] += u[t[k]] * g.grad[k][d];
        gv[d] += v[t[k]] * g.grad[k][d];
      }
    }
    const double gg = gu[0] * gv[0] + gu[1] * gv[1];
    if (gg == 0.0) continue;
    for (int i = 0; i < 3; ++i) {
      double w = 0.0;
      for (int j = 0; j < 3; ++j) w += nodes[t[j]].r * tb.f2[i][j];
      s[t[i]] += g.area * w * gg;
    }
  }
  return s;
}

}  // namespace litt
