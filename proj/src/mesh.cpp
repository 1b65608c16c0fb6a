#include "litt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>

#include "litt/errors.hpp"

namespace litt {

namespace {

using EdgeKey = std::pair<std::size_t, std::size_t>;

EdgeKey edge_key(std::size_t a, std::size_t b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

std::map<EdgeKey, int> edge_counts(const std::vector<std::array<std::size_t, 3>>& tris) {
  std::map<EdgeKey, int> counts;
  for (const auto& t : tris) {
    for (int k = 0; k < 3; ++k) ++counts[edge_key(t[k], t[(k + 1) % 3])];
  }
  return counts;
}

// Breakpoints of one coordinate direction, each segment split into equal
// cells no longer than h.
std::vector<double> graded_axis(std::span<const double> breaks, double h) {
  std::vector<double> out{breaks.front()};
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double len = breaks[s + 1] - breaks[s];
    const int cells = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
    for (int c = 1; c < cells; ++c) out.push_back(breaks[s] + len * c / cells);
    out.push_back(breaks[s + 1]);
  }
  return out;
}

}  // namespace

void GeometryConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("geometry: ") + name + " must be > 0");
    }
  };
  positive(liver_radius, "liver_radius");
  positive(liver_half_height, "liver_half_height");
  positive(applicator_radius, "applicator_radius");
  positive(radiating_half_length, "radiating_half_length");
  positive(cooled_length, "cooled_length");
  positive(target_edge_size, "target_edge_size");
  if (applicator_radius >= liver_radius) {
    throw ConfigError("geometry: applicator_radius must be smaller than liver_radius");
  }
  if (radiating_half_length + cooled_length >= liver_half_height) {
    throw ConfigError("geometry: radiating and cooled sections do not fit in the liver");
  }
}

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Rad: return "rad";
    case BoundaryTag::Cool: return "cool";
    case BoundaryTag::Amb: return "amb";
    case BoundaryTag::Axis: return "axis";
  }
  return "?";
}

AxiMesh::AxiMesh(std::vector<Point> nodes, std::vector<std::array<std::size_t, 3>> triangles,
                 std::vector<BoundaryEdge> boundary_edges)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), edges_(std::move(boundary_edges)) {
  const std::size_t n = nodes_.size();
  for (const auto& p : nodes_) {
    if (p.r < 0.0) throw InvalidArgument("AxiMesh: node with r < 0");
  }

  geometry_.reserve(triangles_.size());
  for (const auto& t : triangles_) {
    for (auto v : t) {
      if (v >= n) throw InvalidArgument("AxiMesh: triangle references missing node");
    }
    const Point& p0 = nodes_[t[0]];
    const Point& p1 = nodes_[t[1]];
    const Point& p2 = nodes_[t[2]];
    const double det = (p1.r - p0.r) * (p2.z - p0.z) - (p2.r - p0.r) * (p1.z - p0.z);
    if (!(det > 0.0)) throw InvalidArgument("AxiMesh: triangle with nonpositive area");
    ElementGeometry g{};
    g.area = 0.5 * det;
    const std::array<const Point*, 3> p{&p0, &p1, &p2};
    for (int i = 0; i < 3; ++i) {
      const Point& a = *p[(i + 1) % 3];
      const Point& b = *p[(i + 2) % 3];
      g.grad[i] = {(a.z - b.z) / det, (b.r - a.r) / det};
    }
    geometry_.push_back(g);
  }

  const auto counts = edge_counts(triangles_);
  std::set<EdgeKey> seen;
  for (const auto& e : edges_) {
    const auto key = edge_key(e.nodes[0], e.nodes[1]);
    const auto it = counts.find(key);
    if (it == counts.end() || it->second != 1) {
      throw InvalidArgument("AxiMesh: tagged edge is not a boundary edge");
    }
    if (!seen.insert(key).second) throw InvalidArgument("AxiMesh: boundary edge tagged twice");
  }

  std::vector<std::set<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) adj[i].insert(i);
  for (const auto& t : triangles_) {
    for (auto a : t) {
      for (auto b : t) adj[a].insert(b);
    }
  }
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < n; ++i) {
    cols.insert(cols.end(), adj[i].begin(), adj[i].end());
    offsets[i + 1] = cols.size();
  }
  Vector zeros(cols.size(), 0.0);
  pattern_ = SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(zeros));

  element_slots_.reserve(triangles_.size());
  for (const auto& t : triangles_) {
    std::array<std::size_t, 9> s{};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) s[3 * a + b] = pattern_.find(t[a], t[b]);
    }
    element_slots_.push_back(s);
  }
  edge_slots_.reserve(edges_.size());
  for (const auto& e : edges_) {
    std::array<std::size_t, 4> s{};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) s[2 * a + b] = pattern_.find(e.nodes[a], e.nodes[b]);
    }
    edge_slots_.push_back(s);
  }
}

bool AxiMesh::has_tag(BoundaryTag tag) const {
  return std::any_of(edges_.begin(), edges_.end(), [tag](const BoundaryEdge& e) { return e.tag == tag; });
}

std::vector<std::array<std::size_t, 2>> AxiMesh::untagged_boundary_edges() const {
  std::set<EdgeKey> tagged;
  for (const auto& e : edges_) tagged.insert(edge_key(e.nodes[0], e.nodes[1]));
  std::vector<std::array<std::size_t, 2>> out;
  for (const auto& [key, count] : edge_counts(triangles_)) {
    if (count == 1 && !tagged.count(key)) out.push_back({key.first, key.second});
  }
  return out;
}

double AxiMesh::area() const {
  double s = 0.0;
  for (const auto& g : geometry_) s += g.area;
  return s;
}

double AxiMesh::weighted_area() const {
  double s = 0.0;
  for (std::size_t e = 0; e < triangles_.size(); ++e) {
    const auto& t = triangles_[e];
    s += geometry_[e].area * (nodes_[t[0]].r + nodes_[t[1]].r + nodes_[t[2]].r) / 3.0;
  }
  return s;
}

std::size_t AxiMesh::nearest_node(Point p) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double d = std::hypot(nodes_[i].r - p.r, nodes_[i].z - p.z);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double analytic_area(const GeometryConfig& g) {
  return 2.0 * g.liver_half_height * g.liver_radius -
         g.applicator_radius * (g.liver_half_height - g.tip_z());
}

double analytic_weighted_area(const GeometryConfig& g) {
  return g.liver_radius * g.liver_radius * g.liver_half_height -
         0.5 * g.applicator_radius * g.applicator_radius * (g.liver_half_height - g.tip_z());
}

AxiMesh build_mesh(const GeometryConfig& geom) {
  geom.validate();
  const double a = geom.applicator_radius;
  const double big_r = geom.liver_radius;
  const double big_h = geom.liver_half_height;
  const double tip = geom.tip_z();
  const double rad = geom.radiating_half_length;
  const double h = geom.target_edge_size;

  const std::array<double, 3> r_breaks{0.0, a, big_r};
  const std::array<double, 5> z_breaks{-big_h, tip, -rad, rad, big_h};
  const auto rs = graded_axis(r_breaks, h);
  const auto zs = graded_axis(z_breaks, h);
  const std::size_t nr = rs.size();
  const std::size_t nz = zs.size();
  const std::size_t i_app = static_cast<std::size_t>(
      std::find(rs.begin(), rs.end(), a) - rs.begin());
  const std::size_t j_tip = static_cast<std::size_t>(
      std::find(zs.begin(), zs.end(), tip) - zs.begin());

  // Grid nodes strictly inside the slot (and on its axis) are dropped.
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> id(nr * nz, none);
  std::vector<Point> nodes;
  for (std::size_t j = 0; j < nz; ++j) {
    for (std::size_t i = 0; i < nr; ++i) {
      if (i < i_app && j > j_tip) continue;
      id[j * nr + i] = nodes.size();
      nodes.push_back({rs[i], zs[j]});
    }
  }

  std::vector<std::array<std::size_t, 3>> tris;
  for (std::size_t j = 0; j + 1 < nz; ++j) {
    for (std::size_t i = 0; i + 1 < nr; ++i) {
      if (i + 1 <= i_app && j >= j_tip) continue;
      const std::size_t n00 = id[j * nr + i];
      const std::size_t n10 = id[j * nr + i + 1];
      const std::size_t n01 = id[(j + 1) * nr + i];
      const std::size_t n11 = id[(j + 1) * nr + i + 1];
      tris.push_back({n00, n10, n11});
      tris.push_back({n00, n11, n01});
    }
  }

  const double tol = 1e-12 * std::max(big_r, big_h);
  auto near = [tol](double x, double y) { return std::abs(x - y) <= tol; };
  std::vector<BoundaryEdge> edges;
  for (const auto& [key, count] : edge_counts(tris)) {
    if (count != 1) continue;
    const Point& p = nodes[key.first];
    const Point& q = nodes[key.second];
    BoundaryTag tag;
    if (near(p.r, 0.0) && near(q.r, 0.0)) {
      tag = BoundaryTag::Axis;
    } else if ((near(p.r, big_r) && near(q.r, big_r)) || (near(p.z, big_h) && near(q.z, big_h)) ||
               (near(p.z, -big_h) && near(q.z, -big_h))) {
      tag = BoundaryTag::Amb;
    } else if (near(p.r, a) && near(q.r, a)) {
      const double zm = 0.5 * (p.z + q.z);
      tag = (zm > -rad && zm < rad) ? BoundaryTag::Rad : BoundaryTag::Cool;
    } else if (near(p.z, tip) && near(q.z, tip)) {
      tag = BoundaryTag::Cool;
    } else {
      throw InvalidArgument("build_mesh: unclassified boundary edge");
    }
    edges.push_back({{key.first, key.second}, tag});
  }
  return AxiMesh(std::move(nodes), std::move(tris), std::move(edges));
}

}  // namespace litt
