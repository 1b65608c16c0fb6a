#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "litt/sparse.hpp"

namespace litt {

/// Liver section with an applicator slot along the symmetry axis. The slot
/// enters through the top face and ends at a tip below the radiating section.
/// Lengths in meters.
struct GeometryConfig {
  double liver_radius = 30e-3;
  double liver_half_height = 40e-3;
  double applicator_radius = 1.5e-3;
  /// Radiating wall section spans z in [-radiating_half_length, +radiating_half_length].
  double radiating_half_length = 10e-3;
  /// Cooled section between the lower end of the radiating wall and the tip.
  double cooled_length = 5e-3;
  double target_edge_size = 1e-3;

  double tip_z() const { return -(radiating_half_length + cooled_length); }
  /// Throws ConfigError on degenerate or inconsistent dimensions.
  void validate() const;
};

enum class BoundaryTag { Rad, Cool, Amb, Axis };

std::string_view to_string(BoundaryTag tag);

struct Point {
  double r;
  double z;
};

struct BoundaryEdge {
  std::array<std::size_t, 2> nodes;
  BoundaryTag tag;
};

/// Per-triangle data reused by every assembly routine.
struct ElementGeometry {
  double area;
  /// Gradients of the three barycentric coordinates, (d/dr, d/dz).
  std::array<std::array<double, 2>, 3> grad;
};

/// Triangulated (r, z) half-section. Immutable once constructed; carries the
/// CSR pattern and element-to-slot maps shared by all assembled operators.
class AxiMesh {
public:
  AxiMesh(std::vector<Point> nodes, std::vector<std::array<std::size_t, 3>> triangles,
          std::vector<BoundaryEdge> boundary_edges);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<std::array<std::size_t, 3>>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return edges_; }
  const std::vector<ElementGeometry>& elements() const { return geometry_; }

  bool has_tag(BoundaryTag tag) const;
  /// Edges on the outer boundary of the triangulation that carry no tag.
  std::vector<std::array<std::size_t, 2>> untagged_boundary_edges() const;

  /// All-zero matrix with the mesh connectivity pattern.
  const SparseMatrix& pattern() const { return pattern_; }
  /// values() index for local pair (a, b) of triangle e is slots[e][3*a+b].
  const std::vector<std::array<std::size_t, 9>>& element_slots() const { return element_slots_; }
  /// values() index for local pair (a, b) of boundary edge e is slots[e][2*a+b].
  const std::vector<std::array<std::size_t, 4>>& edge_slots() const { return edge_slots_; }

  /// Plain area of the section, and its r-weighted measure (volume / 2 pi).
  double area() const;
  double weighted_area() const;

  /// Index of the node closest to (r, z).
  std::size_t nearest_node(Point p) const;

private:
  std::vector<Point> nodes_;
  std::vector<std::array<std::size_t, 3>> triangles_;
  std::vector<BoundaryEdge> edges_;
  std::vector<ElementGeometry> geometry_;
  SparseMatrix pattern_;
  std::vector<std::array<std::size_t, 9>> element_slots_;
  std::vector<std::array<std::size_t, 4>> edge_slots_;
};

/// Structured triangulation conforming to the applicator slot; every
/// boundary edge is tagged.
AxiMesh build_mesh(const GeometryConfig& geom);

/// Analytic plain and r-weighted area of the configured section.
double analytic_area(const GeometryConfig& geom);
double analytic_weighted_area(const GeometryConfig& geom);

}  // namespace litt
