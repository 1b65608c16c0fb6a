#pragma once

#include <initializer_list>
#include <span>

#include "litt/mesh.hpp"
#include "litt/sparse.hpp"

// Axisymmetric P1 finite-element forms. Every integral carries the weight r;
// the 2*pi of the revolution is dropped uniformly. Nodal coefficient fields
// are interpolated linearly and all integrals are evaluated exactly.

namespace litt {

/// M_ij = int c phi_i phi_j r dA
SparseMatrix assemble_mass(const AxiMesh& mesh, double coeff);
SparseMatrix assemble_mass(const AxiMesh& mesh, std::span<const double> coeff);

/// K_ij = int c grad(phi_i) . grad(phi_j) r dA
SparseMatrix assemble_stiffness(const AxiMesh& mesh, double coeff);
SparseMatrix assemble_stiffness(const AxiMesh& mesh, std::span<const double> coeff);

/// B_ij = int_Gamma c phi_i phi_j r ds over the edges carrying any of `tags`.
SparseMatrix assemble_boundary_mass(const AxiMesh& mesh, std::initializer_list<BoundaryTag> tags,
                                    double coeff);
/// f_i = int_Gamma value phi_i r ds
Vector assemble_boundary_load(const AxiMesh& mesh, std::initializer_list<BoundaryTag> tags,
                              double value);
/// int_Gamma r ds
double boundary_measure(const AxiMesh& mesh, std::initializer_list<BoundaryTag> tags);

/// Derivative of u^T M(c) v with respect to nodal c_i:
///   s_i = int phi_i u v r dA.
Vector mass_sensitivity(const AxiMesh& mesh, std::span<const double> u,
                        std::span<const double> v);
/// Derivative of u^T K(c) v with respect to nodal c_i:
///   s_i = int phi_i grad(u) . grad(v) r dA.
Vector stiffness_sensitivity(const AxiMesh& mesh, std::span<const double> u,
                             std::span<const double> v);

}  // namespace litt
