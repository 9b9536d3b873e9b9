#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "gdsw/mesh.hpp"
#include "gdsw/sparse.hpp"

namespace gdsw {

/// Dof kind tag: 0..dim-1 for velocity components, kPressureKind for pressure.
inline constexpr int kPressureKind = -1;

using Vec3 = std::array<double, 3>;
using VectorField = std::function<Vec3(const Point&)>;
using ScalarField = std::function<double(const Point&)>;

/// Q2 velocity / P1-discontinuous pressure dof layout. Velocity dofs come
/// first (node-major, components interleaved), then pressure dofs
/// element-major with modes {1, xi, eta(, zeta)}.
struct DofMap {
   int dim = 3;
   AxisCounts q2_points{1, 1, 1};  ///< 2 * cells + 1 per axis (1 on unused axes)
   int num_velocity_nodes = 0;
   int num_velocity_dofs = 0;
   int num_pressure_dofs = 0;
   int num_subdomains = 1;

   std::vector<Point> velocity_node_coords;
   std::vector<std::array<int, 27>> element_velocity_nodes;  ///< 3^dim local Q2 nodes, lexicographic

   std::vector<int> dof_kind;
   std::vector<char> dirichlet;  ///< per dof
   std::vector<int> dirichlet_dofs;
   std::vector<std::vector<int>> dof_to_subdomains;  ///< sorted

   int num_dofs() const { return num_velocity_dofs + num_pressure_dofs; }
   int pressure_modes() const { return dim + 1; }
   int velocity_dof(int node, int component) const { return node * dim + component; }
   int pressure_dof(int element, int mode) const { return num_velocity_dofs + element * (dim + 1) + mode; }
   int nodes_per_element() const { return dim == 3 ? 27 : 9; }

   /// The discrete constant-pressure function: 1 on every value mode.
   std::vector<double> constant_pressure() const;
};

/// Velocity dofs on inflow or wall facets are Dirichlet; outflow is natural.
DofMap build_dofmap(const StructuredMesh& mesh, const Decomposition& decomp);

/// Monolithic matrix plus dof tags and block accessors.
struct SaddleMatrix {
   CsrMatrix matrix;
   std::vector<int> dof_kind;
   int num_velocity_dofs = 0;

   CsrMatrix velocity_block() const;  ///< A
   CsrMatrix divergence_block() const;  ///< B (pressure rows, velocity columns)
   CsrMatrix pressure_block() const;
};

struct ProblemConfig {
   double viscosity = 1.0;
   Vec3 body_force{0.0, 0.0, 0.0};
   double inflow_constant = 1.0;
   double tol_rel = 1e-8;
   int max_iterations = 500;

   void validate() const;
};

/// mu (grad u : grad v) - (div v) p - (div u) q with 3^dim Gauss points.
/// Throws NumericallySingular on a degenerate element map.
std::pair<SaddleMatrix, std::vector<double>> assemble_stokes(const StructuredMesh& mesh, const DofMap& dofs,
                                                             const ProblemConfig& config);

/// Symmetric elimination of the Dirichlet dofs with data g: rows and columns
/// become identity, known values move to the right-hand side.
std::pair<SaddleMatrix, std::vector<double>> apply_dirichlet(const SaddleMatrix& system, std::span<const double> rhs,
                                                             const DofMap& dofs, const VectorField& g);

/// Nodal velocity values of g on the Dirichlet dofs, zero elsewhere.
std::vector<double> dirichlet_values(const DofMap& dofs, const VectorField& g);

struct AnalyticSolution {
   VectorField velocity;
   ScalarField pressure;
};

/// u = (c y (1 - y), 0), p = 2 mu c (L - x): exact Stokes flow in [0,L] x [0,1]
/// with zero traction at x = L.
AnalyticSolution poiseuille_2d(double c, double viscosity, double length = 1.0);

/// u = (c y z (1 - y)(1 - z), 0, 0) on the unit cube inflow plane.
VectorField cube_inflow_profile(double c);

/// Nodal velocity values and element-wise L2 projection of the pressure.
std::vector<double> interpolate(const AnalyticSolution& sol, const StructuredMesh& mesh, const DofMap& dofs);

struct DiscreteError {
   double velocity_max_node_error = 0.0;
   double pressure_l2_error = 0.0;
};

DiscreteError discrete_error(std::span<const double> solution, const AnalyticSolution& sol,
                             const StructuredMesh& mesh, const DofMap& dofs);

/// Node listing of a solution: velocity per Q2 node and pressure modes per
/// element.
void write_field_listing(std::ostream& out, std::span<const double> solution, const DofMap& dofs);

}  // namespace gdsw
