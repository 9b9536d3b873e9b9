#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gdsw/fem.hpp"
#include "gdsw/sparse.hpp"

namespace gdsw {

// ---------------------------------------------------------------------------
// Interface entities

enum class EntityKind { vertex, edge, face, merged_vertex_group, pressure_subdomain };

const char* to_string(EntityKind kind);

struct InterfaceEntity {
   EntityKind kind = EntityKind::face;
   std::vector<int> dofs;         ///< sorted
   std::vector<int> sharing_set;  ///< sorted subdomain ids; union over member dofs for merged groups
};

/// Dof metadata a Schwarz level needs; the level's matrix may be the
/// assembled system or a coarse matrix of the previous level.
struct LevelDofs {
   int dim = 3;
   int num_subdomains = 1;
   std::vector<int> dof_kind;  ///< component 0..dim-1 or kPressureKind
   std::vector<std::vector<int>> dof_to_subdomains;
   std::vector<char> dirichlet;
   /// Representation of the constant pressure; nonzero only on pressure dofs.
   std::vector<double> pressure_null;

   int size() const { return static_cast<int>(dof_kind.size()); }
   void validate() const;
};

LevelDofs level_dofs(const DofMap& dofs);

enum class Flavor { gdsw, gdsw_star };

const char* to_string(Flavor flavor);
Flavor parse_flavor(const std::string& name);

/// Interior extension of the interface-driven coarse columns.
/// velocity_block: interior velocity from the velocity block, interior
/// pressure zero. saddle_zero_mean: interior velocity and pressure from the
/// monolithic interior block, bordered by each subdomain's constant pressure.
enum class Extension { velocity_block, saddle_zero_mean };

const char* to_string(Extension extension);
Extension parse_extension(const std::string& name);

/// Groups non-Dirichlet velocity dofs shared by two or more subdomains into
/// equivalence classes of identical sharing sets, then appends one
/// pressure entity per subdomain. Entities are ordered by their smallest dof.
///
/// Kinds: in 3D a two-subdomain class is a face; a larger class is a vertex
/// when its sharing set is not strictly contained in another class's set,
/// an edge otherwise. In 2D a two-subdomain class is an edge, larger ones
/// are vertices.
std::vector<InterfaceEntity> classify_interface(const LevelDofs& dofs);

/// GDSW*: each vertex absorbs the edges adjacent to it (edge sharing set
/// contained in the vertex sharing set). An edge adjacent to several vertices
/// joins the one with the lowest entity id; edges without an adjacent vertex
/// stay as they are. Faces and pressure entities are unchanged.
std::vector<InterfaceEntity> merge_gdsw_star(const std::vector<InterfaceEntity>& entities);

struct EntityCounts {
   int vertices = 0;
   int edges = 0;
   int faces = 0;
   int merged = 0;
   int pressure = 0;
};
EntityCounts count_entities(const std::vector<InterfaceEntity>& entities);

// ---------------------------------------------------------------------------
// Coarse basis

struct CoarseColumn {
   int entity = -1;
   int component = 0;  ///< translation component or kPressureKind
   std::vector<int> sharing_set;
};

/// Interface values of the velocity coarse functions: one column per
/// geometric entity and velocity component, 1 on the entity's dofs of that
/// component. Rows are global dofs.
struct PhiGamma {
   CsrMatrix matrix;
   std::vector<CoarseColumn> columns;
};

PhiGamma build_phi_gamma(const std::vector<InterfaceEntity>& entities, const LevelDofs& dofs);

struct CoarseBasis {
   CsrMatrix phi;  ///< global dofs x coarse dofs
   std::vector<CoarseColumn> columns;
   std::vector<char> interface_dof;   ///< dof lies on an entity
   int num_velocity_columns = 0;      ///< leading columns driven by the interface
   int bordered_subdomains = 0;       ///< interior solves constrained to zero-mean pressure
};

/// Energy-minimizing extension of Phi_Gamma into each subdomain interior
/// (non-interface, non-Dirichlet dofs), followed by one constant-pressure
/// column per subdomain. With saddle_zero_mean the interior includes the
/// pressure dofs and the solve is bordered by the subdomain constant, which
/// the pressure column of the same subdomain spans.
CoarseBasis build_coarse_basis(const CsrMatrix& a, const LevelDofs& dofs,
                               const std::vector<InterfaceEntity>& entities, const PhiGamma& phi_gamma,
                               Extension extension = Extension::velocity_block,
                               double pivot_threshold = kDefaultPivotThreshold);

struct ExtensionResidual {
   double max_residual = 0.0;            ///< max |A_II Phi_I + A_IG Phi_G| over all interior rows
   double max_residual_velocity = 0.0;   ///< same, velocity rows only
   double max_residual_zero_mean = 0.0;  ///< same, after removing each subdomain's constant-pressure component
   double matrix_max = 0.0;              ///< max |A|
};

/// Residual of the defining equation of the interface-driven columns.
ExtensionResidual extension_residual(const CsrMatrix& a, const LevelDofs& dofs, const CoarseBasis& basis);

/// Largest deviation from 1 of the per-component interface row sums of Phi.
double partition_of_unity_defect(const LevelDofs& dofs, const CoarseBasis& basis);

// ---------------------------------------------------------------------------
// Levels and hierarchy

struct LevelDiagnostics {
   int level = 1;
   int num_dofs = 0;
   int num_subdomains = 0;
   int overlap_min = 0;
   int overlap_max = 0;
   double overlap_avg = 0.0;
   std::int64_t local_fill = 0;
   int coarse_dim = 0;  ///< 0 when the level has no coarse space
   std::int64_t coarse_fill = 0;
   EntityCounts entities;
   int bordered_subdomains = 0;
   int shifted_local_solves = 0;
   double t_symbolic = 0.0;
   double t_numeric = 0.0;
};

/// One additive Schwarz level: overlapping local solves plus, unless it is a
/// one-level method, a coarse space whose problem is solved either directly
/// or by the next level.
class SchwarzLevel {
public:
   int index() const { return index_; }
   int num_dofs() const { return num_dofs_; }
   int num_subdomains() const { return static_cast<int>(overlapping_.size()); }

   const std::vector<std::vector<int>>& owned_sets() const { return owned_; }
   const std::vector<std::vector<int>>& overlapping_sets() const { return overlapping_; }
   const std::vector<Factorization>& local_solvers() const { return local_; }

   bool has_coarse() const { return has_coarse_; }
   const std::vector<InterfaceEntity>& entities() const { return entities_; }
   const CoarseBasis& coarse_basis() const { return basis_; }
   const CsrMatrix& coarse_matrix() const { return coarse_matrix_; }
   const SchwarzLevel* next() const { return next_.get(); }
   const Factorization& coarse_solver() const { return coarse_solver_; }
   const LevelDofs& dofs() const { return dofs_; }
   const LevelDiagnostics& diagnostics() const { return diag_; }

   /// z = sum_i R_i^T A_i^{-1} R_i r, subdomains in ascending order.
   void apply_local(std::span<const double> r, std::span<double> z) const;
   /// Local part plus Phi (coarse solve) Phi^T r.
   void apply(std::span<const double> r, std::span<double> z) const;

private:
   friend class PreconditionerHierarchy;
   friend struct LevelBuilder;

   int index_ = 1;
   int num_dofs_ = 0;
   LevelDofs dofs_;
   std::vector<std::vector<int>> owned_;
   std::vector<std::vector<int>> overlapping_;
   std::vector<Factorization> local_;
   bool has_coarse_ = false;
   std::vector<InterfaceEntity> entities_;
   CoarseBasis basis_;
   CsrMatrix phi_transpose_;
   CsrMatrix coarse_matrix_;
   Factorization coarse_solver_;
   std::unique_ptr<SchwarzLevel> next_;
   LevelDiagnostics diag_;
};

struct HierarchyOptions {
   int levels = 2;                 ///< 1 = no coarse space
   std::vector<int> overlaps{1};   ///< per level; the last value repeats
   std::vector<Flavor> flavors{Flavor::gdsw_star, Flavor::gdsw};  ///< per level; the last value repeats
   Extension extension = Extension::velocity_block;
   int coarse_cap = 200000;        ///< maximum order of the directly factorized coarse matrix
   double pivot_threshold = kDefaultPivotThreshold;
   int workers = 1;

   int overlap(int level) const;
   Flavor flavor(int level) const;
};

/// Result of building level l + 1 dof metadata from level l's coarse basis.
/// A coarse dof lives on the next-level subdomains containing the subdomains
/// of its source entity.
LevelDofs coarse_level_dofs(const SchwarzLevel& level, std::span<const int> grouping, int num_groups);

/// Builds one level on `a` without coarse space (levels = 1), with a direct
/// coarse solve, or recursively. `groupings[l]` maps the subdomains of level
/// l + 1 onto those of level l + 2; one grouping per level beyond the second.
class PreconditionerHierarchy {
public:
   static PreconditionerHierarchy build(const CsrMatrix& a, LevelDofs dofs,
                                        const std::vector<std::vector<int>>& groupings,
                                        const HierarchyOptions& options);

   /// Levels actually built; a level without interface entities ends the hierarchy.
   int num_levels() const { return num_levels_; }
   const SchwarzLevel& first() const { return *root_; }
   const SchwarzLevel& level(int index) const;  ///< 1-based
   std::vector<LevelDiagnostics> diagnostics() const;

   double t_symbolic() const;
   double t_numeric() const;

   void apply(std::span<const double> r, std::span<double> z) const;

private:
   std::unique_ptr<SchwarzLevel> root_;
   int num_levels_ = 0;
};

// ---------------------------------------------------------------------------
// Closed-form coarse dimensions on structured subdomain grids

/// d (V + F) + N for GDSW*: vertex groups absorb the edges (3D); in 2D the
/// vertex groups absorb all interface edges. Valid for grids with at least
/// two subdomains per axis.
std::int64_t gdsw_star_dimension(std::span<const int> grid);

/// d (V + E + F) + N for full GDSW.
std::int64_t gdsw_dimension(std::span<const int> grid);

}  // namespace gdsw
