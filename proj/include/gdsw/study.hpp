#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gdsw/fem.hpp"
#include "gdsw/krylov.hpp"
#include "gdsw/mesh.hpp"
#include "gdsw/schwarz.hpp"

namespace gdsw {

enum class ProblemKind { cube3d, channel2d };

const char* to_string(ProblemKind kind);
ProblemKind parse_problem(const std::string& name);

/// Weak-scaling study description. One row per entry of `subdomain_grids`;
/// `subregion_grids` (three or more levels) pairs with it row by row.
struct StudyConfig {
   ProblemKind problem = ProblemKind::cube3d;
   int cells_per_subdomain = 3;  ///< H/h per axis
   std::vector<std::vector<int>> subdomain_grids;
   std::vector<std::vector<int>> subregion_grids;
   std::string decomposition = "structured";  ///< or "bisection" (grid gives the subdomain count)
   int levels = 2;
   std::vector<Flavor> flavors{Flavor::gdsw_star, Flavor::gdsw};
   std::vector<int> overlaps{1};
   Extension extension = Extension::velocity_block;
   double viscosity = 1.0;
   double inflow_constant = 1.0;
   double tol_rel = 1e-8;
   int max_iterations = 500;
   int restart = 0;
   int coarse_cap = 200000;
   int workers = 1;
   std::string output;  ///< .csv or .json; empty prints CSV to stdout

   int dim() const { return problem == ProblemKind::cube3d ? 3 : 2; }
   void validate() const;
};

StudyConfig parse_study_config(const std::string& json_text);
StudyConfig load_study_config(const std::string& path);
std::string study_config_to_json(const StudyConfig& config);

struct StudyRow {
   std::int64_t dofs = 0;
   int subdomains = 0;
   int subregions = 0;
   std::int64_t coarse_dofs_l2 = 0;
   std::int64_t coarse_dofs_l3 = 0;
   double t_symbolic = 0.0;
   double t_numeric = 0.0;
   double t_solve = 0.0;
   int iterations = 0;
   bool converged = false;
   double final_residual = 0.0;
   std::string error;  ///< error kind; empty on success
   std::string error_message;
   std::vector<LevelDiagnostics> levels;
};

/// Everything one solve produces.
struct SolveOutcome {
   StudyRow row;
   StructuredMesh mesh;
   Decomposition decomposition;
   DofMap dofs;
   SaddleMatrix system;
   std::vector<double> rhs;
   KrylovReport report;
};

/// The assembled, constrained problem of one study row.
struct ProblemInstance {
   StructuredMesh mesh;
   Decomposition decomposition;
   std::optional<SubregionMap> subregions;
   DofMap dofs;
   SaddleMatrix system;
   std::vector<double> rhs;
};

ProblemInstance build_problem(const StudyConfig& config, std::size_t row);
HierarchyOptions hierarchy_options(const StudyConfig& config);
std::vector<std::vector<int>> hierarchy_groupings(const ProblemInstance& problem);

/// Runs mesh, assembly, hierarchy and FGMRES for one row. Library errors
/// are recorded in the row (error kind in place of timings) instead of
/// propagating.
SolveOutcome run_solve(const StudyConfig& config, std::size_t row = 0);

std::vector<StudyRow> run_study(const StudyConfig& config);

/// dofs,subdomains,subregions,coarse_dofs_l2,coarse_dofs_l3,t_symbolic,t_numeric,t_solve,iterations,converged
void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows);
void write_study_json(std::ostream& out, const StudyConfig& config, const std::vector<StudyRow>& rows);

struct DimensionReport {
   std::vector<int> grid;
   std::int64_t gdsw_star = 0;
   std::int64_t gdsw = 0;
};

DimensionReport check_dims(const std::vector<int>& grid);
void write_dimension_report(std::ostream& out, const std::vector<DimensionReport>& reports);

}  // namespace gdsw
