// gdsw: single solves, weak-scaling studies, coarse dimension tables and
// matrix exports for the monolithic GDSW preconditioners.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gdsw/error.hpp"
#include "gdsw/study.hpp"

namespace {

using namespace gdsw;

struct Overrides {
   std::string config_path;
   std::optional<std::string> problem;
   std::optional<int> cells;
   std::vector<std::string> grids;
   std::vector<std::string> subregions;
   std::optional<std::string> decomposition;
   std::optional<int> levels;
   std::vector<std::string> flavors;
   std::vector<int> overlaps;
   std::optional<std::string> extension;
   std::optional<double> viscosity;
   std::optional<double> inflow;
   std::optional<double> tol;
   std::optional<int> max_iterations;
   std::optional<int> restart;
   std::optional<int> coarse_cap;
   std::optional<int> workers;
   std::optional<std::string> output;
};

void add_config_options(CLI::App* cmd, Overrides& o)
{
   cmd->add_option("config", o.config_path, "JSON study configuration")->check(CLI::ExistingFile);
   cmd->add_option("--problem", o.problem, "cube3d or channel2d");
   cmd->add_option("--cells", o.cells, "cells per subdomain and axis (H/h)");
   cmd->add_option("--grid", o.grids, "subdomain grid, e.g. 4 or 4x4x2 (repeatable)");
   cmd->add_option("--subregions", o.subregions, "subregion grid per row (repeatable)");
   cmd->add_option("--decomposition", o.decomposition, "structured or bisection");
   cmd->add_option("--levels", o.levels, "1, 2 or 3");
   cmd->add_option("--flavor", o.flavors, "gdsw or gdsw_star per level (repeatable)");
   cmd->add_option("--overlap", o.overlaps, "overlap layers per level (repeatable)");
   cmd->add_option("--extension", o.extension, "velocity_block or saddle_zero_mean");
   cmd->add_option("--viscosity", o.viscosity);
   cmd->add_option("--inflow", o.inflow, "inflow constant c");
   cmd->add_option("--tol", o.tol, "relative residual tolerance");
   cmd->add_option("--max-iterations", o.max_iterations);
   cmd->add_option("--restart", o.restart, "FGMRES restart length, 0 for none");
   cmd->add_option("--coarse-cap", o.coarse_cap, "largest coarse order factored directly");
   cmd->add_option("--workers", o.workers, "threads for subdomain work");
}

std::vector<int> parse_grid_arg(const std::string& text, int dim)
{
   std::vector<int> g;
   std::stringstream ss(text);
   std::string part;
   while (std::getline(ss, part, 'x')) {
      try {
         std::size_t used = 0;
         g.push_back(std::stoi(part, &used));
         if (used != part.size()) throw std::invalid_argument(part);
      }
      catch (const std::exception&) {
         throw InvalidArgument("bad grid '" + text + "'");
      }
   }
   if (g.size() == 1) g.assign(static_cast<std::size_t>(dim), g.front());
   return g;
}

StudyConfig resolve_config(const Overrides& o)
{
   StudyConfig c = o.config_path.empty() ? StudyConfig{} : load_study_config(o.config_path);
   if (o.problem) c.problem = parse_problem(*o.problem);
   if (o.cells) c.cells_per_subdomain = *o.cells;
   if (!o.grids.empty()) {
      c.subdomain_grids.clear();
      for (const auto& g : o.grids) c.subdomain_grids.push_back(parse_grid_arg(g, c.dim()));
   }
   if (!o.subregions.empty()) {
      c.subregion_grids.clear();
      for (const auto& g : o.subregions) c.subregion_grids.push_back(parse_grid_arg(g, c.dim()));
   }
   if (o.decomposition) c.decomposition = *o.decomposition;
   if (o.levels) c.levels = *o.levels;
   if (!o.flavors.empty()) {
      c.flavors.clear();
      for (const auto& f : o.flavors) c.flavors.push_back(parse_flavor(f));
   }
   if (!o.overlaps.empty()) c.overlaps = o.overlaps;
   if (o.extension) c.extension = parse_extension(*o.extension);
   if (o.viscosity) c.viscosity = *o.viscosity;
   if (o.inflow) c.inflow_constant = *o.inflow;
   if (o.tol) c.tol_rel = *o.tol;
   if (o.max_iterations) c.max_iterations = *o.max_iterations;
   if (o.restart) c.restart = *o.restart;
   if (o.coarse_cap) c.coarse_cap = *o.coarse_cap;
   if (o.workers) c.workers = *o.workers;
   if (o.output) c.output = *o.output;
   c.validate();
   return c;
}

bool ends_with(const std::string& s, const std::string& suffix)
{
   return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::ofstream open_output(const std::string& path)
{
   std::ofstream out(path);
   if (!out) throw InvalidArgument("cannot write '" + path + "'");
   return out;
}

void write_rows(const StudyConfig& c, const std::vector<StudyRow>& rows)
{
   if (c.output.empty()) {
      write_study_csv(std::cout, rows);
      return;
   }
   auto out = open_output(c.output);
   if (ends_with(c.output, ".json")) write_study_json(out, c, rows);
   else write_study_csv(out, rows);
}

int run_solve_command(const Overrides& o, std::size_t row, const std::string& solution_path,
                      const std::string& field_path, const std::string& residual_path)
{
   const StudyConfig c = resolve_config(o);
   SolveOutcome s = run_solve(c, row);
   write_rows(c, {s.row});
   for (const auto& d : s.row.levels)
      std::cerr << "level " << d.level << ": dofs " << d.num_dofs << ", subdomains " << d.num_subdomains
                << ", overlap " << d.overlap_min << ".." << d.overlap_max << ", coarse " << d.coarse_dim
                << ", bordered " << d.bordered_subdomains << ", shifted " << d.shifted_local_solves << "\n";
   if (!s.row.error.empty()) {
      std::cerr << "error: " << s.row.error_message << "\n";
      return 1;
   }
   std::cerr << (s.row.converged ? "converged" : "not converged") << " in " << s.row.iterations
             << " iterations, true relative residual " << s.row.final_residual << "\n";
   if (!solution_path.empty()) write_matrix_market_vector(solution_path, s.report.solution);
   if (!field_path.empty()) {
      auto out = open_output(field_path);
      write_field_listing(out, s.report.solution, s.dofs);
   }
   if (!residual_path.empty()) {
      auto out = open_output(residual_path);
      write_residual_csv(out, s.report);
   }
   return 0;
}

int run_export_command(const Overrides& o, std::size_t row, const std::string& matrix_path,
                       const std::string& rhs_path, const std::string& coarse_path, const std::string& mesh_path)
{
   const StudyConfig c = resolve_config(o);
   const ProblemInstance p = build_problem(c, row);
   if (!matrix_path.empty()) write_matrix_market(matrix_path, p.system.matrix);
   if (!rhs_path.empty()) write_matrix_market_vector(rhs_path, p.rhs);
   if (!mesh_path.empty()) {
      auto out = open_output(mesh_path);
      write_mesh_listing(out, p.mesh, &p.decomposition);
   }
   if (!coarse_path.empty()) {
      HierarchyOptions opt = hierarchy_options(c);
      opt.levels = 2;
      const auto h = PreconditionerHierarchy::build(p.system.matrix, level_dofs(p.dofs), {}, opt);
      write_matrix_market(coarse_path, h.first().coarse_matrix());
   }
   std::cerr << "exported " << p.dofs.num_dofs() << " dofs\n";
   return 0;
}

}  // namespace

int main(int argc, char** argv)
{
   CLI::App app{"Monolithic GDSW overlapping Schwarz preconditioners for Stokes"};
   app.require_subcommand(1);

   Overrides solve_o, study_o, export_o;
   std::size_t solve_row = 0, export_row = 0;
   std::string solution_path, field_path, residual_path;
   auto* solve = app.add_subcommand("solve", "run one configuration (first grid unless --row)");
   add_config_options(solve, solve_o);
   solve->add_option("--row", solve_row, "index into the grid list");
   solve->add_option("--output", solve_o.output, "row table, .csv or .json");
   solve->add_option("--solution", solution_path, "Matrix Market solution vector");
   solve->add_option("--field", field_path, "plain-text field listing");
   solve->add_option("--residuals", residual_path, "residual history CSV");

   auto* study = app.add_subcommand("study", "run every grid of a configuration");
   add_config_options(study, study_o);
   study->add_option("--output", study_o.output, "table path, .csv or .json");

   std::vector<std::string> dim_grids;
   int dim_axes = 3;
   auto* dims = app.add_subcommand("check-dims", "closed-form GDSW* and GDSW coarse dimensions");
   dims->add_option("grids", dim_grids, "grids such as 8 or 4x8x8");
   dims->add_option("--dim", dim_axes, "axes for single-number grids")->check(CLI::IsMember({2, 3}));

   std::string matrix_path, rhs_path, coarse_path, mesh_path;
   auto* exp = app.add_subcommand("export-matrix", "write the constrained system in Matrix Market format");
   add_config_options(exp, export_o);
   exp->add_option("--row", export_row, "index into the grid list");
   exp->add_option("--matrix", matrix_path, "system matrix");
   exp->add_option("--rhs", rhs_path, "right-hand side");
   exp->add_option("--coarse", coarse_path, "first coarse matrix of a two-level build");
   exp->add_option("--mesh", mesh_path, "mesh listing");

   CLI11_PARSE(app, argc, argv);

   try {
      if (*solve) return run_solve_command(solve_o, solve_row, solution_path, field_path, residual_path);
      if (*study) {
         const StudyConfig c = resolve_config(study_o);
         write_rows(c, run_study(c));
         return 0;
      }
      if (*dims) {
         if (dim_grids.empty()) dim_grids = {"8", "16", "32", "2", "4", "4x8x8"};
         std::vector<DimensionReport> reports;
         for (const auto& g : dim_grids) reports.push_back(check_dims(parse_grid_arg(g, dim_axes)));
         write_dimension_report(std::cout, reports);
         return 0;
      }
      if (*exp) return run_export_command(export_o, export_row, matrix_path, rhs_path, coarse_path, mesh_path);
   }
   catch (const Error& e) {
      std::cerr << e.kind() << ": " << e.what() << "\n";
      return 1;
   }
   catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
   }
   return 1;
}
