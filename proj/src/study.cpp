#include "gdsw/study.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gdsw/error.hpp"
#include "json.hpp"

namespace gdsw {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int product(const std::vector<int>& grid) { return std::accumulate(grid.begin(), grid.end(), 1, std::multiplies<>()); }

std::string grid_string(const std::vector<int>& grid)
{
   std::string s;
   for (std::size_t i = 0; i < grid.size(); ++i) s += (i ? "x" : "") + std::to_string(grid[i]);
   return s;
}

// A grid is either a list of per-axis counts or a single integer m meaning m per axis.
std::vector<int> parse_grid(const json& j, int dim)
{
   if (j.is_number_integer()) return std::vector<int>(static_cast<std::size_t>(dim), j.get<int>());
   if (!j.is_array()) throw ParseError("study config: a grid must be an integer or an array of integers");
   std::vector<int> g;
   for (const auto& e : j) {
      if (!e.is_number_integer()) throw ParseError("study config: grid entries must be integers");
      g.push_back(e.get<int>());
   }
   return g;
}

VectorField dirichlet_data(const StudyConfig& config)
{
   if (config.problem == ProblemKind::cube3d) return cube_inflow_profile(config.inflow_constant);
   return poiseuille_2d(config.inflow_constant, config.viscosity).velocity;
}

json diagnostics_json(const LevelDiagnostics& d)
{
   return json{{"level", d.level},
               {"dofs", d.num_dofs},
               {"subdomains", d.num_subdomains},
               {"overlap_min", d.overlap_min},
               {"overlap_max", d.overlap_max},
               {"overlap_avg", d.overlap_avg},
               {"local_fill", d.local_fill},
               {"coarse_dim", d.coarse_dim},
               {"coarse_fill", d.coarse_fill},
               {"vertices", d.entities.vertices},
               {"edges", d.entities.edges},
               {"faces", d.entities.faces},
               {"merged", d.entities.merged},
               {"pressure_entities", d.entities.pressure},
               {"bordered_subdomains", d.bordered_subdomains},
               {"shifted_local_solves", d.shifted_local_solves},
               {"t_symbolic", d.t_symbolic},
               {"t_numeric", d.t_numeric}};
}

}  // namespace

const char* to_string(ProblemKind kind) { return kind == ProblemKind::cube3d ? "cube3d" : "channel2d"; }

ProblemKind parse_problem(const std::string& name)
{
   if (name == "cube3d") return ProblemKind::cube3d;
   if (name == "channel2d") return ProblemKind::channel2d;
   throw InvalidArgument("unknown problem '" + name + "' (expected cube3d or channel2d)");
}

void StudyConfig::validate() const
{
   if (cells_per_subdomain < 1) throw InvalidArgument("study config: cells_per_subdomain must be positive");
   if (levels < 1 || levels > 3) throw InvalidArgument("study config: levels must be 1, 2 or 3");
   if (decomposition != "structured" && decomposition != "bisection")
      throw InvalidArgument("study config: decomposition must be 'structured' or 'bisection'");
   if (!(viscosity > 0.0)) throw InvalidArgument("study config: viscosity must be positive");
   if (!(tol_rel > 0.0 && tol_rel < 1.0)) throw InvalidArgument("study config: tol_rel must lie in (0, 1)");
   if (max_iterations < 1) throw InvalidArgument("study config: max_iterations must be at least 1");
   if (restart < 0) throw InvalidArgument("study config: restart must be nonnegative");
   if (coarse_cap < 1) throw InvalidArgument("study config: coarse_cap must be positive");
   if (workers < 1) throw InvalidArgument("study config: workers must be at least 1");
   for (int k : overlaps)
      if (k < 0) throw InvalidArgument("study config: overlaps must be nonnegative");
   for (const auto& g : subdomain_grids) {
      if (static_cast<int>(g.size()) != dim())
         throw InvalidArgument("study config: subdomain grid " + grid_string(g) + " does not have " +
                               std::to_string(dim()) + " axes");
      for (int m : g)
         if (m < 1) throw InvalidArgument("study config: subdomain counts must be positive");
   }
   if (levels >= 3) {
      if (subregion_grids.size() != subdomain_grids.size())
         throw InvalidArgument("study config: three levels need one subregion grid per subdomain grid");
      for (std::size_t r = 0; r < subregion_grids.size(); ++r) {
         const auto& sg = subregion_grids[r];
         const auto& g = subdomain_grids[r];
         if (sg.size() != g.size())
            throw InvalidArgument("study config: subregion grid " + grid_string(sg) + " does not match the axes of " +
                                  grid_string(g));
         for (std::size_t a = 0; a < sg.size(); ++a) {
            if (sg[a] < 1) throw InvalidArgument("study config: subregion counts must be positive");
            if (decomposition == "structured" && g[a] % sg[a] != 0)
               throw InvalidArgument("study config: subregion grid " + grid_string(sg) + " does not divide " +
                                     grid_string(g));
         }
         if (product(sg) > product(g))
            throw InvalidArgument("study config: more subregions than subdomains in row " + std::to_string(r));
      }
   }
}

StudyConfig parse_study_config(const std::string& json_text)
{
   json j;
   try {
      j = json::parse(json_text);
   }
   catch (const json::parse_error& e) {
      throw ParseError(std::string("study config: ") + e.what());
   }
   if (!j.is_object()) throw ParseError("study config: top level must be an object");

   StudyConfig c;
   try {
      if (j.contains("problem")) c.problem = parse_problem(j.at("problem").get<std::string>());
      const int dim = c.dim();
      for (auto it = j.begin(); it != j.end(); ++it) {
         const std::string& key = it.key();
         const json& v = it.value();
         if (key == "problem") continue;
         if (key == "cells_per_subdomain") c.cells_per_subdomain = v.get<int>();
         else if (key == "subdomain_grids") {
            c.subdomain_grids.clear();
            for (const auto& g : v) c.subdomain_grids.push_back(parse_grid(g, dim));
         }
         else if (key == "subregion_grids") {
            c.subregion_grids.clear();
            for (const auto& g : v) c.subregion_grids.push_back(parse_grid(g, dim));
         }
         else if (key == "decomposition") c.decomposition = v.get<std::string>();
         else if (key == "levels") c.levels = v.get<int>();
         else if (key == "flavors") {
            c.flavors.clear();
            for (const auto& f : v) c.flavors.push_back(parse_flavor(f.get<std::string>()));
         }
         else if (key == "overlaps") c.overlaps = v.get<std::vector<int>>();
         else if (key == "extension") c.extension = parse_extension(v.get<std::string>());
         else if (key == "viscosity") c.viscosity = v.get<double>();
         else if (key == "inflow_constant") c.inflow_constant = v.get<double>();
         else if (key == "tol_rel") c.tol_rel = v.get<double>();
         else if (key == "max_iterations") c.max_iterations = v.get<int>();
         else if (key == "restart") c.restart = v.get<int>();
         else if (key == "coarse_cap") c.coarse_cap = v.get<int>();
         else if (key == "workers") c.workers = v.get<int>();
         else if (key == "output") c.output = v.get<std::string>();
         else throw ParseError("study config: unknown key '" + key + "'");
      }
   }
   catch (const json::exception& e) {
      throw ParseError(std::string("study config: ") + e.what());
   }
   c.validate();
   return c;
}

StudyConfig load_study_config(const std::string& path)
{
   std::ifstream in(path);
   if (!in) throw InvalidArgument("cannot open study config '" + path + "'");
   std::stringstream ss;
   ss << in.rdbuf();
   return parse_study_config(ss.str());
}

std::string study_config_to_json(const StudyConfig& c)
{
   json flavors = json::array();
   for (Flavor f : c.flavors) flavors.push_back(to_string(f));
   json j{{"problem", to_string(c.problem)},
          {"cells_per_subdomain", c.cells_per_subdomain},
          {"subdomain_grids", c.subdomain_grids},
          {"subregion_grids", c.subregion_grids},
          {"decomposition", c.decomposition},
          {"levels", c.levels},
          {"flavors", flavors},
          {"overlaps", c.overlaps},
          {"extension", to_string(c.extension)},
          {"viscosity", c.viscosity},
          {"inflow_constant", c.inflow_constant},
          {"tol_rel", c.tol_rel},
          {"max_iterations", c.max_iterations},
          {"restart", c.restart},
          {"coarse_cap", c.coarse_cap},
          {"workers", c.workers},
          {"output", c.output}};
   return j.dump(2);
}

ProblemInstance build_problem(const StudyConfig& config, std::size_t row)
{
   config.validate();
   if (row >= config.subdomain_grids.size()) throw InvalidArgument("study: no subdomain grid for row " + std::to_string(row));
   const auto& grid = config.subdomain_grids[row];
   const int dim = config.dim();

   ProblemInstance p;
   std::vector<int> cells(grid.begin(), grid.end());
   for (int& n : cells) n *= config.cells_per_subdomain;
   const std::vector<double> lengths(static_cast<std::size_t>(dim), 1.0);
   p.mesh = build_box_mesh(dim, cells, lengths, channel_rule());
   p.decomposition = config.decomposition == "structured" ? decompose_structured(p.mesh, grid)
                                                          : decompose_bisection(p.mesh, product(grid));
   if (config.levels >= 3) {
      const auto& sg = config.subregion_grids[row];
      p.subregions = config.decomposition == "structured" ? group_subregions(p.mesh, p.decomposition, sg)
                                                          : group_subregions(p.mesh, p.decomposition, product(sg));
   }
   p.dofs = build_dofmap(p.mesh, p.decomposition);

   ProblemConfig pc;
   pc.viscosity = config.viscosity;
   pc.inflow_constant = config.inflow_constant;
   pc.tol_rel = config.tol_rel;
   pc.max_iterations = config.max_iterations;
   auto [raw, raw_rhs] = assemble_stokes(p.mesh, p.dofs, pc);
   auto [system, rhs] = apply_dirichlet(raw, raw_rhs, p.dofs, dirichlet_data(config));
   p.system = std::move(system);
   p.rhs = std::move(rhs);
   return p;
}

HierarchyOptions hierarchy_options(const StudyConfig& config)
{
   HierarchyOptions o;
   o.levels = config.levels;
   o.overlaps = config.overlaps;
   o.flavors = config.flavors;
   o.extension = config.extension;
   o.coarse_cap = config.coarse_cap;
   o.workers = config.workers;
   return o;
}

std::vector<std::vector<int>> hierarchy_groupings(const ProblemInstance& problem)
{
   if (!problem.subregions) return {};
   return {problem.subregions->subdomain_to_subregion};
}

SolveOutcome run_solve(const StudyConfig& config, std::size_t row)
{
   SolveOutcome out;
   StudyRow& r = out.row;
   ProblemInstance p = build_problem(config, row);
   r.dofs = p.dofs.num_dofs();
   r.subdomains = p.decomposition.num_subdomains;
   r.subregions = p.subregions ? p.subregions->num_subregions : 0;

   const HierarchyOptions opt = hierarchy_options(config);
   try {
      const auto hierarchy =
          PreconditionerHierarchy::build(p.system.matrix, level_dofs(p.dofs), hierarchy_groupings(p), opt);
      const auto diag = hierarchy.diagnostics();
      r.levels = diag;
      r.coarse_dofs_l2 = diag[0].coarse_dim;
      if (diag.size() >= 2) r.coarse_dofs_l3 = diag[1].coarse_dim;
      r.t_symbolic = hierarchy.t_symbolic();
      r.t_numeric = hierarchy.t_numeric();

      const CsrMatrix& a = p.system.matrix;
      const LinearOperator op = [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
      const LinearOperator prec = [&hierarchy](std::span<const double> x, std::span<double> y) {
         hierarchy.apply(x, y);
      };
      KrylovConfig kc;
      kc.tol_rel = config.tol_rel;
      kc.max_iterations = config.max_iterations;
      kc.restart = config.restart;
      const std::vector<double> x0(p.rhs.size(), 0.0);
      const auto t0 = Clock::now();
      out.report = fgmres(op, prec, p.rhs, x0, kc);
      r.t_solve = seconds_since(t0);
      r.iterations = out.report.iterations;
      r.converged = out.report.converged;
      r.final_residual = out.report.final_true_residual;
   }
   catch (const CoarseTooLarge& e) {
      r.error = e.kind();
      r.error_message = e.what();
      const int terminal = config.levels;
      if (terminal == 2) r.coarse_dofs_l2 = e.order();
      if (terminal == 3) {
         r.coarse_dofs_l3 = e.order();
         if (config.decomposition == "structured") {
            const auto& g = config.subdomain_grids[row];
            r.coarse_dofs_l2 =
                opt.flavor(1) == Flavor::gdsw_star ? gdsw_star_dimension(g) : gdsw_dimension(g);
         }
      }
   }
   catch (const Error& e) {
      r.error = e.kind();
      r.error_message = e.what();
   }
   out.mesh = std::move(p.mesh);
   out.decomposition = std::move(p.decomposition);
   out.dofs = std::move(p.dofs);
   out.system = std::move(p.system);
   out.rhs = std::move(p.rhs);
   return out;
}

std::vector<StudyRow> run_study(const StudyConfig& config)
{
   config.validate();
   std::vector<StudyRow> rows;
   for (std::size_t i = 0; i < config.subdomain_grids.size(); ++i) {
      try {
         rows.push_back(run_solve(config, i).row);
      }
      catch (const Error& e) {
         StudyRow r;
         r.subdomains = product(config.subdomain_grids[i]);
         r.error = e.kind();
         r.error_message = e.what();
         rows.push_back(std::move(r));
      }
   }
   return rows;
}

void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows)
{
   out << "dofs,subdomains,subregions,coarse_dofs_l2,coarse_dofs_l3,t_symbolic,t_numeric,t_solve,iterations,converged\n";
   for (const auto& r : rows) {
      out << r.dofs << ',' << r.subdomains << ',' << r.subregions << ',' << r.coarse_dofs_l2 << ','
          << r.coarse_dofs_l3 << ',';
      if (r.error.empty())
         out << r.t_symbolic << ',' << r.t_numeric << ',' << r.t_solve << ',' << r.iterations << ','
             << (r.converged ? "true" : "false") << '\n';
      else
         out << r.error << ',' << r.error << ',' << r.error << ',' << r.error << ",false\n";
   }
}

void write_study_json(std::ostream& out, const StudyConfig& config, const std::vector<StudyRow>& rows)
{
   json table = json::array();
   for (const auto& r : rows) {
      json row{{"dofs", r.dofs},
               {"subdomains", r.subdomains},
               {"subregions", r.subregions},
               {"coarse_dofs_l2", r.coarse_dofs_l2},
               {"coarse_dofs_l3", r.coarse_dofs_l3},
               {"converged", r.converged}};
      if (r.error.empty()) {
         row["t_symbolic"] = r.t_symbolic;
         row["t_numeric"] = r.t_numeric;
         row["t_solve"] = r.t_solve;
         row["iterations"] = r.iterations;
         row["final_residual"] = r.final_residual;
      }
      else {
         row["error"] = r.error;
         row["error_message"] = r.error_message;
      }
      json levels = json::array();
      for (const auto& d : r.levels) levels.push_back(diagnostics_json(d));
      row["levels"] = levels;
      table.push_back(std::move(row));
   }
   json doc{{"config", json::parse(study_config_to_json(config))}, {"rows", table}};
   out << doc.dump(2) << '\n';
}

DimensionReport check_dims(const std::vector<int>& grid)
{
   DimensionReport r;
   r.grid = grid;
   r.gdsw_star = gdsw_star_dimension(grid);
   r.gdsw = gdsw_dimension(grid);
   return r;
}

void write_dimension_report(std::ostream& out, const std::vector<DimensionReport>& reports)
{
   out << "grid,gdsw_star,gdsw\n";
   for (const auto& r : reports) out << grid_string(r.grid) << ',' << r.gdsw_star << ',' << r.gdsw << '\n';
}

}  // namespace gdsw
