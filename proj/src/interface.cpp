#include <algorithm>
#include <map>
#include <string>

#include "gdsw/error.hpp"
#include "gdsw/schwarz.hpp"

namespace gdsw {

const char* to_string(EntityKind kind)
{
   switch (kind) {
   case EntityKind::vertex: return "vertex";
   case EntityKind::edge: return "edge";
   case EntityKind::face: return "face";
   case EntityKind::merged_vertex_group: return "merged_vertex_group";
   case EntityKind::pressure_subdomain: return "pressure_subdomain";
   }
   return "?";
}

const char* to_string(Flavor flavor) { return flavor == Flavor::gdsw ? "gdsw" : "gdsw_star"; }

Flavor parse_flavor(const std::string& name)
{
   if (name == "gdsw" || name == "GDSW") return Flavor::gdsw;
   if (name == "gdsw_star" || name == "gdsw*" || name == "GDSW*" || name == "GDSW_star") return Flavor::gdsw_star;
   throw InvalidArgument("unknown coarse space flavor '" + name + "'");
}

const char* to_string(Extension extension)
{
   return extension == Extension::velocity_block ? "velocity_block" : "saddle_zero_mean";
}

Extension parse_extension(const std::string& name)
{
   if (name == "velocity_block" || name == "velocity") return Extension::velocity_block;
   if (name == "saddle_zero_mean" || name == "saddle") return Extension::saddle_zero_mean;
   throw InvalidArgument("unknown extension '" + name + "'");
}

void LevelDofs::validate() const
{
   const auto n = dof_kind.size();
   if (dof_to_subdomains.size() != n || dirichlet.size() != n || pressure_null.size() != n)
      throw InvalidArgument("LevelDofs: per-dof arrays differ in length");
   if (dim != 2 && dim != 3) throw InvalidArgument("LevelDofs: dim must be 2 or 3");
   for (std::size_t i = 0; i < n; ++i) {
      const auto& s = dof_to_subdomains[i];
      if (s.empty()) throw InvalidArgument("LevelDofs: dof " + std::to_string(i) + " belongs to no subdomain");
      if (!std::is_sorted(s.begin(), s.end()) || s.front() < 0 || s.back() >= num_subdomains)
         throw InvalidArgument("LevelDofs: bad subdomain set of dof " + std::to_string(i));
      if (dof_kind[i] == kPressureKind && dirichlet[i])
         throw InvalidArgument("LevelDofs: pressure dof marked Dirichlet");
      if (dof_kind[i] != kPressureKind && (dof_kind[i] < 0 || dof_kind[i] >= dim))
         throw InvalidArgument("LevelDofs: bad dof kind");
   }
}

LevelDofs level_dofs(const DofMap& dm)
{
   LevelDofs d;
   d.dim = dm.dim;
   d.num_subdomains = dm.num_subdomains;
   d.dof_kind = dm.dof_kind;
   d.dof_to_subdomains = dm.dof_to_subdomains;
   d.dirichlet = dm.dirichlet;
   d.pressure_null = dm.constant_pressure();
   return d;
}

std::vector<InterfaceEntity> classify_interface(const LevelDofs& dofs)
{
   std::map<std::vector<int>, int> by_set;
   std::vector<InterfaceEntity> geometric;
   for (int i = 0; i < dofs.size(); ++i) {
      if (dofs.dof_kind[i] == kPressureKind || dofs.dirichlet[i] || dofs.dof_to_subdomains[i].size() < 2) continue;
      const auto& s = dofs.dof_to_subdomains[i];
      auto [it, inserted] = by_set.try_emplace(s, static_cast<int>(geometric.size()));
      if (inserted) geometric.push_back({EntityKind::face, {}, s});
      geometric[it->second].dofs.push_back(i);
   }

   for (auto& e : geometric) {
      const auto m = e.sharing_set.size();
      if (m == 2) {
         e.kind = dofs.dim == 3 ? EntityKind::face : EntityKind::edge;
         continue;
      }
      if (dofs.dim == 2) {
         e.kind = EntityKind::vertex;
         continue;
      }
      bool maximal = true;
      for (const auto& other : geometric)
         if (other.sharing_set.size() > m &&
             std::includes(other.sharing_set.begin(), other.sharing_set.end(), e.sharing_set.begin(),
                           e.sharing_set.end())) {
            maximal = false;
            break;
         }
      e.kind = maximal ? EntityKind::vertex : EntityKind::edge;
   }

   std::vector<std::vector<int>> pressure(static_cast<std::size_t>(dofs.num_subdomains));
   for (int i = 0; i < dofs.size(); ++i)
      if (dofs.dof_kind[i] == kPressureKind) {
         if (dofs.dof_to_subdomains[i].size() != 1)
            throw InvalidArgument("classify_interface: pressure dof " + std::to_string(i) +
                                  " must belong to exactly one subdomain");
         pressure[dofs.dof_to_subdomains[i].front()].push_back(i);
      }
   for (int s = 0; s < dofs.num_subdomains; ++s)
      if (!pressure[s].empty()) geometric.push_back({EntityKind::pressure_subdomain, std::move(pressure[s]), {s}});
   return geometric;
}

std::vector<InterfaceEntity> merge_gdsw_star(const std::vector<InterfaceEntity>& entities)
{
   const int n = static_cast<int>(entities.size());
   // owner[e] = vertex entity absorbing edge e, -1 when e keeps its identity.
   std::vector<int> owner(static_cast<std::size_t>(n), -1);
   for (int e = 0; e < n; ++e) {
      if (entities[e].kind != EntityKind::edge) continue;
      for (int v = 0; v < n; ++v) {
         if (entities[v].kind != EntityKind::vertex) continue;
         const auto& vs = entities[v].sharing_set;
         const auto& es = entities[e].sharing_set;
         if (std::includes(vs.begin(), vs.end(), es.begin(), es.end())) {
            owner[e] = v;
            break;
         }
      }
   }
   std::vector<InterfaceEntity> out;
   std::vector<int> position(static_cast<std::size_t>(n), -1);
   for (int e = 0; e < n; ++e) {
      if (owner[e] >= 0) continue;
      position[e] = static_cast<int>(out.size());
      out.push_back(entities[e]);
      if (entities[e].kind == EntityKind::vertex) out.back().kind = EntityKind::merged_vertex_group;
   }
   for (int e = 0; e < n; ++e) {
      if (owner[e] < 0) continue;
      auto& group = out[position[owner[e]]];
      group.dofs.insert(group.dofs.end(), entities[e].dofs.begin(), entities[e].dofs.end());
      std::vector<int> merged;
      std::set_union(group.sharing_set.begin(), group.sharing_set.end(), entities[e].sharing_set.begin(),
                     entities[e].sharing_set.end(), std::back_inserter(merged));
      group.sharing_set = std::move(merged);
   }
   for (auto& e : out) std::sort(e.dofs.begin(), e.dofs.end());
   return out;
}

EntityCounts count_entities(const std::vector<InterfaceEntity>& entities)
{
   EntityCounts c;
   for (const auto& e : entities) switch (e.kind) {
      case EntityKind::vertex: ++c.vertices; break;
      case EntityKind::edge: ++c.edges; break;
      case EntityKind::face: ++c.faces; break;
      case EntityKind::merged_vertex_group: ++c.merged; break;
      case EntityKind::pressure_subdomain: ++c.pressure; break;
      }
   return c;
}

PhiGamma build_phi_gamma(const std::vector<InterfaceEntity>& entities, const LevelDofs& dofs)
{
   PhiGamma pg;
   std::vector<Triplet> trip;
   for (int e = 0; e < static_cast<int>(entities.size()); ++e) {
      const auto& ent = entities[e];
      if (ent.kind == EntityKind::pressure_subdomain) continue;
      for (int c = 0; c < dofs.dim; ++c) {
         const int col = static_cast<int>(pg.columns.size());
         bool any = false;
         for (int i : ent.dofs)
            if (dofs.dof_kind[i] == c) {
               trip.push_back({i, col, 1.0});
               any = true;
            }
         if (any) pg.columns.push_back({e, c, ent.sharing_set});
      }
   }
   pg.matrix = CsrMatrix::from_triplets(dofs.size(), static_cast<int>(pg.columns.size()), std::move(trip));
   return pg;
}

namespace {

struct GridCounts {
   std::int64_t vertices = 0, edges = 0, faces = 0, subdomains = 1;
   int dim = 0;
};

GridCounts grid_counts(std::span<const int> grid)
{
   if (grid.size() != 2 && grid.size() != 3) throw InvalidArgument("coarse dimension: grid must have 2 or 3 axes");
   GridCounts g;
   g.dim = static_cast<int>(grid.size());
   for (int m : grid) {
      if (m < 1) throw InvalidArgument("coarse dimension: subdomain counts must be positive");
      g.subdomains *= m;
   }
   std::int64_t v = 1;
   for (int m : grid) v *= (m - 1);
   g.vertices = v;
   if (g.dim == 3) {
      for (int a = 0; a < 3; ++a) {
         std::int64_t e = grid[a], f = grid[a] - 1;
         for (int b = 0; b < 3; ++b)
            if (b != a) {
               e *= (grid[b] - 1);
               f *= grid[b];
            }
         g.edges += e;
         g.faces += f;
      }
   }
   else {
      // Interface edges are the two-subdomain segments.
      g.edges = static_cast<std::int64_t>(grid[0] - 1) * grid[1] + static_cast<std::int64_t>(grid[0]) * (grid[1] - 1);
   }
   return g;
}

}  // namespace

std::int64_t gdsw_star_dimension(std::span<const int> grid)
{
   const auto g = grid_counts(grid);
   return g.dim * (g.vertices + g.faces) + g.subdomains;
}

std::int64_t gdsw_dimension(std::span<const int> grid)
{
   const auto g = grid_counts(grid);
   return g.dim * (g.vertices + g.edges + g.faces) + g.subdomains;
}

}  // namespace gdsw
