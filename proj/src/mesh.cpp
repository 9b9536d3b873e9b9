#include "gdsw/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "gdsw/error.hpp"

namespace gdsw {

const char* to_string(BoundaryTag tag)
{
   switch (tag) {
   case BoundaryTag::inflow: return "inflow";
   case BoundaryTag::outflow: return "outflow";
   case BoundaryTag::wall: return "wall";
   }
   return "?";
}

BoundaryRule channel_rule()
{
   return [](int axis, bool upper) {
      if (axis == 0) return upper ? BoundaryTag::outflow : BoundaryTag::inflow;
      return BoundaryTag::wall;
   };
}

AxisCounts StructuredMesh::element_ijk(int e) const
{
   return {e % cells[0], (e / cells[0]) % cells[1], e / (cells[0] * cells[1])};
}

Point StructuredMesh::cell_size() const
{
   Point h{0.0, 0.0, 0.0};
   for (int a = 0; a < dim; ++a) h[a] = lengths[a] / cells[a];
   return h;
}

Point StructuredMesh::element_centroid(int e) const
{
   Point c{0.0, 0.0, 0.0};
   const int nc = corners_per_element();
   for (int k = 0; k < nc; ++k)
      for (int a = 0; a < 3; ++a) c[a] += node_coords[elements[e][k]][a];
   for (double& v : c) v /= nc;
   return c;
}

StructuredMesh build_box_mesh(int dim, std::span<const int> cells_per_axis, std::span<const double> box_lengths,
                              const BoundaryRule& rule)
{
   if (dim != 2 && dim != 3) throw InvalidArgument("build_box_mesh: dim must be 2 or 3");
   if (cells_per_axis.size() != static_cast<std::size_t>(dim) || box_lengths.size() != static_cast<std::size_t>(dim))
      throw InvalidArgument("build_box_mesh: expected one cell count and one length per axis");
   StructuredMesh m;
   m.dim = dim;
   for (int a = 0; a < dim; ++a) {
      if (cells_per_axis[a] < 1) throw InvalidArgument("build_box_mesh: zero cell count on axis " + std::to_string(a));
      if (!(box_lengths[a] > 0.0)) throw InvalidArgument("build_box_mesh: box length must be positive");
      m.cells[a] = cells_per_axis[a];
      m.lengths[a] = box_lengths[a];
   }
   if (dim == 2) m.lengths[2] = 0.0;

   const AxisCounts np{m.cells[0] + 1, m.cells[1] + 1, dim == 3 ? m.cells[2] + 1 : 1};
   const Point h = m.cell_size();
   m.node_coords.reserve(static_cast<std::size_t>(np[0]) * np[1] * np[2]);
   for (int k = 0; k < np[2]; ++k)
      for (int j = 0; j < np[1]; ++j)
         for (int i = 0; i < np[0]; ++i) m.node_coords.push_back({i * h[0], j * h[1], k * h[2]});
   // Exact box faces regardless of round-off in i * h.
   for (auto& p : m.node_coords)
      for (int a = 0; a < dim; ++a)
         if (std::abs(p[a] - m.lengths[a]) < 1e-12 * m.lengths[a]) p[a] = m.lengths[a];

   auto node = [&](int i, int j, int k) { return i + np[0] * (j + np[1] * k); };
   const int nz = dim == 3 ? m.cells[2] : 1;
   for (int k = 0; k < nz; ++k)
      for (int j = 0; j < m.cells[1]; ++j)
         for (int i = 0; i < m.cells[0]; ++i) {
            std::array<int, 8> conn{};
            for (int c = 0; c < (1 << dim); ++c)
               conn[c] = node(i + (c & 1), j + ((c >> 1) & 1), k + (dim == 3 ? ((c >> 2) & 1) : 0));
            m.elements.push_back(conn);
         }

   for (int e = 0; e < m.element_count(); ++e) {
      const auto ijk = m.element_ijk(e);
      for (int a = 0; a < dim; ++a) {
         if (ijk[a] == 0) m.boundary_facets.push_back({e, 2 * a, rule(a, false)});
         if (ijk[a] == m.cells[a] - 1) m.boundary_facets.push_back({e, 2 * a + 1, rule(a, true)});
      }
   }
   return m;
}

std::vector<std::vector<int>> Decomposition::subdomain_elements() const
{
   std::vector<std::vector<int>> out(static_cast<std::size_t>(num_subdomains));
   for (int e = 0; e < static_cast<int>(element_to_subdomain.size()); ++e) out[element_to_subdomain[e]].push_back(e);
   return out;
}

Decomposition decompose_structured(const StructuredMesh& mesh, std::span<const int> subdomains_per_axis)
{
   if (subdomains_per_axis.size() != static_cast<std::size_t>(mesh.dim))
      throw InvalidArgument("decompose_structured: expected one subdomain count per axis");
   AxisCounts grid{1, 1, 1};
   for (int a = 0; a < mesh.dim; ++a) {
      grid[a] = subdomains_per_axis[a];
      if (grid[a] < 1 || mesh.cells[a] % grid[a] != 0)
         throw InvalidArgument("decompose_structured: " + std::to_string(grid[a]) + " subdomains do not divide " +
                               std::to_string(mesh.cells[a]) + " cells on axis " + std::to_string(a));
   }
   Decomposition d;
   d.method = DecompositionMethod::structured;
   d.subdomain_grid = grid;
   d.num_subdomains = grid[0] * grid[1] * grid[2];
   d.element_to_subdomain.resize(static_cast<std::size_t>(mesh.element_count()));
   for (int e = 0; e < mesh.element_count(); ++e) {
      const auto ijk = mesh.element_ijk(e);
      AxisCounts s{0, 0, 0};
      for (int a = 0; a < 3; ++a) s[a] = ijk[a] / (mesh.cells[a] / grid[a]);
      d.element_to_subdomain[e] = s[0] + grid[0] * (s[1] + grid[1] * s[2]);
   }
   return d;
}

namespace {

// Assigns part ids [first, first + parts) to `items` by recursive bisection of
// their points. Part ids grow with the lower halves first.
void bisect(std::vector<int>& items, const std::vector<Point>& points, int dim, int parts, int first,
            std::vector<int>& assignment)
{
   if (parts == 1) {
      for (int i : items) assignment[i] = first;
      return;
   }
   Point lo{0, 0, 0}, hi{0, 0, 0};
   for (int a = 0; a < dim; ++a) {
      lo[a] = hi[a] = points[items.front()][a];
      for (int i : items) {
         lo[a] = std::min(lo[a], points[i][a]);
         hi[a] = std::max(hi[a], points[i][a]);
      }
   }
   int axis = 0;
   for (int a = 1; a < dim; ++a)
      if (hi[a] - lo[a] > hi[axis] - lo[axis] + 1e-12 * std::max(1.0, hi[axis] - lo[axis])) axis = a;
   std::stable_sort(items.begin(), items.end(), [&](int x, int y) {
      if (points[x][axis] != points[y][axis]) return points[x][axis] < points[y][axis];
      return x < y;
   });
   const int lower_parts = parts / 2;
   const auto n = static_cast<long long>(items.size());
   const auto lower_count = static_cast<std::size_t>((n * lower_parts + parts - 1) / parts);
   std::vector<int> lower(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(lower_count));
   std::vector<int> upper(items.begin() + static_cast<std::ptrdiff_t>(lower_count), items.end());
   bisect(lower, points, dim, lower_parts, first, assignment);
   bisect(upper, points, dim, parts - lower_parts, first + lower_parts, assignment);
}

}  // namespace

Decomposition decompose_bisection(const StructuredMesh& mesh, int num_subdomains)
{
   if (num_subdomains < 1) throw InvalidArgument("decompose_bisection: need at least one subdomain");
   if (num_subdomains > mesh.element_count())
      throw InvalidArgument("decompose_bisection: " + std::to_string(num_subdomains) + " subdomains exceed " +
                            std::to_string(mesh.element_count()) + " elements");
   std::vector<Point> centroids(static_cast<std::size_t>(mesh.element_count()));
   for (int e = 0; e < mesh.element_count(); ++e) centroids[e] = mesh.element_centroid(e);
   std::vector<int> items(centroids.size());
   std::iota(items.begin(), items.end(), 0);
   Decomposition d;
   d.method = DecompositionMethod::coordinate_bisection;
   d.num_subdomains = num_subdomains;
   d.element_to_subdomain.assign(centroids.size(), -1);
   bisect(items, centroids, mesh.dim, num_subdomains, 0, d.element_to_subdomain);
   return d;
}

namespace {

void check_subregions(const SubregionMap& map)
{
   std::vector<int> count(static_cast<std::size_t>(map.num_subregions), 0);
   for (int r : map.subdomain_to_subregion) ++count[r];
   for (int r = 0; r < map.num_subregions; ++r)
      if (count[r] == 0) throw InvalidArgument("group_subregions: subregion " + std::to_string(r) + " is empty");
}

}  // namespace

SubregionMap group_subregions(const StructuredMesh& mesh, const Decomposition& decomp,
                              std::span<const int> subregions_per_axis)
{
   if (!decomp.subdomain_grid) throw InvalidArgument("group_subregions: decomposition has no subdomain grid");
   if (subregions_per_axis.size() != static_cast<std::size_t>(mesh.dim))
      throw InvalidArgument("group_subregions: expected one subregion count per axis");
   const AxisCounts grid = *decomp.subdomain_grid;
   AxisCounts sub{1, 1, 1};
   for (int a = 0; a < mesh.dim; ++a) {
      sub[a] = subregions_per_axis[a];
      if (sub[a] < 1 || grid[a] % sub[a] != 0)
         throw InvalidArgument("group_subregions: " + std::to_string(sub[a]) + " subregions do not divide " +
                               std::to_string(grid[a]) + " subdomains on axis " + std::to_string(a));
   }
   SubregionMap map;
   map.num_subregions = sub[0] * sub[1] * sub[2];
   map.subregion_grid = sub;
   map.subdomain_to_subregion.resize(static_cast<std::size_t>(decomp.num_subdomains));
   for (int s = 0; s < decomp.num_subdomains; ++s) {
      const AxisCounts ijk{s % grid[0], (s / grid[0]) % grid[1], s / (grid[0] * grid[1])};
      AxisCounts r{0, 0, 0};
      for (int a = 0; a < 3; ++a) r[a] = ijk[a] / (grid[a] / sub[a]);
      map.subdomain_to_subregion[s] = r[0] + sub[0] * (r[1] + sub[1] * r[2]);
   }
   check_subregions(map);
   return map;
}

SubregionMap group_subregions(const StructuredMesh& mesh, const Decomposition& decomp, int num_subregions)
{
   if (num_subregions < 1 || num_subregions > decomp.num_subdomains)
      throw InvalidArgument("group_subregions: subregion count must lie in [1, number of subdomains]");
   std::vector<Point> centroids(static_cast<std::size_t>(decomp.num_subdomains), Point{0, 0, 0});
   std::vector<int> count(centroids.size(), 0);
   for (int e = 0; e < mesh.element_count(); ++e) {
      const int s = decomp.element_to_subdomain[e];
      const Point c = mesh.element_centroid(e);
      for (int a = 0; a < 3; ++a) centroids[s][a] += c[a];
      ++count[s];
   }
   for (std::size_t s = 0; s < centroids.size(); ++s)
      for (double& v : centroids[s]) v /= std::max(1, count[s]);
   std::vector<int> items(centroids.size());
   std::iota(items.begin(), items.end(), 0);
   SubregionMap map;
   map.num_subregions = num_subregions;
   map.subdomain_to_subregion.assign(centroids.size(), -1);
   bisect(items, centroids, mesh.dim, num_subregions, 0, map.subdomain_to_subregion);
   check_subregions(map);
   return map;
}

std::vector<std::vector<int>> element_adjacency(const StructuredMesh& mesh)
{
   std::vector<std::vector<int>> node_elements(static_cast<std::size_t>(mesh.node_count()));
   const int nc = mesh.corners_per_element();
   for (int e = 0; e < mesh.element_count(); ++e)
      for (int c = 0; c < nc; ++c) node_elements[mesh.elements[e][c]].push_back(e);
   std::vector<std::vector<int>> adj(static_cast<std::size_t>(mesh.element_count()));
   for (int e = 0; e < mesh.element_count(); ++e) {
      for (int c = 0; c < nc; ++c)
         for (int f : node_elements[mesh.elements[e][c]])
            if (f != e) adj[e].push_back(f);
      std::sort(adj[e].begin(), adj[e].end());
      adj[e].erase(std::unique(adj[e].begin(), adj[e].end()), adj[e].end());
   }
   return adj;
}

std::vector<std::vector<int>> subdomain_adjacency(const StructuredMesh& mesh, const Decomposition& decomp)
{
   const auto adj = element_adjacency(mesh);
   std::vector<std::vector<int>> out(static_cast<std::size_t>(decomp.num_subdomains));
   for (int e = 0; e < mesh.element_count(); ++e)
      for (int f : adj[e]) {
         const int a = decomp.element_to_subdomain[e];
         const int b = decomp.element_to_subdomain[f];
         if (a != b) out[a].push_back(b);
      }
   for (auto& v : out) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
   }
   return out;
}

bool subdomains_face_connected(const StructuredMesh& mesh, const Decomposition& decomp)
{
   const auto parts = decomp.subdomain_elements();
   std::vector<int> seen(static_cast<std::size_t>(mesh.element_count()), 0);
   for (const auto& elems : parts) {
      if (elems.empty()) return false;
      std::vector<int> stack{elems.front()};
      seen[elems.front()] = 1;
      std::size_t reached = 1;
      const int sub = decomp.element_to_subdomain[elems.front()];
      while (!stack.empty()) {
         const int e = stack.back();
         stack.pop_back();
         const auto ijk = mesh.element_ijk(e);
         for (int a = 0; a < mesh.dim; ++a)
            for (int step : {-1, 1}) {
               AxisCounts n = ijk;
               n[a] += step;
               if (n[a] < 0 || n[a] >= mesh.cells[a]) continue;
               const int f = mesh.element_index(n);
               if (!seen[f] && decomp.element_to_subdomain[f] == sub) {
                  seen[f] = 1;
                  ++reached;
                  stack.push_back(f);
               }
            }
      }
      if (reached != elems.size()) return false;
   }
   return true;
}

void write_mesh_listing(std::ostream& out, const StructuredMesh& mesh, const Decomposition* decomp)
{
   out << "# structured mesh listing\n";
   out << "# dim " << mesh.dim << " cells";
   for (int a = 0; a < mesh.dim; ++a) out << ' ' << mesh.cells[a];
   out << " nodes " << mesh.node_count() << " elements " << mesh.element_count() << " facets "
       << mesh.boundary_facets.size() << '\n';
   out << "# node <id> <x> <y> <z>\n";
   out << "# element <id> <subdomain|-1> <corner node ids...>\n";
   out << "# facet <element> <local facet> <inflow|outflow|wall>\n";
   for (int n = 0; n < mesh.node_count(); ++n) {
      const auto& p = mesh.node_coords[n];
      out << "node " << n << ' ' << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
   }
   for (int e = 0; e < mesh.element_count(); ++e) {
      out << "element " << e << ' ' << (decomp ? decomp->element_to_subdomain[e] : -1);
      for (int c = 0; c < mesh.corners_per_element(); ++c) out << ' ' << mesh.elements[e][c];
      out << '\n';
   }
   for (const auto& f : mesh.boundary_facets)
      out << "facet " << f.element << ' ' << f.local_facet << ' ' << to_string(f.tag) << '\n';
}

}  // namespace gdsw
