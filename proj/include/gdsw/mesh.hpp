#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace gdsw {

using Point = std::array<double, 3>;
using AxisCounts = std::array<int, 3>;

enum class BoundaryTag { inflow, outflow, wall };

const char* to_string(BoundaryTag tag);

/// Local facet f of an element lies on axis f / 2, at the lower (f % 2 == 0)
/// or upper side of the cell.
struct BoundaryFacet {
   int element;
   int local_facet;
   BoundaryTag tag;
};

/// Decides the tag of a boundary facet from its axis and side of the box.
using BoundaryRule = std::function<BoundaryTag(int axis, bool upper_side)>;

/// x = 0 inflow, x = L1 outflow, all other sides no-slip walls.
BoundaryRule channel_rule();

/// Axis-aligned box mesh with lexicographic numbering (x fastest). Unused
/// axes in 2D carry a cell count of 1 and are ignored.
struct StructuredMesh {
   int dim = 3;
   AxisCounts cells{1, 1, 1};
   Point lengths{1.0, 1.0, 1.0};
   std::vector<Point> node_coords;
   std::vector<std::array<int, 8>> elements;  ///< corner nodes, local corner c has x bit 0, y bit 1, z bit 2
   std::vector<BoundaryFacet> boundary_facets;

   int node_count() const { return static_cast<int>(node_coords.size()); }
   int element_count() const { return static_cast<int>(elements.size()); }
   int corners_per_element() const { return 1 << dim; }

   int element_index(const AxisCounts& ijk) const { return ijk[0] + cells[0] * (ijk[1] + cells[1] * ijk[2]); }
   AxisCounts element_ijk(int e) const;
   Point cell_size() const;
   Point element_centroid(int e) const;
};

/// Throws InvalidArgument on a bad dimension or zero cell count.
StructuredMesh build_box_mesh(int dim, std::span<const int> cells_per_axis, std::span<const double> box_lengths,
                              const BoundaryRule& rule);

enum class DecompositionMethod { structured, coordinate_bisection };

struct Decomposition {
   int num_subdomains = 0;
   std::vector<int> element_to_subdomain;
   std::optional<AxisCounts> subdomain_grid;
   DecompositionMethod method = DecompositionMethod::structured;

   std::vector<std::vector<int>> subdomain_elements() const;
};

Decomposition decompose_structured(const StructuredMesh& mesh, std::span<const int> subdomains_per_axis);

/// Recursive coordinate bisection of element centroids. Splits along the
/// longest extent (lowest axis on ties); the median goes to the lower part.
Decomposition decompose_bisection(const StructuredMesh& mesh, int num_subdomains);

struct SubregionMap {
   int num_subregions = 0;
   std::vector<int> subdomain_to_subregion;
   std::optional<AxisCounts> subregion_grid;
};

/// Groups blocks of a structured subdomain grid.
SubregionMap group_subregions(const StructuredMesh& mesh, const Decomposition& decomp,
                              std::span<const int> subregions_per_axis);
/// Groups subdomains by coordinate bisection of their centroids.
SubregionMap group_subregions(const StructuredMesh& mesh, const Decomposition& decomp, int num_subregions);

/// Elements are adjacent iff they share at least one node. Sorted lists.
std::vector<std::vector<int>> element_adjacency(const StructuredMesh& mesh);

/// Subdomain adjacency induced by element adjacency.
std::vector<std::vector<int>> subdomain_adjacency(const StructuredMesh& mesh, const Decomposition& decomp);

/// True when each subdomain's element set is face-connected.
bool subdomains_face_connected(const StructuredMesh& mesh, const Decomposition& decomp);

/// Plain-text listing: '#' header lines, then "node", "element" and "facet"
/// records, one per line.
void write_mesh_listing(std::ostream& out, const StructuredMesh& mesh, const Decomposition* decomp = nullptr);

}  // namespace gdsw
