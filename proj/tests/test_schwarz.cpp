#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "gdsw/error.hpp"
#include "gdsw/fem.hpp"
#include "gdsw/schwarz.hpp"

using namespace gdsw;

namespace {

struct Built {
   StructuredMesh mesh;
   Decomposition decomp;
   DofMap dofs;
   CsrMatrix unconstrained;
   CsrMatrix a;
   LevelDofs level;
};

// Unit box, Stokes with channel boundary data; cells = parts * h_ratio.
Built make(std::vector<int> parts, int h_ratio, bool assemble = true)
{
   Built b;
   const int dim = static_cast<int>(parts.size());
   std::vector<int> cells;
   for (int p : parts) cells.push_back(p * h_ratio);
   const std::vector<double> lengths(parts.size(), 1.0);
   b.mesh = build_box_mesh(dim, cells, lengths, channel_rule());
   b.decomp = decompose_structured(b.mesh, parts);
   b.dofs = build_dofmap(b.mesh, b.decomp);
   b.level = level_dofs(b.dofs);
   if (!assemble) return b;
   auto [sys, rhs] = assemble_stokes(b.mesh, b.dofs, ProblemConfig{});
   const VectorField g = dim == 2 ? poiseuille_2d(1.0, 1.0).velocity : cube_inflow_profile(1.0);
   b.unconstrained = sys.matrix;
   b.a = apply_dirichlet(sys, rhs, b.dofs, g).first.matrix;
   return b;
}

struct LatticeCounts {
   int v = 0, e = 0, f = 0;
};

// Enumerates interior vertices, edges and faces of an m^3 box lattice.
LatticeCounts lattice(int m)
{
   LatticeCounts c;
   for (int i = 1; i < m; ++i)
      for (int j = 1; j < m; ++j)
         for (int k = 1; k < m; ++k) ++c.v;
   for (int axis = 0; axis < 3; ++axis) {
      for (int s = 0; s < m; ++s)
         for (int i = 1; i < m; ++i)
            for (int j = 1; j < m; ++j) ++c.e;
      for (int s = 1; s < m; ++s)
         for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) ++c.f;
   }
   return c;
}

std::int64_t constructive_dimension(const LevelDofs& ld, Flavor flavor)
{
   auto entities = classify_interface(ld);
   if (flavor == Flavor::gdsw_star) entities = merge_gdsw_star(entities);
   const PhiGamma pg = build_phi_gamma(entities, ld);
   return static_cast<std::int64_t>(pg.columns.size()) + count_entities(entities).pressure;
}

Eigen::MatrixXd dense(const CsrMatrix& a)
{
   Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.cols());
   for (int r = 0; r < a.rows(); ++r) {
      const auto c = a.row_cols(r);
      const auto v = a.row_values(r);
      for (std::size_t k = 0; k < c.size(); ++k) d(r, c[k]) += v[k];
   }
   return d;
}

// Phi A0^{-1} Phi^T + sum_i R_i^T A_i^{-1} R_i, assembled densely.
Eigen::MatrixXd dense_two_level(const Eigen::MatrixXd& a, const SchwarzLevel& level)
{
   const Eigen::Index n = a.rows();
   Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
   for (const auto& set : level.overlapping_sets()) {
      const auto ns = static_cast<Eigen::Index>(set.size());
      Eigen::MatrixXd ai(ns, ns);
      for (Eigen::Index i = 0; i < ns; ++i)
         for (Eigen::Index j = 0; j < ns; ++j) ai(i, j) = a(set[i], set[j]);
      const Eigen::MatrixXd inv = ai.partialPivLu().inverse();
      for (Eigen::Index i = 0; i < ns; ++i)
         for (Eigen::Index j = 0; j < ns; ++j) m(set[i], set[j]) += inv(i, j);
   }
   if (level.has_coarse()) {
      const Eigen::MatrixXd phi = dense(level.coarse_basis().phi);
      const Eigen::MatrixXd a0 = phi.transpose() * a * phi;
      m += phi * a0.partialPivLu().solve(phi.transpose());
   }
   return m;
}

std::vector<double> random_vector(int n, std::mt19937& rng, const std::vector<char>* zero_on = nullptr)
{
   std::uniform_real_distribution<double> u(-1.0, 1.0);
   std::vector<double> v(static_cast<std::size_t>(n));
   for (int i = 0; i < n; ++i) v[i] = (zero_on && (*zero_on)[i]) ? 0.0 : u(rng);
   return v;
}

double dot(std::span<const double> a, std::span<const double> b)
{
   double s = 0.0;
   for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
   return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

HierarchyOptions options(int levels, Flavor flavor, int overlap)
{
   HierarchyOptions o;
   o.levels = levels;
   o.flavors = {flavor};
   o.overlaps = {overlap};
   return o;
}

}  // namespace

TEST_CASE("closed-form coarse dimensions")
{
   CHECK(gdsw_star_dimension(std::vector<int>{8, 8, 8}) == 5573);
   CHECK(gdsw_star_dimension(std::vector<int>{16, 16, 16}) == 48781);
   CHECK(gdsw_star_dimension(std::vector<int>{32, 32, 32}) == 407837);
   CHECK(gdsw_dimension(std::vector<int>{2, 2, 2}) == 65);
   CHECK(gdsw_dimension(std::vector<int>{4, 4, 4}) == 901);
   CHECK(gdsw_dimension(std::vector<int>{4, 8, 8}) == 4213);
   CHECK(gdsw_dimension(std::vector<int>{16, 16, 16}) == 3 * (3375 + 3 * 16 * 225 + 3 * 256 * 15) + 4096);
}

TEST_CASE("interface entities")
{
   SUBCASE("one subdomain")
   {
      const auto b = make({1, 1, 1}, 2, false);
      const auto c = count_entities(classify_interface(b.level));
      CHECK(c.vertices + c.edges + c.faces + c.merged == 0);
      CHECK(c.pressure == 1);
   }
   SUBCASE("two boxes")
   {
      const auto b = make({1, 1, 2}, 2, false);
      const auto ent = classify_interface(b.level);
      const auto c = count_entities(ent);
      CHECK(c.faces == 1);
      CHECK(c.vertices + c.edges + c.merged == 0);
      CHECK(c.pressure == 2);

      const PhiGamma pg = build_phi_gamma(ent, b.level);
      CHECK(pg.columns.size() == 3);
      int interface_dofs = 0;
      for (int i = 0; i < b.level.size(); ++i)
         if (b.level.dof_kind[i] != kPressureKind && !b.level.dirichlet[i] && b.level.dof_to_subdomains[i].size() > 1)
            ++interface_dofs;
      CHECK(pg.matrix.nnz() == interface_dofs);
      // each column carries one component of the face
      const auto pt = pg.matrix.transpose();
      for (int col = 0; col < 3; ++col) {
         CHECK(static_cast<int>(pt.row_cols(col).size()) == interface_dofs / 3);
         for (int r : pt.row_cols(col)) CHECK(b.level.dof_kind[r] == pg.columns[col].component);
      }
   }
   SUBCASE("2x2x2 grid")
   {
      const auto b = make({2, 2, 2}, 2, false);
      const auto ent = classify_interface(b.level);
      const auto c = count_entities(ent);
      const auto l = lattice(2);
      CHECK(c.vertices == l.v);
      CHECK(c.edges == l.e);
      CHECK(c.faces == l.f);
      CHECK(c.vertices == 1);
      CHECK(c.edges == 6);
      CHECK(c.faces == 12);
      CHECK(c.pressure == 8);

      const auto merged = merge_gdsw_star(ent);
      const auto cm = count_entities(merged);
      CHECK(cm.merged == 1);
      CHECK(cm.edges == 0);
      CHECK(cm.faces == 12);
      CHECK(constructive_dimension(b.level, Flavor::gdsw_star) == 47);
      CHECK(constructive_dimension(b.level, Flavor::gdsw) == 65);

      // entity dofs are disjoint and sorted
      std::vector<int> seen;
      for (const auto& e : ent) {
         CHECK(std::is_sorted(e.dofs.begin(), e.dofs.end()));
         seen.insert(seen.end(), e.dofs.begin(), e.dofs.end());
      }
      std::sort(seen.begin(), seen.end());
      CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
   }
   SUBCASE("3x3x3 grid")
   {
      const auto b = make({3, 3, 3}, 1, false);
      const auto c = count_entities(merge_gdsw_star(classify_interface(b.level)));
      CHECK(c.merged == 8);
      CHECK(c.faces == 54);
      CHECK(constructive_dimension(b.level, Flavor::gdsw_star) == 213);
   }
   SUBCASE("no vertices: merging is the identity")
   {
      const auto b = make({2, 1}, 2, false);
      const auto ent = classify_interface(b.level);
      const auto merged = merge_gdsw_star(ent);
      REQUIRE(merged.size() == ent.size());
      for (std::size_t i = 0; i < ent.size(); ++i) {
         CHECK(merged[i].kind == ent[i].kind);
         CHECK(merged[i].dofs == ent[i].dofs);
      }
   }
}

TEST_CASE("constructive dimensions equal the formulas")
{
   for (int m : {2, 3, 4}) {
      const auto b = make({m, m, m}, 1, false);
      const std::vector<int> grid{m, m, m};
      CHECK(constructive_dimension(b.level, Flavor::gdsw_star) == gdsw_star_dimension(grid));
      CHECK(constructive_dimension(b.level, Flavor::gdsw) == gdsw_dimension(grid));
   }
   const auto b = make({2, 3, 4}, 1, false);
   const std::vector<int> grid{2, 3, 4};
   CHECK(constructive_dimension(b.level, Flavor::gdsw_star) == gdsw_star_dimension(grid));
   CHECK(constructive_dimension(b.level, Flavor::gdsw) == gdsw_dimension(grid));
}

TEST_CASE("coarse basis")
{
   const auto b = make({2, 2, 2}, 2);
   const auto ent = merge_gdsw_star(classify_interface(b.level));
   const PhiGamma pg = build_phi_gamma(ent, b.level);

   SUBCASE("velocity block extension")
   {
      const auto basis = build_coarse_basis(b.a, b.level, ent, pg);
      CHECK(basis.phi.cols() == 47);
      CHECK(basis.num_velocity_columns == 39);
      CHECK(partition_of_unity_defect(b.level, basis) <= 1e-12);
      const auto res = extension_residual(b.a, b.level, basis);
      CHECK(res.max_residual_velocity <= 1e-10 * res.matrix_max);

      // interface values of the x columns sum to one on x interface dofs
      std::vector<double> ones(static_cast<std::size_t>(basis.phi.cols()), 0.0);
      for (int c = 0; c < basis.num_velocity_columns; ++c)
         if (basis.columns[c].component == 0) ones[c] = 1.0;
      const auto sum = spmv(basis.phi, ones);
      for (int i = 0; i < b.level.size(); ++i) {
         if (!basis.interface_dof[i]) continue;
         CHECK(sum[i] == doctest::Approx(b.level.dof_kind[i] == 0 ? 1.0 : 0.0).epsilon(1e-14));
      }
      // pressure columns are subdomain indicators of the constant
      for (int c = basis.num_velocity_columns; c < basis.phi.cols(); ++c) CHECK(basis.columns[c].component == kPressureKind);
      const auto pt = basis.phi.transpose();
      for (int c = basis.num_velocity_columns; c < basis.phi.cols(); ++c)
         for (int r : pt.row_cols(c)) CHECK(b.level.dof_kind[r] == kPressureKind);
      CHECK(basis.bordered_subdomains == 0);
   }
   SUBCASE("bordered monolithic extension")
   {
      const auto basis = build_coarse_basis(b.a, b.level, ent, pg, Extension::saddle_zero_mean);
      CHECK(partition_of_unity_defect(b.level, basis) <= 1e-12);
      const auto res = extension_residual(b.a, b.level, basis);
      CHECK(res.max_residual_velocity <= 1e-10 * res.matrix_max);
      CHECK(res.max_residual_zero_mean <= 1e-10 * res.matrix_max);
      CHECK(basis.bordered_subdomains == 8);
   }
   SUBCASE("one subdomain")
   {
      const auto one = make({1, 1, 1}, 2);
      const auto e1 = classify_interface(one.level);
      const auto basis = build_coarse_basis(one.a, one.level, e1, build_phi_gamma(e1, one.level));
      REQUIRE(basis.phi.cols() == 1);
      const auto pt = basis.phi.transpose();
      const auto rows = pt.row_cols(0);
      CHECK(static_cast<int>(rows.size()) == one.dofs.num_pressure_dofs / 4);
      for (std::size_t k = 0; k < rows.size(); ++k) CHECK(pt.row_values(0)[k] == one.level.pressure_null[rows[k]]);
   }
}

TEST_CASE("overlap")
{
   SUBCASE("one layer is the set of touching elements")
   {
      const auto b = make({2, 2}, 2);
      const MatrixGraph g(b.unconstrained);
      for (int s = 0; s < b.decomp.num_subdomains; ++s) {
         std::vector<int> closure;
         for (int i = 0; i < b.level.size(); ++i)
            if (std::binary_search(b.level.dof_to_subdomains[i].begin(), b.level.dof_to_subdomains[i].end(), s))
               closure.push_back(i);
         // geometric oracle: every dof of an element sharing a node with s
         std::vector<char> touch_node(static_cast<std::size_t>(b.mesh.node_count()), 0);
         for (int e = 0; e < b.mesh.element_count(); ++e)
            if (b.decomp.element_to_subdomain[e] == s)
               for (int c = 0; c < 4; ++c) touch_node[b.mesh.elements[e][c]] = 1;
         std::vector<int> expect;
         for (int e = 0; e < b.mesh.element_count(); ++e) {
            bool t = false;
            for (int c = 0; c < 4; ++c) t = t || touch_node[b.mesh.elements[e][c]];
            if (!t) continue;
            for (int n = 0; n < 9; ++n)
               for (int comp = 0; comp < 2; ++comp) expect.push_back(b.dofs.velocity_dof(b.dofs.element_velocity_nodes[e][n], comp));
            for (int m = 0; m < 3; ++m) expect.push_back(b.dofs.pressure_dof(e, m));
         }
         std::sort(expect.begin(), expect.end());
         expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
         CHECK(g.neighborhood(closure, 1) == expect);
      }
   }
   SUBCASE("two subdomains overlap around the interface")
   {
      const auto b = make({2, 1}, 3);
      const auto h = PreconditionerHierarchy::build(b.a, b.level, {}, options(1, Flavor::gdsw, 1));
      const auto& sets = h.first().overlapping_sets();
      REQUIRE(sets.size() == 2);
      std::vector<int> both;
      std::set_intersection(sets[0].begin(), sets[0].end(), sets[1].begin(), sets[1].end(), std::back_inserter(both));
      std::vector<int> shared;
      for (int i = 0; i < b.level.size(); ++i)
         if (b.level.dof_to_subdomains[i].size() == 2) shared.push_back(i);
      CHECK(both == matrix_graph_neighborhood(b.a, shared, 1));
      CHECK(h.first().diagnostics().overlap_min > 0);
   }
}

TEST_CASE("one subdomain without overlap is a direct solve")
{
   const auto b = make({1, 1}, 3);
   const auto h = PreconditionerHierarchy::build(b.a, b.level, {}, options(1, Flavor::gdsw, 0));
   CHECK(h.num_levels() == 1);
   std::mt19937 rng(2);
   const auto r = random_vector(b.a.rows(), rng);
   std::vector<double> z(r.size());
   h.apply(r, z);
   const auto x = Factorization::compute(b.a).solve(r);
   double diff = 0.0;
   for (std::size_t i = 0; i < z.size(); ++i) diff = std::max(diff, std::abs(z[i] - x[i]));
   double xmax = 0.0;
   for (double v : x) xmax = std::max(xmax, std::abs(v));
   CHECK(diff <= 1e-12 * xmax);
}

TEST_CASE("two-level apply equals the assembled operator")
{
   const auto b = make({2, 2}, 3);
   REQUIRE(b.a.rows() <= 3000);
   for (int k : {0, 1, 2}) {
      const auto h = PreconditionerHierarchy::build(b.a, b.level, {}, options(2, Flavor::gdsw, k));
      REQUIRE(h.first().has_coarse());
      CHECK(h.first().diagnostics().shifted_local_solves == 0);
      const Eigen::MatrixXd m = dense_two_level(dense(b.a), h.first());
      std::mt19937 rng(10 + k);
      for (int probe = 0; probe < 3; ++probe) {
         const auto r = random_vector(b.a.rows(), rng);
         std::vector<double> z(r.size());
         h.apply(r, z);
         const Eigen::VectorXd ref = m * Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
         const Eigen::VectorXd got = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
         CHECK((got - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
      }
   }
}

TEST_CASE("preconditioner symmetry")
{
   const auto b = make({2, 2, 1}, 2);
   for (int levels : {1, 2}) {
      const auto h = PreconditionerHierarchy::build(b.a, b.level, {}, options(levels, Flavor::gdsw_star, 1));
      std::mt19937 rng(static_cast<unsigned>(levels));
      for (int probe = 0; probe < 20; ++probe) {
         const auto v = random_vector(b.a.rows(), rng, &b.level.dirichlet);
         const auto w = random_vector(b.a.rows(), rng, &b.level.dirichlet);
         std::vector<double> mv(v.size()), mw(w.size());
         h.apply(v, mv);
         h.apply(w, mw);
         const double scale = norm(v) * norm(w) * std::max(norm(mv) / norm(v), norm(mw) / norm(w));
         CHECK(std::abs(dot(v, mw) - dot(w, mv)) <= 1e-12 * scale);
      }
   }
}

TEST_CASE("three-level hierarchy")
{
   const auto b = make({4, 2}, 2);
   std::vector<int> grouping(8);
   for (int s = 0; s < 8; ++s) grouping[s] = s / 4;  // two 4x1 strips; the interface reaches the outflow
   HierarchyOptions o = options(3, Flavor::gdsw, 1);
   const auto h = PreconditionerHierarchy::build(b.a, b.level, {grouping}, o);
   CHECK(h.num_levels() == 3);
   const auto& l1 = h.first();
   REQUIRE(l1.next() != nullptr);
   const auto& l2 = *l1.next();
   CHECK(l2.num_subdomains() == 2);
   CHECK(l2.num_dofs() == l1.coarse_basis().phi.cols());

   // the embedded second level matches a standalone two-level build on A_0
   const auto standalone =
      PreconditionerHierarchy::build(l1.coarse_matrix(), coarse_level_dofs(l1, grouping, 2), {}, options(2, Flavor::gdsw, 1));
   std::mt19937 rng(4);
   const auto r = random_vector(l2.num_dofs(), rng);
   std::vector<double> z1(r.size()), z2(r.size());
   l2.apply(r, z1);
   standalone.apply(r, z2);
   for (std::size_t i = 0; i < r.size(); ++i) CHECK(z1[i] == z2[i]);

   CHECK_THROWS_AS(PreconditionerHierarchy::build(b.a, b.level, {}, o), InvalidArgument);
}

TEST_CASE("coarse cap")
{
   const auto b = make({2, 2}, 2);
   HierarchyOptions o = options(2, Flavor::gdsw, 1);
   o.coarse_cap = 5;
   CHECK_THROWS_AS(PreconditionerHierarchy::build(b.a, b.level, {}, o), CoarseTooLarge);
}
