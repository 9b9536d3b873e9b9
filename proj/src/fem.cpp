#include "gdsw/fem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "gdsw/error.hpp"

namespace gdsw {

namespace {

constexpr std::array<double, 3> kGaussPoints{-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGaussWeights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

double lagrange2(int l, double s)
{
   switch (l) {
   case 0: return 0.5 * s * (s - 1.0);
   case 1: return 1.0 - s * s;
   default: return 0.5 * s * (s + 1.0);
   }
}

double lagrange2_derivative(int l, double s)
{
   switch (l) {
   case 0: return s - 0.5;
   case 1: return -2.0 * s;
   default: return s + 0.5;
   }
}

// Local Q2 node n has per-axis Lagrange index (n % 3, n / 3 % 3, n / 9).
std::array<int, 3> q2_local_index(int n) { return {n % 3, (n / 3) % 3, n / 9}; }

struct QuadraturePoint {
   Point xi;
   double weight;
};

std::vector<QuadraturePoint> gauss_rule(int dim)
{
   std::vector<QuadraturePoint> rule;
   const int nz = dim == 3 ? 3 : 1;
   for (int k = 0; k < nz; ++k)
      for (int j = 0; j < 3; ++j)
         for (int i = 0; i < 3; ++i) {
            QuadraturePoint q{{kGaussPoints[i], kGaussPoints[j], dim == 3 ? kGaussPoints[k] : 0.0},
                              kGaussWeights[i] * kGaussWeights[j] * (dim == 3 ? kGaussWeights[k] : 1.0)};
            rule.push_back(q);
         }
   return rule;
}

// Multilinear geometry map of one element evaluated at a reference point.
struct ElementMap {
   Point x{0, 0, 0};
   double jac[3][3]{};
   double inv[3][3]{};
   double det = 0.0;
};

ElementMap element_map(const StructuredMesh& mesh, int e, const Point& xi)
{
   ElementMap m;
   const int d = mesh.dim;
   for (int c = 0; c < (1 << d); ++c) {
      const Point& xc = mesh.node_coords[mesh.elements[e][c]];
      double shape = 1.0;
      double grad[3];
      for (int a = 0; a < d; ++a) {
         const double sa = ((c >> a) & 1) ? 1.0 : -1.0;
         shape *= 0.5 * (1.0 + sa * xi[a]);
      }
      for (int b = 0; b < d; ++b) {
         double g = 1.0;
         for (int a = 0; a < d; ++a) {
            const double sa = ((c >> a) & 1) ? 1.0 : -1.0;
            g *= (a == b) ? 0.5 * sa : 0.5 * (1.0 + sa * xi[a]);
         }
         grad[b] = g;
      }
      for (int a = 0; a < d; ++a) {
         m.x[a] += shape * xc[a];
         for (int b = 0; b < d; ++b) m.jac[a][b] += xc[a] * grad[b];
      }
   }
   if (d == 2) {
      m.det = m.jac[0][0] * m.jac[1][1] - m.jac[0][1] * m.jac[1][0];
      if (m.det != 0.0) {
         m.inv[0][0] = m.jac[1][1] / m.det;
         m.inv[0][1] = -m.jac[0][1] / m.det;
         m.inv[1][0] = -m.jac[1][0] / m.det;
         m.inv[1][1] = m.jac[0][0] / m.det;
      }
   }
   else {
      const auto& j = m.jac;
      m.det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
              j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
      if (m.det != 0.0) {
         m.inv[0][0] = (j[1][1] * j[2][2] - j[1][2] * j[2][1]) / m.det;
         m.inv[0][1] = (j[0][2] * j[2][1] - j[0][1] * j[2][2]) / m.det;
         m.inv[0][2] = (j[0][1] * j[1][2] - j[0][2] * j[1][1]) / m.det;
         m.inv[1][0] = (j[1][2] * j[2][0] - j[1][0] * j[2][2]) / m.det;
         m.inv[1][1] = (j[0][0] * j[2][2] - j[0][2] * j[2][0]) / m.det;
         m.inv[1][2] = (j[0][2] * j[1][0] - j[0][0] * j[1][2]) / m.det;
         m.inv[2][0] = (j[1][0] * j[2][1] - j[1][1] * j[2][0]) / m.det;
         m.inv[2][1] = (j[0][1] * j[2][0] - j[0][0] * j[2][1]) / m.det;
         m.inv[2][2] = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) / m.det;
      }
   }
   return m;
}

double q2_value(int dim, int n, const Point& xi)
{
   const auto l = q2_local_index(n);
   double v = 1.0;
   for (int a = 0; a < dim; ++a) v *= lagrange2(l[a], xi[a]);
   return v;
}

Point q2_reference_gradient(int dim, int n, const Point& xi)
{
   const auto l = q2_local_index(n);
   Point g{0, 0, 0};
   for (int b = 0; b < dim; ++b) {
      double v = 1.0;
      for (int a = 0; a < dim; ++a) v *= (a == b) ? lagrange2_derivative(l[a], xi[a]) : lagrange2(l[a], xi[a]);
      g[b] = v;
   }
   return g;
}

double pressure_mode(int m, const Point& xi) { return m == 0 ? 1.0 : xi[m - 1]; }

double pressure_value(std::span<const double> x, const DofMap& dofs, int e, const Point& xi)
{
   double p = 0.0;
   for (int m = 0; m < dofs.pressure_modes(); ++m) p += x[dofs.pressure_dof(e, m)] * pressure_mode(m, xi);
   return p;
}

}  // namespace

std::vector<double> DofMap::constant_pressure() const
{
   std::vector<double> c(static_cast<std::size_t>(num_dofs()), 0.0);
   const int ne = num_pressure_dofs / pressure_modes();
   for (int e = 0; e < ne; ++e) c[pressure_dof(e, 0)] = 1.0;
   return c;
}

DofMap build_dofmap(const StructuredMesh& mesh, const Decomposition& decomp)
{
   if (static_cast<int>(decomp.element_to_subdomain.size()) != mesh.element_count())
      throw InvalidArgument("build_dofmap: decomposition does not match mesh");
   DofMap dm;
   dm.dim = mesh.dim;
   dm.num_subdomains = decomp.num_subdomains;
   const int d = mesh.dim;
   for (int a = 0; a < d; ++a) dm.q2_points[a] = 2 * mesh.cells[a] + 1;
   dm.num_velocity_nodes = dm.q2_points[0] * dm.q2_points[1] * dm.q2_points[2];
   dm.num_velocity_dofs = d * dm.num_velocity_nodes;
   dm.num_pressure_dofs = (d + 1) * mesh.element_count();

   const Point h = mesh.cell_size();
   dm.velocity_node_coords.resize(static_cast<std::size_t>(dm.num_velocity_nodes));
   for (int k = 0; k < dm.q2_points[2]; ++k)
      for (int j = 0; j < dm.q2_points[1]; ++j)
         for (int i = 0; i < dm.q2_points[0]; ++i) {
            Point p{0.5 * i * h[0], 0.5 * j * h[1], 0.5 * k * h[2]};
            if (i == dm.q2_points[0] - 1) p[0] = mesh.lengths[0];
            if (j == dm.q2_points[1] - 1) p[1] = mesh.lengths[1];
            if (d == 3 && k == dm.q2_points[2] - 1) p[2] = mesh.lengths[2];
            dm.velocity_node_coords[i + dm.q2_points[0] * (j + dm.q2_points[1] * k)] = p;
         }

   const int npe = dm.nodes_per_element();
   dm.element_velocity_nodes.resize(static_cast<std::size_t>(mesh.element_count()));
   std::vector<std::vector<int>> node_subdomains(static_cast<std::size_t>(dm.num_velocity_nodes));
   for (int e = 0; e < mesh.element_count(); ++e) {
      const auto ijk = mesh.element_ijk(e);
      auto& nodes = dm.element_velocity_nodes[e];
      nodes.fill(-1);
      for (int n = 0; n < npe; ++n) {
         const auto l = q2_local_index(n);
         const int gi = 2 * ijk[0] + l[0];
         const int gj = 2 * ijk[1] + l[1];
         const int gk = d == 3 ? 2 * ijk[2] + l[2] : 0;
         nodes[n] = gi + dm.q2_points[0] * (gj + dm.q2_points[1] * gk);
         node_subdomains[nodes[n]].push_back(decomp.element_to_subdomain[e]);
      }
   }

   const int ndofs = dm.num_dofs();
   dm.dof_kind.assign(static_cast<std::size_t>(ndofs), kPressureKind);
   dm.dof_to_subdomains.resize(static_cast<std::size_t>(ndofs));
   for (int n = 0; n < dm.num_velocity_nodes; ++n) {
      auto& s = node_subdomains[n];
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      for (int c = 0; c < d; ++c) {
         dm.dof_kind[dm.velocity_dof(n, c)] = c;
         dm.dof_to_subdomains[dm.velocity_dof(n, c)] = s;
      }
   }
   for (int e = 0; e < mesh.element_count(); ++e)
      for (int m = 0; m < dm.pressure_modes(); ++m)
         dm.dof_to_subdomains[dm.pressure_dof(e, m)] = {decomp.element_to_subdomain[e]};

   dm.dirichlet.assign(static_cast<std::size_t>(ndofs), 0);
   for (const auto& f : mesh.boundary_facets) {
      if (f.tag == BoundaryTag::outflow) continue;
      const int axis = f.local_facet / 2;
      const int side = (f.local_facet % 2) ? 2 : 0;
      for (int n = 0; n < npe; ++n)
         if (q2_local_index(n)[axis] == side)
            for (int c = 0; c < d; ++c) dm.dirichlet[dm.velocity_dof(dm.element_velocity_nodes[f.element][n], c)] = 1;
   }
   for (int i = 0; i < ndofs; ++i)
      if (dm.dirichlet[i]) dm.dirichlet_dofs.push_back(i);
   return dm;
}

CsrMatrix SaddleMatrix::velocity_block() const
{
   std::vector<int> v(static_cast<std::size_t>(num_velocity_dofs));
   for (int i = 0; i < num_velocity_dofs; ++i) v[i] = i;
   return matrix.submatrix(v, v);
}

CsrMatrix SaddleMatrix::divergence_block() const
{
   std::vector<int> v(static_cast<std::size_t>(num_velocity_dofs));
   for (int i = 0; i < num_velocity_dofs; ++i) v[i] = i;
   std::vector<int> p;
   for (int i = num_velocity_dofs; i < matrix.rows(); ++i) p.push_back(i);
   return matrix.submatrix(p, v);
}

CsrMatrix SaddleMatrix::pressure_block() const
{
   std::vector<int> p;
   for (int i = num_velocity_dofs; i < matrix.rows(); ++i) p.push_back(i);
   return matrix.submatrix(p, p);
}

void ProblemConfig::validate() const
{
   if (!(viscosity > 0.0)) throw InvalidArgument("viscosity must be positive");
   if (!(tol_rel > 0.0 && tol_rel < 1.0)) throw InvalidArgument("tol_rel must lie in (0, 1)");
   if (max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
}

std::pair<SaddleMatrix, std::vector<double>> assemble_stokes(const StructuredMesh& mesh, const DofMap& dofs,
                                                             const ProblemConfig& config)
{
   config.validate();
   const int d = mesh.dim;
   const int npe = dofs.nodes_per_element();
   const int nmodes = dofs.pressure_modes();
   const auto rule = gauss_rule(d);

   std::vector<Triplet> trip;
   trip.reserve(static_cast<std::size_t>(mesh.element_count()) *
                static_cast<std::size_t>(npe * npe * d + 2 * nmodes * npe * d));
   std::vector<double> rhs(static_cast<std::size_t>(dofs.num_dofs()), 0.0);

   std::vector<double> stiff(static_cast<std::size_t>(npe * npe));
   std::vector<double> div(static_cast<std::size_t>(nmodes * npe * d));
   std::vector<double> load(static_cast<std::size_t>(npe * d));
   std::vector<Point> grad(static_cast<std::size_t>(npe));
   for (int e = 0; e < mesh.element_count(); ++e) {
      std::fill(stiff.begin(), stiff.end(), 0.0);
      std::fill(div.begin(), div.end(), 0.0);
      std::fill(load.begin(), load.end(), 0.0);
      for (const auto& q : rule) {
         const ElementMap map = element_map(mesh, e, q.xi);
         if (!(map.det > 0.0))
            throw NumericallySingular("assemble_stokes: singular element Jacobian on element " + std::to_string(e));
         const double wdet = q.weight * map.det;
         for (int n = 0; n < npe; ++n) {
            const Point gr = q2_reference_gradient(d, n, q.xi);
            Point gx{0, 0, 0};
            for (int a = 0; a < d; ++a)
               for (int b = 0; b < d; ++b) gx[a] += map.inv[b][a] * gr[b];
            grad[n] = gx;
         }
         for (int a = 0; a < npe; ++a)
            for (int b = 0; b < npe; ++b) {
               double s = 0.0;
               for (int k = 0; k < d; ++k) s += grad[a][k] * grad[b][k];
               stiff[a * npe + b] += config.viscosity * wdet * s;
            }
         for (int m = 0; m < nmodes; ++m) {
            const double psi = pressure_mode(m, q.xi);
            for (int b = 0; b < npe; ++b)
               for (int c = 0; c < d; ++c) div[(m * npe + b) * d + c] -= wdet * psi * grad[b][c];
         }
         for (int a = 0; a < npe; ++a) {
            const double phi = q2_value(d, a, q.xi);
            for (int c = 0; c < d; ++c) load[a * d + c] += wdet * config.body_force[c] * phi;
         }
      }
      const auto& nodes = dofs.element_velocity_nodes[e];
      for (int c = 0; c < d; ++c)
         for (int a = 0; a < npe; ++a)
            for (int b = 0; b < npe; ++b)
               trip.push_back({dofs.velocity_dof(nodes[a], c), dofs.velocity_dof(nodes[b], c), stiff[a * npe + b]});
      for (int m = 0; m < nmodes; ++m)
         for (int b = 0; b < npe; ++b)
            for (int c = 0; c < d; ++c) {
               const int p = dofs.pressure_dof(e, m);
               const int u = dofs.velocity_dof(nodes[b], c);
               const double v = div[(m * npe + b) * d + c];
               trip.push_back({p, u, v});
               trip.push_back({u, p, v});
            }
      for (int a = 0; a < npe; ++a)
         for (int c = 0; c < d; ++c) rhs[dofs.velocity_dof(nodes[a], c)] += load[a * d + c];
   }
   SaddleMatrix sys;
   sys.matrix = CsrMatrix::from_triplets(dofs.num_dofs(), dofs.num_dofs(), std::move(trip));
   sys.dof_kind = dofs.dof_kind;
   sys.num_velocity_dofs = dofs.num_velocity_dofs;
   return {std::move(sys), std::move(rhs)};
}

std::vector<double> dirichlet_values(const DofMap& dofs, const VectorField& g)
{
   std::vector<double> vals(static_cast<std::size_t>(dofs.num_dofs()), 0.0);
   for (int i : dofs.dirichlet_dofs) {
      const int node = i / dofs.dim;
      vals[i] = g(dofs.velocity_node_coords[node])[i % dofs.dim];
   }
   return vals;
}

std::pair<SaddleMatrix, std::vector<double>> apply_dirichlet(const SaddleMatrix& system, std::span<const double> rhs,
                                                             const DofMap& dofs, const VectorField& g)
{
   const CsrMatrix& a = system.matrix;
   if (rhs.size() != static_cast<std::size_t>(a.rows()) || a.rows() != dofs.num_dofs())
      throw DimensionMismatch("apply_dirichlet: sizes do not match the dof map");
   const auto gv = dirichlet_values(dofs, g);
   std::vector<double> out_rhs(rhs.begin(), rhs.end());
   std::vector<std::int64_t> ptr(static_cast<std::size_t>(a.rows()) + 1, 0);
   std::vector<int> idx;
   std::vector<double> val;
   idx.reserve(static_cast<std::size_t>(a.nnz()));
   val.reserve(static_cast<std::size_t>(a.nnz()));
   for (int r = 0; r < a.rows(); ++r) {
      if (dofs.dirichlet[r]) {
         idx.push_back(r);
         val.push_back(1.0);
         out_rhs[r] = gv[r];
      }
      else {
         const auto cols = a.row_cols(r);
         const auto vals = a.row_values(r);
         for (std::size_t k = 0; k < cols.size(); ++k) {
            if (dofs.dirichlet[cols[k]]) {
               out_rhs[r] -= vals[k] * gv[cols[k]];
               continue;
            }
            idx.push_back(cols[k]);
            val.push_back(vals[k]);
         }
      }
      ptr[r + 1] = static_cast<std::int64_t>(idx.size());
   }
   SaddleMatrix out;
   out.matrix = CsrMatrix(a.rows(), a.cols(), std::move(ptr), std::move(idx), std::move(val));
   out.dof_kind = system.dof_kind;
   out.num_velocity_dofs = system.num_velocity_dofs;
   return {std::move(out), std::move(out_rhs)};
}

AnalyticSolution poiseuille_2d(double c, double viscosity, double length)
{
   AnalyticSolution s;
   s.velocity = [c](const Point& x) { return Vec3{c * x[1] * (1.0 - x[1]), 0.0, 0.0}; };
   s.pressure = [c, viscosity, length](const Point& x) { return 2.0 * viscosity * c * (length - x[0]); };
   return s;
}

VectorField cube_inflow_profile(double c)
{
   return [c](const Point& x) { return Vec3{c * x[1] * x[2] * (1.0 - x[1]) * (1.0 - x[2]), 0.0, 0.0}; };
}

std::vector<double> interpolate(const AnalyticSolution& sol, const StructuredMesh& mesh, const DofMap& dofs)
{
   std::vector<double> x(static_cast<std::size_t>(dofs.num_dofs()), 0.0);
   for (int n = 0; n < dofs.num_velocity_nodes; ++n) {
      const Vec3 u = sol.velocity(dofs.velocity_node_coords[n]);
      for (int c = 0; c < dofs.dim; ++c) x[dofs.velocity_dof(n, c)] = u[c];
   }
   // Modes are L2-orthogonal on the reference cell, so the projection is
   // coefficient-wise.
   const auto rule = gauss_rule(mesh.dim);
   for (int e = 0; e < mesh.element_count(); ++e) {
      std::array<double, 4> num{}, den{};
      for (const auto& q : rule) {
         const ElementMap map = element_map(mesh, e, q.xi);
         const double p = sol.pressure(map.x);
         for (int m = 0; m < dofs.pressure_modes(); ++m) {
            const double psi = pressure_mode(m, q.xi);
            num[m] += q.weight * map.det * p * psi;
            den[m] += q.weight * map.det * psi * psi;
         }
      }
      for (int m = 0; m < dofs.pressure_modes(); ++m) x[dofs.pressure_dof(e, m)] = num[m] / den[m];
   }
   return x;
}

DiscreteError discrete_error(std::span<const double> solution, const AnalyticSolution& sol,
                             const StructuredMesh& mesh, const DofMap& dofs)
{
   if (solution.size() != static_cast<std::size_t>(dofs.num_dofs()))
      throw DimensionMismatch("discrete_error: solution length does not match the dof map");
   DiscreteError err;
   for (int n = 0; n < dofs.num_velocity_nodes; ++n) {
      const Vec3 u = sol.velocity(dofs.velocity_node_coords[n]);
      for (int c = 0; c < dofs.dim; ++c)
         err.velocity_max_node_error =
            std::max(err.velocity_max_node_error, std::abs(solution[dofs.velocity_dof(n, c)] - u[c]));
   }
   const auto rule = gauss_rule(mesh.dim);
   double sum = 0.0;
   for (int e = 0; e < mesh.element_count(); ++e)
      for (const auto& q : rule) {
         const ElementMap map = element_map(mesh, e, q.xi);
         const double diff = pressure_value(solution, dofs, e, q.xi) - sol.pressure(map.x);
         sum += q.weight * map.det * diff * diff;
      }
   err.pressure_l2_error = std::sqrt(sum);
   return err;
}

void write_field_listing(std::ostream& out, std::span<const double> solution, const DofMap& dofs)
{
   if (solution.size() != static_cast<std::size_t>(dofs.num_dofs()))
      throw DimensionMismatch("write_field_listing: solution length does not match the dof map");
   out << "# solution field listing\n";
   out << "# vnode <id> <x> <y> <z> <u_0..u_{d-1}>\n";
   out << "# pelement <id> <p modes 1, xi, eta(, zeta)>\n";
   for (int n = 0; n < dofs.num_velocity_nodes; ++n) {
      const auto& p = dofs.velocity_node_coords[n];
      out << "vnode " << n << ' ' << p[0] << ' ' << p[1] << ' ' << p[2];
      for (int c = 0; c < dofs.dim; ++c) out << ' ' << solution[dofs.velocity_dof(n, c)];
      out << '\n';
   }
   const int ne = dofs.num_pressure_dofs / dofs.pressure_modes();
   for (int e = 0; e < ne; ++e) {
      out << "pelement " << e;
      for (int m = 0; m < dofs.pressure_modes(); ++m) out << ' ' << solution[dofs.pressure_dof(e, m)];
      out << '\n';
   }
}

}  // namespace gdsw
