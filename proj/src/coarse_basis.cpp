#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "gdsw/error.hpp"
#include "gdsw/schwarz.hpp"

namespace gdsw {

namespace {

std::vector<char> interface_flags(const std::vector<InterfaceEntity>& entities, int n)
{
   std::vector<char> flag(static_cast<std::size_t>(n), 0);
   for (const auto& e : entities)
      if (e.kind != EntityKind::pressure_subdomain)
         for (int i : e.dofs) flag[i] = 1;
   return flag;
}

// Interior dofs of each subdomain: single-owner, not on an entity, not Dirichlet.
std::vector<std::vector<int>> interior_sets(const LevelDofs& dofs, const std::vector<char>& interface,
                                           bool with_pressure)
{
   std::vector<std::vector<int>> sets(static_cast<std::size_t>(dofs.num_subdomains));
   for (int i = 0; i < dofs.size(); ++i)
      if (!interface[i] && !dofs.dirichlet[i] && dofs.dof_to_subdomains[i].size() == 1 &&
          (with_pressure || dofs.dof_kind[i] != kPressureKind))
         sets[dofs.dof_to_subdomains[i].front()].push_back(i);
   return sets;
}

}  // namespace

CoarseBasis build_coarse_basis(const CsrMatrix& a, const LevelDofs& dofs,
                               const std::vector<InterfaceEntity>& entities, const PhiGamma& phi_gamma,
                               Extension extension, double pivot_threshold)
{
   const int n = dofs.size();
   if (a.rows() != n || a.cols() != n || phi_gamma.matrix.rows() != n)
      throw DimensionMismatch("build_coarse_basis: matrix, dofs and Phi_Gamma disagree in size");

   CoarseBasis basis;
   basis.interface_dof = interface_flags(entities, n);
   basis.columns = phi_gamma.columns;
   basis.num_velocity_columns = static_cast<int>(phi_gamma.columns.size());

   std::vector<Triplet> trip;
   for (int r = 0; r < n; ++r) {
      const auto cols = phi_gamma.matrix.row_cols(r);
      const auto vals = phi_gamma.matrix.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k) trip.push_back({r, cols[k], vals[k]});
   }

   const auto interior = interior_sets(dofs, basis.interface_dof, extension == Extension::saddle_zero_mean);
   std::vector<int> col_local(static_cast<std::size_t>(basis.num_velocity_columns), -1);
   for (int s = 0; s < dofs.num_subdomains; ++s) {
      const auto& iset = interior[s];
      if (iset.empty()) continue;
      const int ni = static_cast<int>(iset.size());

      std::vector<int> touched;
      for (int li = 0; li < ni; ++li) {
         const int i = iset[li];
         for (int j : a.row_cols(i))
            if (basis.interface_dof[j])
               for (int c : phi_gamma.matrix.row_cols(j))
                  if (col_local[c] < 0) {
                     col_local[c] = static_cast<int>(touched.size());
                     touched.push_back(c);
                  }
      }
      if (touched.empty()) continue;

      std::vector<double> cvec(static_cast<std::size_t>(ni));
      double cmax = 0.0;
      for (int li = 0; li < ni; ++li) {
         cvec[li] = dofs.pressure_null[iset[li]];
         cmax = std::max(cmax, std::abs(cvec[li]));
      }
      CsrMatrix aii = a.submatrix(iset, iset);
      const bool bordered = cmax > 0.0;
      const int nl = bordered ? ni + 1 : ni;
      if (bordered) {
         std::vector<Triplet> bt;
         bt.reserve(static_cast<std::size_t>(aii.nnz()) + 2 * static_cast<std::size_t>(ni));
         for (int r = 0; r < ni; ++r) {
            const auto cols = aii.row_cols(r);
            const auto vals = aii.row_values(r);
            for (std::size_t k = 0; k < cols.size(); ++k) bt.push_back({r, cols[k], vals[k]});
            if (cvec[r] != 0.0) {
               bt.push_back({r, ni, cvec[r]});
               bt.push_back({ni, r, cvec[r]});
            }
         }
         aii = CsrMatrix::from_triplets(nl, nl, std::move(bt));
         ++basis.bordered_subdomains;
      }

      const int nc = static_cast<int>(touched.size());
      std::vector<double> rhs(static_cast<std::size_t>(nl) * nc, 0.0);
      for (int li = 0; li < ni; ++li) {
         const int i = iset[li];
         const auto acols = a.row_cols(i);
         const auto avals = a.row_values(i);
         for (std::size_t k = 0; k < acols.size(); ++k) {
            const int j = acols[k];
            if (!basis.interface_dof[j]) continue;
            const auto pcols = phi_gamma.matrix.row_cols(j);
            const auto pvals = phi_gamma.matrix.row_values(j);
            for (std::size_t q = 0; q < pcols.size(); ++q)
               rhs[static_cast<std::size_t>(col_local[pcols[q]]) * nl + li] -= avals[k] * pvals[q];
         }
      }
      Factorization lu;
      try {
         lu = Factorization::compute(aii, pivot_threshold);
      }
      catch (const NumericallySingular& e) {
         throw NumericallySingular("build_coarse_basis: interior block of subdomain " + std::to_string(s) +
                                   " is singular; check the boundary conditions (" + e.what() + ")");
      }
      lu.solve_columns(rhs, nc);
      for (int q = 0; q < nc; ++q)
         for (int li = 0; li < ni; ++li) {
            const double v = rhs[static_cast<std::size_t>(q) * nl + li];
            if (v != 0.0) trip.push_back({iset[li], touched[q], v});
         }
      for (int c : touched) col_local[c] = -1;
   }

   for (int e = 0; e < static_cast<int>(entities.size()); ++e) {
      const auto& ent = entities[e];
      if (ent.kind != EntityKind::pressure_subdomain) continue;
      const int col = static_cast<int>(basis.columns.size());
      bool any = false;
      for (int i : ent.dofs)
         if (dofs.pressure_null[i] != 0.0) {
            trip.push_back({i, col, dofs.pressure_null[i]});
            any = true;
         }
      if (any) basis.columns.push_back({e, kPressureKind, ent.sharing_set});
   }
   basis.phi = CsrMatrix::from_triplets(n, static_cast<int>(basis.columns.size()), std::move(trip));
   return basis;
}

ExtensionResidual extension_residual(const CsrMatrix& a, const LevelDofs& dofs, const CoarseBasis& basis)
{
   ExtensionResidual res;
   res.matrix_max = a.max_abs();
   const CsrMatrix y = multiply(a, basis.phi);
   const int nv = basis.num_velocity_columns;

   // Per subdomain and column: c^T r and c^T c for the zero-mean projection.
   std::vector<std::unordered_map<int, double>> dot(static_cast<std::size_t>(dofs.num_subdomains));
   std::vector<double> cc(static_cast<std::size_t>(dofs.num_subdomains), 0.0);
   auto interior_row = [&](int r) {
      return !basis.interface_dof[r] && !dofs.dirichlet[r] && dofs.dof_to_subdomains[r].size() == 1;
   };
   for (int r = 0; r < y.rows(); ++r) {
      if (!interior_row(r)) continue;
      const int s = dofs.dof_to_subdomains[r].front();
      const double c = dofs.pressure_null[r];
      cc[s] += c * c;
      const auto cols = y.row_cols(r);
      const auto vals = y.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k) {
         if (cols[k] >= nv) continue;
         res.max_residual = std::max(res.max_residual, std::abs(vals[k]));
         if (dofs.dof_kind[r] != kPressureKind)
            res.max_residual_velocity = std::max(res.max_residual_velocity, std::abs(vals[k]));
         if (c != 0.0) dot[s][cols[k]] += c * vals[k];
      }
   }
   // Columns absent from a row have zero residual there, but their projected
   // value may not be; visit every (row, column) pair with a nonzero dot.
   for (int r = 0; r < y.rows(); ++r) {
      if (!interior_row(r)) continue;
      const int s = dofs.dof_to_subdomains[r].front();
      const double c = dofs.pressure_null[r];
      const auto cols = y.row_cols(r);
      const auto vals = y.row_values(r);
      std::unordered_map<int, double> row;
      for (std::size_t k = 0; k < cols.size(); ++k)
         if (cols[k] < nv) row[cols[k]] = vals[k];
      for (const auto& [col, d] : dot[s]) {
         const auto it = row.find(col);
         const double v = (it == row.end() ? 0.0 : it->second) - (cc[s] > 0.0 ? d / cc[s] * c : 0.0);
         res.max_residual_zero_mean = std::max(res.max_residual_zero_mean, std::abs(v));
         if (it != row.end()) row.erase(it);
      }
      for (const auto& [col, v] : row) res.max_residual_zero_mean = std::max(res.max_residual_zero_mean, std::abs(v));
   }
   return res;
}

double partition_of_unity_defect(const LevelDofs& dofs, const CoarseBasis& basis)
{
   double defect = 0.0;
   for (int r = 0; r < basis.phi.rows(); ++r) {
      if (!basis.interface_dof[r]) continue;
      double sum = 0.0;
      const auto cols = basis.phi.row_cols(r);
      const auto vals = basis.phi.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k)
         if (basis.columns[cols[k]].component == dofs.dof_kind[r]) sum += vals[k];
      defect = std::max(defect, std::abs(sum - 1.0));
   }
   return defect;
}

}  // namespace gdsw
