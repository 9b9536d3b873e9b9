#include <Eigen/Dense>
#include <umfpack.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <variant>

#include "gdsw/error.hpp"
#include "gdsw/sparse.hpp"

namespace gdsw {

namespace {

// UMFPACK factors of a compressed-column copy of A (no row scaling, so the
// reported U diagonal is on the scale of A).
struct SparseLu {
   std::vector<int> col_ptr;
   std::vector<int> row_idx;
   std::vector<double> values;
   void* numeric = nullptr;
   double control[UMFPACK_CONTROL];

   SparseLu() = default;
   SparseLu(const SparseLu&) = delete;
   SparseLu& operator=(const SparseLu&) = delete;
   ~SparseLu()
   {
      if (numeric) umfpack_di_free_numeric(&numeric);
   }
};

}  // namespace

struct Factorization::Impl {
   std::variant<Eigen::PartialPivLU<Eigen::MatrixXd>, std::unique_ptr<SparseLu>> solver;
};

Factorization Factorization::compute(const CsrMatrix& a, double pivot_threshold)
{
   if (a.rows() != a.cols()) throw DimensionMismatch("factorize: matrix not square");
   const int n = a.rows();
   Factorization f;
   f.info_.order = n;
   f.info_.max_entry = a.max_abs();

   for (int r = 0; r < n; ++r)
      if (a.row_cols(r).empty()) throw StructurallySingular("factorize: empty row " + std::to_string(r));

   auto impl = std::make_shared<Impl>();
   if (n <= kDenseOrderLimit) {
      Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
      for (int r = 0; r < n; ++r) {
         const auto cols = a.row_cols(r);
         const auto vals = a.row_values(r);
         for (std::size_t k = 0; k < cols.size(); ++k) dense(r, cols[k]) = vals[k];
      }
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
      f.info_.dense = true;
      f.info_.fill = static_cast<std::int64_t>(n) * n;
      f.info_.min_pivot = n > 0 ? lu.matrixLU().diagonal().cwiseAbs().minCoeff() : 0.0;
      impl->solver = std::move(lu);
   }
   else {
      const CsrMatrix t = a.transpose();  // CSR of A^T is CSC of A
      auto lu = std::make_unique<SparseLu>();
      lu->col_ptr.assign(t.row_ptr().begin(), t.row_ptr().end());
      lu->row_idx.assign(t.col_idx().begin(), t.col_idx().end());
      lu->values.assign(t.values().begin(), t.values().end());
      umfpack_di_defaults(lu->control);
      lu->control[UMFPACK_SCALE] = UMFPACK_SCALE_NONE;
      lu->control[UMFPACK_ORDERING] = UMFPACK_ORDERING_AMD;
      lu->control[UMFPACK_IRSTEP] = 0;
      double info[UMFPACK_INFO];
      void* symbolic = nullptr;
      int status = umfpack_di_symbolic(n, n, lu->col_ptr.data(), lu->row_idx.data(), lu->values.data(), &symbolic,
                                       lu->control, info);
      if (status == UMFPACK_OK)
         status = umfpack_di_numeric(lu->col_ptr.data(), lu->row_idx.data(), lu->values.data(), symbolic,
                                     &lu->numeric, lu->control, info);
      if (symbolic) umfpack_di_free_symbolic(&symbolic);
      if (status == UMFPACK_ERROR_out_of_memory)
         throw NumericallySingular("factorize: sparse LU ran out of memory (order " + std::to_string(n) + ")");
      if (status != UMFPACK_OK && status != UMFPACK_WARNING_singular_matrix) {
         std::ostringstream msg;
         msg << "factorize: sparse LU failed with status " << status << " (order " << n << ")";
         throw NumericallySingular(msg.str());
      }
      f.info_.dense = false;
      f.info_.fill = static_cast<std::int64_t>(info[UMFPACK_LNZ] + info[UMFPACK_UNZ]);
      f.info_.min_pivot = status == UMFPACK_WARNING_singular_matrix ? 0.0 : info[UMFPACK_UMIN];
      impl->solver = std::move(lu);
   }
   if (n > 0 && !(f.info_.min_pivot >= pivot_threshold * f.info_.max_entry)) {
      std::ostringstream msg;
      msg << "factorize: min |pivot| " << f.info_.min_pivot << " below " << pivot_threshold << " * max |entry| "
          << f.info_.max_entry << " (order " << n << ")";
      throw NumericallySingular(msg.str());
   }
   f.impl_ = std::move(impl);
   return f;
}

void Factorization::solve_columns(std::span<double> data, int ncols) const
{
   const int n = info_.order;
   if (data.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(ncols))
      throw DimensionMismatch("solve: right-hand side size mismatch");
   if (n == 0 || ncols == 0) return;
   Eigen::Map<Eigen::MatrixXd> rhs(data.data(), n, ncols);
   std::visit(
      [&](const auto& s) {
         using T = std::decay_t<decltype(s)>;
         if constexpr (std::is_same_v<T, Eigen::PartialPivLU<Eigen::MatrixXd>>) {
            rhs = s.solve(rhs).eval();
         }
         else {
            std::vector<int> wi(static_cast<std::size_t>(n));
            std::vector<double> w(5 * static_cast<std::size_t>(n));
            std::vector<double> x(static_cast<std::size_t>(n));
            double info[UMFPACK_INFO];
            for (int c = 0; c < ncols; ++c) {
               double* col = data.data() + static_cast<std::size_t>(c) * n;
               umfpack_di_wsolve(UMFPACK_A, s->col_ptr.data(), s->row_idx.data(), s->values.data(), x.data(), col,
                                 s->numeric, s->control, info, wi.data(), w.data());
               std::copy(x.begin(), x.end(), col);
            }
         }
      },
      impl_->solver);
}

void Factorization::solve(std::span<const double> b, std::span<double> x) const
{
   if (b.size() != static_cast<std::size_t>(info_.order) || x.size() != b.size())
      throw DimensionMismatch("solve: vector length does not match factorization order");
   std::copy(b.begin(), b.end(), x.begin());
   solve_columns(x, 1);
}

std::vector<double> Factorization::solve(std::span<const double> b) const
{
   std::vector<double> x(b.size());
   solve(b, x);
   return x;
}

}  // namespace gdsw
