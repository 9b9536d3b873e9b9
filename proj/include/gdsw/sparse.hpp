#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gdsw {

struct Triplet {
   int row;
   int col;
   double value;
};

/// Compressed sparse row matrix with strictly increasing column indices per
/// row. Immutable once built; all accessors are const.
class CsrMatrix {
public:
   CsrMatrix() = default;

   /// Validates the invariants and throws InvalidArgument if they are broken.
   CsrMatrix(int rows, int cols, std::vector<std::int64_t> row_ptr, std::vector<int> col_idx,
             std::vector<double> values);

   /// Duplicates are summed in input order, so the result is deterministic for
   /// a fixed triplet sequence. Explicit zeros are kept as structural entries.
   static CsrMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets);
   static CsrMatrix identity(int n);

   int rows() const { return rows_; }
   int cols() const { return cols_; }
   std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx_.size()); }

   std::span<const std::int64_t> row_ptr() const { return row_ptr_; }
   std::span<const int> col_idx() const { return col_idx_; }
   std::span<const double> values() const { return values_; }

   std::span<const int> row_cols(int r) const
   {
      return {col_idx_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
   }
   std::span<const double> row_values(int r) const
   {
      return {values_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
   }

   /// Entry (r, c), zero when not stored.
   double at(int r, int c) const;
   double max_abs() const;

   CsrMatrix transpose() const;

   /// Principal or rectangular extraction. `row_set` and `col_set` give the
   /// global indices of the local rows/columns in local order.
   CsrMatrix submatrix(std::span<const int> row_set, std::span<const int> col_set) const;

   /// y = A x with ascending-column summation per row.
   void multiply(std::span<const double> x, std::span<double> y) const;
   /// y = A^T x.
   void multiply_transpose(std::span<const double> x, std::span<double> y) const;

private:
   int rows_ = 0;
   int cols_ = 0;
   std::vector<std::int64_t> row_ptr_{0};
   std::vector<int> col_idx_;
   std::vector<double> values_;
};

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);

/// C = A B (Gustavson). Keeps every structural product entry.
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);

/// P^T A P with the exact sparsity of the product.
CsrMatrix triple_product(const CsrMatrix& p, const CsrMatrix& a);

/// max |A - A^T| over all entries.
double max_asymmetry(const CsrMatrix& a);

/// Adjacency of the symmetrized pattern of a square matrix, without self loops.
class MatrixGraph {
public:
   explicit MatrixGraph(const CsrMatrix& a);

   int size() const { return static_cast<int>(offsets_.size()) - 1; }
   std::span<const int> neighbors(int v) const
   {
      return {adjacency_.data() + offsets_[v], static_cast<std::size_t>(offsets_[v + 1] - offsets_[v])};
   }

   /// Expands `seed` by `layers` rounds of adjacency. Result sorted, unique.
   std::vector<int> neighborhood(std::span<const int> seed, int layers) const;

private:
   std::vector<std::int64_t> offsets_;
   std::vector<int> adjacency_;
};

std::vector<int> matrix_graph_neighborhood(const CsrMatrix& a, std::span<const int> seed, int layers);

// ---------------------------------------------------------------------------
// Direct solver

inline constexpr int kDenseOrderLimit = 2000;
inline constexpr double kDefaultPivotThreshold = 1e-13;

struct FactorizationInfo {
   int order = 0;
   std::int64_t fill = 0;  ///< stored entries of the factors
   double min_pivot = 0.0;
   double max_entry = 0.0;
   bool dense = true;
};

/// LU with partial pivoting; dense for orders up to kDenseOrderLimit, sparse
/// with an approximate minimum degree ordering above. Immutable and safe to
/// share; `solve` may run concurrently.
class Factorization {
public:
   Factorization() = default;

   /// Throws StructurallySingular or NumericallySingular (min |pivot| below
   /// pivot_threshold * max |entry|).
   static Factorization compute(const CsrMatrix& a, double pivot_threshold = kDefaultPivotThreshold);

   int order() const { return info_.order; }
   const FactorizationInfo& info() const { return info_; }
   bool empty() const { return impl_ == nullptr; }

   void solve(std::span<const double> b, std::span<double> x) const;
   std::vector<double> solve(std::span<const double> b) const;
   /// Solves in place for `ncols` right-hand sides stored column-major.
   void solve_columns(std::span<double> data, int ncols) const;

   struct Impl;

private:
   std::shared_ptr<const Impl> impl_;
   FactorizationInfo info_;
};

// ---------------------------------------------------------------------------
// Matrix Market (coordinate, real, general|symmetric)

CsrMatrix read_matrix_market(std::istream& in);
CsrMatrix read_matrix_market(const std::string& path);
/// Values are written in shortest round-trip decimal form.
void write_matrix_market(std::ostream& out, const CsrMatrix& a);
void write_matrix_market(const std::string& path, const CsrMatrix& a);
/// Dense vector in array format.
void write_matrix_market_vector(std::ostream& out, std::span<const double> v);
void write_matrix_market_vector(const std::string& path, std::span<const double> v);
std::vector<double> read_matrix_market_vector(std::istream& in);

}  // namespace gdsw
