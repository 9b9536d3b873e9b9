#include "gdsw/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gdsw/error.hpp"

namespace gdsw {

CsrMatrix::CsrMatrix(int rows, int cols, std::vector<std::int64_t> row_ptr, std::vector<int> col_idx,
                     std::vector<double> values)
   : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
     values_(std::move(values))
{
   if (rows < 0 || cols < 0) throw InvalidArgument("CsrMatrix: negative dimension");
   if (row_ptr_.size() != static_cast<std::size_t>(rows) + 1 || row_ptr_.front() != 0 ||
       row_ptr_.back() != static_cast<std::int64_t>(col_idx_.size()) || col_idx_.size() != values_.size())
      throw InvalidArgument("CsrMatrix: inconsistent array sizes");
   for (int r = 0; r < rows; ++r) {
      if (row_ptr_[r + 1] < row_ptr_[r]) throw InvalidArgument("CsrMatrix: decreasing row pointer");
      for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
         if (col_idx_[k] < 0 || col_idx_[k] >= cols) throw InvalidArgument("CsrMatrix: column out of range");
         if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1])
            throw InvalidArgument("CsrMatrix: column indices not strictly increasing in row " + std::to_string(r));
      }
   }
}

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::vector<Triplet> triplets)
{
   for (const auto& t : triplets)
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
         throw InvalidArgument("CsrMatrix::from_triplets: index out of range");
   std::stable_sort(triplets.begin(), triplets.end(),
                    [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
   std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
   std::vector<int> col_idx;
   std::vector<double> values;
   col_idx.reserve(triplets.size());
   values.reserve(triplets.size());
   for (std::size_t k = 0; k < triplets.size(); ++k) {
      const auto& t = triplets[k];
      if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
         values.back() += t.value;
         continue;
      }
      col_idx.push_back(t.col);
      values.push_back(t.value);
      ++row_ptr[t.row + 1];
   }
   std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
   CsrMatrix m;
   m.rows_ = rows;
   m.cols_ = cols;
   m.row_ptr_ = std::move(row_ptr);
   m.col_idx_ = std::move(col_idx);
   m.values_ = std::move(values);
   return m;
}

CsrMatrix CsrMatrix::identity(int n)
{
   std::vector<std::int64_t> ptr(static_cast<std::size_t>(n) + 1);
   std::iota(ptr.begin(), ptr.end(), 0);
   std::vector<int> idx(static_cast<std::size_t>(n));
   std::iota(idx.begin(), idx.end(), 0);
   return CsrMatrix(n, n, std::move(ptr), std::move(idx), std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

double CsrMatrix::at(int r, int c) const
{
   auto cols = row_cols(r);
   auto it = std::lower_bound(cols.begin(), cols.end(), c);
   if (it == cols.end() || *it != c) return 0.0;
   return values_[row_ptr_[r] + (it - cols.begin())];
}

double CsrMatrix::max_abs() const
{
   double m = 0.0;
   for (double v : values_) m = std::max(m, std::abs(v));
   return m;
}

CsrMatrix CsrMatrix::transpose() const
{
   std::vector<std::int64_t> ptr(static_cast<std::size_t>(cols_) + 1, 0);
   for (int c : col_idx_) ++ptr[c + 1];
   std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
   std::vector<int> idx(col_idx_.size());
   std::vector<double> val(values_.size());
   std::vector<std::int64_t> next(ptr.begin(), ptr.end() - 1);
   for (int r = 0; r < rows_; ++r)
      for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
         const auto dst = next[col_idx_[k]]++;
         idx[dst] = r;
         val[dst] = values_[k];
      }
   CsrMatrix t;
   t.rows_ = cols_;
   t.cols_ = rows_;
   t.row_ptr_ = std::move(ptr);
   t.col_idx_ = std::move(idx);
   t.values_ = std::move(val);
   return t;
}

CsrMatrix CsrMatrix::submatrix(std::span<const int> row_set, std::span<const int> col_set) const
{
   std::vector<int> local_col(static_cast<std::size_t>(cols_), -1);
   for (std::size_t j = 0; j < col_set.size(); ++j) {
      if (col_set[j] < 0 || col_set[j] >= cols_) throw DimensionMismatch("submatrix: column index out of range");
      local_col[col_set[j]] = static_cast<int>(j);
   }
   std::vector<std::int64_t> ptr(row_set.size() + 1, 0);
   std::vector<int> idx;
   std::vector<double> val;
   std::vector<std::pair<int, double>> row;
   for (std::size_t i = 0; i < row_set.size(); ++i) {
      const int r = row_set[i];
      if (r < 0 || r >= rows_) throw DimensionMismatch("submatrix: row index out of range");
      row.clear();
      for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
         if (const int lc = local_col[col_idx_[k]]; lc >= 0) row.emplace_back(lc, values_[k]);
      std::sort(row.begin(), row.end());
      for (const auto& [c, v] : row) {
         idx.push_back(c);
         val.push_back(v);
      }
      ptr[i + 1] = static_cast<std::int64_t>(idx.size());
   }
   CsrMatrix s;
   s.rows_ = static_cast<int>(row_set.size());
   s.cols_ = static_cast<int>(col_set.size());
   s.row_ptr_ = std::move(ptr);
   s.col_idx_ = std::move(idx);
   s.values_ = std::move(val);
   return s;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
   if (x.size() != static_cast<std::size_t>(cols_) || y.size() != static_cast<std::size_t>(rows_))
      throw DimensionMismatch("spmv: vector length does not match matrix");
   for (int r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[col_idx_[k]];
      y[r] = s;
   }
}

void CsrMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const
{
   if (x.size() != static_cast<std::size_t>(rows_) || y.size() != static_cast<std::size_t>(cols_))
      throw DimensionMismatch("spmv transpose: vector length does not match matrix");
   std::fill(y.begin(), y.end(), 0.0);
   for (int r = 0; r < rows_; ++r)
      for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) y[col_idx_[k]] += values_[k] * x[r];
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x)
{
   std::vector<double> y(static_cast<std::size_t>(a.rows()));
   a.multiply(x, y);
   return y;
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b)
{
   if (a.cols() != b.rows()) throw DimensionMismatch("multiply: inner dimensions differ");
   std::vector<std::int64_t> ptr(static_cast<std::size_t>(a.rows()) + 1, 0);
   std::vector<int> idx;
   std::vector<double> val;
   std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
   std::vector<int> marker(static_cast<std::size_t>(b.cols()), -1);
   std::vector<int> pattern;
   for (int r = 0; r < a.rows(); ++r) {
      pattern.clear();
      const auto acols = a.row_cols(r);
      const auto avals = a.row_values(r);
      for (std::size_t ka = 0; ka < acols.size(); ++ka) {
         const auto bcols = b.row_cols(acols[ka]);
         const auto bvals = b.row_values(acols[ka]);
         for (std::size_t kb = 0; kb < bcols.size(); ++kb) {
            const int c = bcols[kb];
            if (marker[c] != r) {
               marker[c] = r;
               acc[c] = 0.0;
               pattern.push_back(c);
            }
            acc[c] += avals[ka] * bvals[kb];
         }
      }
      std::sort(pattern.begin(), pattern.end());
      for (int c : pattern) {
         idx.push_back(c);
         val.push_back(acc[c]);
      }
      ptr[r + 1] = static_cast<std::int64_t>(idx.size());
   }
   return CsrMatrix(a.rows(), b.cols(), std::move(ptr), std::move(idx), std::move(val));
}

CsrMatrix triple_product(const CsrMatrix& p, const CsrMatrix& a)
{
   if (a.rows() != a.cols() || p.rows() != a.rows())
      throw DimensionMismatch("triple_product: P rows must match the order of A");
   return multiply(p.transpose(), multiply(a, p));
}

double max_asymmetry(const CsrMatrix& a)
{
   if (a.rows() != a.cols()) throw DimensionMismatch("max_asymmetry: matrix not square");
   double m = 0.0;
   for (int r = 0; r < a.rows(); ++r) {
      const auto cols = a.row_cols(r);
      const auto vals = a.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k) m = std::max(m, std::abs(vals[k] - a.at(cols[k], r)));
   }
   return m;
}

MatrixGraph::MatrixGraph(const CsrMatrix& a)
{
   if (a.rows() != a.cols()) throw DimensionMismatch("MatrixGraph: matrix not square");
   const int n = a.rows();
   const CsrMatrix t = a.transpose();
   offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
   std::vector<int> merged;
   for (int r = 0; r < n; ++r) {
      merged.clear();
      std::set_union(a.row_cols(r).begin(), a.row_cols(r).end(), t.row_cols(r).begin(), t.row_cols(r).end(),
                     std::back_inserter(merged));
      for (int c : merged)
         if (c != r) adjacency_.push_back(c);
      offsets_[r + 1] = static_cast<std::int64_t>(adjacency_.size());
   }
}

std::vector<int> MatrixGraph::neighborhood(std::span<const int> seed, int layers) const
{
   if (layers < 0) throw InvalidArgument("neighborhood: negative layer count");
   std::vector<char> in_set(static_cast<std::size_t>(size()), 0);
   std::vector<int> frontier;
   std::vector<int> result;
   for (int v : seed) {
      if (v < 0 || v >= size()) throw DimensionMismatch("neighborhood: seed index out of range");
      if (!in_set[v]) {
         in_set[v] = 1;
         frontier.push_back(v);
         result.push_back(v);
      }
   }
   for (int layer = 0; layer < layers && !frontier.empty(); ++layer) {
      std::vector<int> next;
      for (int v : frontier)
         for (int w : neighbors(v))
            if (!in_set[w]) {
               in_set[w] = 1;
               next.push_back(w);
               result.push_back(w);
            }
      frontier = std::move(next);
   }
   std::sort(result.begin(), result.end());
   return result;
}

std::vector<int> matrix_graph_neighborhood(const CsrMatrix& a, std::span<const int> seed, int layers)
{
   return MatrixGraph(a).neighborhood(seed, layers);
}

}  // namespace gdsw
