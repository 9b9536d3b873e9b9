#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gdsw/error.hpp"
#include "gdsw/sparse.hpp"

using namespace gdsw;

namespace {

using Dense = std::vector<std::vector<double>>;

Dense to_dense(const CsrMatrix& a)
{
   Dense d(static_cast<std::size_t>(a.rows()), std::vector<double>(static_cast<std::size_t>(a.cols()), 0.0));
   for (int r = 0; r < a.rows(); ++r) {
      const auto c = a.row_cols(r);
      const auto v = a.row_values(r);
      for (std::size_t k = 0; k < c.size(); ++k) d[r][c[k]] += v[k];
   }
   return d;
}

CsrMatrix random_sparse(int rows, int cols, double density, std::mt19937& rng)
{
   std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0);
   std::vector<Triplet> t;
   for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
         if (p(rng) < density) t.push_back({r, c, u(rng)});
   return CsrMatrix::from_triplets(rows, cols, std::move(t));
}

// Random sparse SPD: B^T B + n I on a sparse B.
CsrMatrix random_spd(int n, std::mt19937& rng)
{
   const CsrMatrix b = random_sparse(n, n, 0.02, rng);
   const CsrMatrix btb = multiply(b.transpose(), b);
   std::vector<Triplet> t;
   for (int r = 0; r < n; ++r) {
      const auto c = btb.row_cols(r);
      const auto v = btb.row_values(r);
      for (std::size_t k = 0; k < c.size(); ++k) t.push_back({r, c[k], v[k]});
      t.push_back({r, r, 1.0});
   }
   return CsrMatrix::from_triplets(n, n, std::move(t));
}

double rel_residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b)
{
   const auto ax = spmv(a, x);
   double num = 0.0, den = 0.0;
   for (std::size_t i = 0; i < b.size(); ++i) {
      num += (ax[i] - b[i]) * (ax[i] - b[i]);
      den += b[i] * b[i];
   }
   return std::sqrt(num / den);
}

CsrMatrix tridiagonal(int n)
{
   std::vector<Triplet> t;
   for (int i = 0; i < n; ++i) {
      t.push_back({i, i, 2.0});
      if (i > 0) t.push_back({i, i - 1, -1.0});
      if (i + 1 < n) t.push_back({i, i + 1, -1.0});
   }
   return CsrMatrix::from_triplets(n, n, std::move(t));
}

}  // namespace

TEST_CASE("csr construction validates and sums duplicates")
{
   const auto a = CsrMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 0, 2.0}, {1, 2, 3.0}, {0, 1, 0.0}});
   CHECK(a.nnz() == 3);
   CHECK(a.at(1, 2) == 4.0);
   CHECK(a.at(0, 1) == 0.0);
   CHECK(a.at(1, 0) == 0.0);
   CHECK_THROWS_AS(CsrMatrix(2, 2, {0, 1, 1}, {5}, {1.0}), InvalidArgument);
   CHECK_THROWS_AS(CsrMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 1.0}), InvalidArgument);
   CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), InvalidArgument);
}

TEST_CASE("spmv")
{
   const std::vector<double> x{1.0, -2.0, 3.0};
   CHECK(spmv(CsrMatrix::identity(3), x) == x);
   CHECK(spmv(CsrMatrix::from_triplets(3, 3, {}), x) == std::vector<double>{0.0, 0.0, 0.0});

   const auto a = CsrMatrix::from_triplets(3, 3, {{0, 0, 2}, {0, 1, -1}, {1, 0, -1}, {1, 1, 2}, {1, 2, -1}, {2, 1, -1}, {2, 2, 2}});
   const Dense d = to_dense(a);
   const auto y = spmv(a, x);
   for (int i = 0; i < 3; ++i) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += d[i][j] * x[j];
      CHECK(y[i] == doctest::Approx(s).epsilon(1e-15));
   }
   std::vector<double> bad(2);
   CHECK_THROWS_AS(a.multiply(x, bad), DimensionMismatch);
}

TEST_CASE("transpose and multiply_transpose agree with dense")
{
   std::mt19937 rng(7);
   const auto a = random_sparse(6, 4, 0.5, rng);
   const Dense d = to_dense(a);
   const Dense dt = to_dense(a.transpose());
   for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 4; ++j) CHECK(dt[j][i] == d[i][j]);
   const std::vector<double> x{1, 2, 3, 4, 5, 6};
   std::vector<double> y(4);
   a.multiply_transpose(x, y);
   const auto y2 = spmv(a.transpose(), x);
   for (int j = 0; j < 4; ++j) CHECK(y[j] == doctest::Approx(y2[j]).epsilon(1e-14));
}

TEST_CASE("triple product")
{
   std::mt19937 rng(11);
   const auto a = random_sparse(5, 5, 0.6, rng);

   SUBCASE("identity gives A")
   {
      const auto c = triple_product(CsrMatrix::identity(5), a);
      const Dense d = to_dense(a), dc = to_dense(c);
      for (int i = 0; i < 5; ++i)
         for (int j = 0; j < 5; ++j) CHECK(dc[i][j] == doctest::Approx(d[i][j]).epsilon(1e-15));
   }
   SUBCASE("column of ones gives the entry sum")
   {
      std::vector<Triplet> t;
      for (int i = 0; i < 5; ++i) t.push_back({i, 0, 1.0});
      const auto c = triple_product(CsrMatrix::from_triplets(5, 1, t), a);
      double sum = 0.0;
      for (double v : a.values()) sum += v;
      REQUIRE(c.rows() == 1);
      CHECK(c.at(0, 0) == doctest::Approx(sum).epsilon(1e-14));
   }
   SUBCASE("random rectangular P against dense oracle")
   {
      const auto p = random_sparse(5, 3, 0.5, rng);
      const Dense dp = to_dense(p), da = to_dense(a), dc = to_dense(triple_product(p, a));
      for (int i = 0; i < 3; ++i)
         for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 5; ++k)
               for (int l = 0; l < 5; ++l) s += dp[k][i] * da[k][l] * dp[l][j];
            CHECK(dc[i][j] == doctest::Approx(s).epsilon(1e-13));
         }
   }
   SUBCASE("permutation is a symmetric reordering")
   {
      const std::vector<int> perm{3, 0, 4, 1, 2};
      std::vector<Triplet> t;
      for (int j = 0; j < 5; ++j) t.push_back({perm[j], j, 1.0});
      const auto c = triple_product(CsrMatrix::from_triplets(5, 5, t), a);
      for (int i = 0; i < 5; ++i)
         for (int j = 0; j < 5; ++j) CHECK(c.at(i, j) == a.at(perm[i], perm[j]));
   }
}

TEST_CASE("submatrix")
{
   const auto a = tridiagonal(6);
   const std::vector<int> rows{4, 1, 2};
   const auto s = a.submatrix(rows, rows);
   for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(s.at(i, j) == a.at(rows[i], rows[j]));
}

TEST_CASE("matrix graph neighborhood")
{
   const auto a = tridiagonal(10);
   const std::vector<int> seed{5};
   CHECK(matrix_graph_neighborhood(a, seed, 0) == std::vector<int>{5});
   CHECK(matrix_graph_neighborhood(a, seed, 2) == std::vector<int>{3, 4, 5, 6, 7});

   // Unsymmetric pattern: an entry in either triangle connects both ends.
   const auto u = CsrMatrix::from_triplets(3, 3, {{0, 0, 1}, {1, 1, 1}, {2, 2, 1}, {0, 2, 1}});
   CHECK(matrix_graph_neighborhood(u, std::vector<int>{2}, 1) == std::vector<int>{0, 2});

   std::mt19937 rng(3);
   const auto r = random_sparse(40, 40, 0.05, rng);
   const MatrixGraph g(r);
   const std::vector<int> s{1, 17, 30};
   for (int k = 0; k < 4; ++k) {
      const auto small = g.neighborhood(s, k);
      const auto big = g.neighborhood(s, k + 1);
      CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
   }
}

TEST_CASE("factorization")
{
   SUBCASE("identity")
   {
      const auto f = Factorization::compute(CsrMatrix::identity(4));
      const std::vector<double> b{1, 2, 3, 4};
      CHECK(f.solve(b) == b);
   }
   SUBCASE("pivoting required")
   {
      const auto f = Factorization::compute(CsrMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
      const auto x = f.solve(std::vector<double>{1.0, 2.0});
      CHECK(x[0] == doctest::Approx(2.0));
      CHECK(x[1] == doctest::Approx(1.0));
   }
   SUBCASE("random sparse SPD 200, dense path")
   {
      std::mt19937 rng(5);
      const auto a = random_spd(200, rng);
      const auto f = Factorization::compute(a);
      CHECK(f.info().dense);
      std::vector<double> b(200);
      std::uniform_real_distribution<double> u(-1, 1);
      for (double& v : b) v = u(rng);
      CHECK(rel_residual(a, f.solve(b), b) <= 1e-10);
   }
   SUBCASE("sparse path above the dense limit")
   {
      const int n = kDenseOrderLimit + 500;
      const auto a = tridiagonal(n);
      const auto f = Factorization::compute(a);
      CHECK_FALSE(f.info().dense);
      CHECK(f.info().min_pivot > 0.0);
      std::vector<double> b(static_cast<std::size_t>(n), 1.0);
      CHECK(rel_residual(a, f.solve(b), b) <= 1e-10);
      // several right-hand sides at once
      std::vector<double> cols(2 * static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
         cols[i] = 1.0;
         cols[n + i] = i % 3;
      }
      const auto orig = cols;
      f.solve_columns(cols, 2);
      CHECK(rel_residual(a, std::span(cols).subspan(0, n), std::span(orig).subspan(0, n)) <= 1e-10);
      CHECK(rel_residual(a, std::span(cols).subspan(n, n), std::span(orig).subspan(n, n)) <= 1e-10);
   }
   SUBCASE("errors")
   {
      CHECK_THROWS_AS(Factorization::compute(CsrMatrix::from_triplets(2, 3, {})), DimensionMismatch);
      CHECK_THROWS_AS(Factorization::compute(CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}})), StructurallySingular);
      CHECK_THROWS_AS(Factorization::compute(CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}})),
                      NumericallySingular);
      // singular in the sparse path too: a rank-one 2x2 block inside the identity
      const int n = kDenseOrderLimit + 10;
      std::vector<Triplet> t;
      for (int i = 2; i < n; ++i) t.push_back({i, i, 1.0});
      for (int i = 0; i < 2; ++i)
         for (int j = 0; j < 2; ++j) t.push_back({i, j, 1.0});
      CHECK_THROWS_AS(Factorization::compute(CsrMatrix::from_triplets(n, n, t)), NumericallySingular);
   }
}

TEST_CASE("matrix market round trip")
{
   std::mt19937 rng(13);
   const auto a = random_sparse(7, 5, 0.4, rng);
   std::stringstream ss;
   write_matrix_market(ss, a);
   const auto b = read_matrix_market(ss);
   REQUIRE(b.rows() == 7);
   REQUIRE(b.cols() == 5);
   CHECK(b.nnz() == a.nnz());
   for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 5; ++c) CHECK(b.at(r, c) == a.at(r, c));

   const std::vector<double> v{0.1, -1e-300, 3.0 / 7.0};
   std::stringstream sv;
   write_matrix_market_vector(sv, v);
   CHECK(read_matrix_market_vector(sv) == v);
}

TEST_CASE("matrix market symmetric and malformed input")
{
   std::stringstream sym("%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.0\n2 1 -1.0\n3 3 4\n");
   const auto a = read_matrix_market(sym);
   CHECK(a.at(0, 1) == -1.0);
   CHECK(a.at(1, 0) == -1.0);
   CHECK(a.nnz() == 4);

   std::stringstream bad_header("%%MatrixMarket matrix array complex general\n1 1\n1\n");
   CHECK_THROWS_AS(read_matrix_market(bad_header), ParseError);
   std::stringstream out_of_range("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
   CHECK_THROWS_AS(read_matrix_market(out_of_range), ParseError);
   std::stringstream short_data("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
   CHECK_THROWS_AS(read_matrix_market(short_data), ParseError);
}
