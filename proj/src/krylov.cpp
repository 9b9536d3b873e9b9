#include "gdsw/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gdsw/error.hpp"

namespace gdsw {

namespace {

double norm2(std::span<const double> v)
{
   double s = 0.0;
   for (double x : v) s += x * x;
   return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b)
{
   double s = 0.0;
   for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
   return s;
}

std::vector<double> residual(const LinearOperator& a, std::span<const double> b, std::span<const double> x)
{
   std::vector<double> r(b.size());
   a(x, r);
   for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
   return r;
}

}  // namespace

void KrylovConfig::validate() const
{
   if (!(tol_rel > 0.0 && tol_rel < 1.0)) throw InvalidArgument("fgmres: tol_rel must lie in (0, 1)");
   if (max_iterations < 1) throw InvalidArgument("fgmres: max_iterations must be at least 1");
   if (restart < 0) throw InvalidArgument("fgmres: restart must be nonnegative");
}

LinearOperator identity_operator()
{
   return [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
}

KrylovReport fgmres(const LinearOperator& a, const LinearOperator& preconditioner, std::span<const double> b,
                    std::span<const double> x0, const KrylovConfig& config)
{
   config.validate();
   const std::size_t n = b.size();
   if (x0.size() != n) throw DimensionMismatch("fgmres: initial guess length differs from right-hand side");

   KrylovReport report;
   const double bnorm = norm2(b);
   if (bnorm == 0.0) {
      report.solution.assign(n, 0.0);
      report.residual_history = {0.0};
      report.converged = true;
      return report;
   }

   std::vector<double> x(x0.begin(), x0.end());
   bool first_cycle = true;
   while (true) {
      auto r = residual(a, b, x);
      const double beta = norm2(r);
      report.final_true_residual = beta / bnorm;
      if (first_cycle) report.residual_history.push_back(beta / bnorm);
      first_cycle = false;
      if (beta / bnorm <= config.tol_rel) {
         report.converged = true;
         break;
      }
      if (report.iterations >= config.max_iterations) break;

      const int remaining = config.max_iterations - report.iterations;
      const int m = config.restart > 0 ? std::min(config.restart, remaining) : remaining;
      std::vector<std::vector<double>> v;
      std::vector<std::vector<double>> z;
      std::vector<std::vector<double>> h;  // column j holds H(0..j+1, j)
      std::vector<double> cs, sn;
      std::vector<double> g{beta};
      v.push_back(r);
      for (double& e : v.back()) e /= beta;

      int cols = 0;
      for (int j = 0; j < m; ++j) {
         z.emplace_back(n);
         preconditioner(v[j], z[j]);
         std::vector<double> w(n);
         a(z[j], w);
         const double wnorm0 = norm2(w);
         std::vector<double> hcol(static_cast<std::size_t>(j) + 2, 0.0);
         for (int i = 0; i <= j; ++i) {
            hcol[i] = dot(w, v[i]);
            for (std::size_t q = 0; q < n; ++q) w[q] -= hcol[i] * v[i][q];
         }
         hcol[j + 1] = norm2(w);
         for (int i = 0; i < j; ++i) {
            const double t = cs[i] * hcol[i] + sn[i] * hcol[i + 1];
            hcol[i + 1] = -sn[i] * hcol[i] + cs[i] * hcol[i + 1];
            hcol[i] = t;
         }
         const double denom = std::hypot(hcol[j], hcol[j + 1]);
         const double c = denom == 0.0 ? 1.0 : hcol[j] / denom;
         const double s = denom == 0.0 ? 0.0 : hcol[j + 1] / denom;
         const double sub = hcol[j + 1];
         cs.push_back(c);
         sn.push_back(s);
         hcol[j] = c * hcol[j] + s * hcol[j + 1];
         hcol[j + 1] = 0.0;
         g.push_back(-s * g[j]);
         g[j] = c * g[j];
         h.push_back(std::move(hcol));
         ++cols;
         ++report.iterations;
         const double estimate = std::abs(g[j + 1]) / bnorm;
         report.residual_history.push_back(estimate);

         const bool breakdown = sub <= 1e-14 * std::max(wnorm0, 1e-300);
         if (breakdown || estimate <= config.tol_rel || report.iterations >= config.max_iterations) break;
         v.push_back(std::move(w));
         for (double& e : v.back()) e /= sub;
      }

      // Back substitution for y, then x += Z y.
      std::vector<double> y(static_cast<std::size_t>(cols), 0.0);
      for (int i = cols - 1; i >= 0; --i) {
         double s = g[i];
         for (int k = i + 1; k < cols; ++k) s -= h[k][i] * y[k];
         y[i] = h[i][i] != 0.0 ? s / h[i][i] : 0.0;
      }
      for (int k = 0; k < cols; ++k)
         for (std::size_t q = 0; q < n; ++q) x[q] += y[k] * z[k][q];

      const auto rt = residual(a, b, x);
      report.final_true_residual = norm2(rt) / bnorm;
      if (report.final_true_residual <= config.tol_rel) {
         report.converged = true;
         break;
      }
      if (report.iterations >= config.max_iterations) break;
   }
   report.solution = std::move(x);
   return report;
}

void write_residual_csv(std::ostream& out, const KrylovReport& report)
{
   out << "iteration,relative_residual\n";
   for (std::size_t k = 0; k < report.residual_history.size(); ++k)
      out << k << ',' << report.residual_history[k] << '\n';
}

}  // namespace gdsw
