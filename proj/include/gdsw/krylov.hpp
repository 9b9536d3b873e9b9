#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace gdsw {

/// y = Op(x). Operators and preconditioners are consulted only through this.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct KrylovConfig {
   double tol_rel = 1e-8;
   int max_iterations = 500;
   int restart = 0;  ///< 0: no restart

   void validate() const;
};

struct KrylovReport {
   int iterations = 0;
   /// Relative residual norms ||b - A x_k|| / ||b|| from the Arnoldi
   /// recurrence, starting with the initial guess.
   std::vector<double> residual_history;
   double final_true_residual = 0.0;  ///< recomputed from the returned solution
   bool converged = false;
   std::vector<double> solution;
};

/// Flexible GMRES with right preconditioning and modified Gram-Schmidt. The
/// estimate-based stop is confirmed by a true residual; if confirmation fails
/// the method restarts from the current iterate.
KrylovReport fgmres(const LinearOperator& a, const LinearOperator& preconditioner, std::span<const double> b,
                    std::span<const double> x0, const KrylovConfig& config);

LinearOperator identity_operator();

/// "iteration,relative_residual" lines.
void write_residual_csv(std::ostream& out, const KrylovReport& report);

}  // namespace gdsw
