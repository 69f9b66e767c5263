#pragma once

#include <vector>

#include "tbvar/types.hpp"

namespace tbvar {

/// sign(x) * max(|x| - tau, 0).
double soft_threshold(double x, double tau);

/// Singular value thresholding: U diag(max(sigma - tau, 0)) V'.
Matrix svt(const Matrix& m, double tau);

/// Minimizes (weight/T) ||response + offset - design * beta||^2 + lambda ||beta||_1
/// by cyclic coordinate descent in ascending coordinate order, starting from
/// `warm_start` (pass an empty vector for zeros).
Vector weighted_lasso_row_update(const Matrix& design, const Vector& response, const Vector& offset,
                                 double weight, double lambda, const Vector& warm_start,
                                 const SolverControl& ctrl);

/// Same problem in covariance form: with gram = X'X/T and cross = X'y/T, minimizes
///   weight * (beta' gram beta - 2 cross' beta) + lambda ||beta||_1.
///
/// Iterative kernels below report the work done through `iters` and the
/// stopping status through `converged`; when `converged` is null, hitting the
/// iteration cap throws ConvergenceFailure carrying the last iterate.
Vector lasso_gram(const Matrix& gram, const Vector& cross, double weight, double lambda, Vector beta,
                  const SolverControl& ctrl, int* iters = nullptr, bool* converged = nullptr);

/// Quadratic loss of a coefficient matrix K (rows = responses) in covariance form:
///   loss(K) = tr[W (syy - cross K' - K cross' + K gram K')]
/// which equals (1/T) tr[W (Y - X K')'(Y - X K')] for gram = X'X/T,
/// cross = Y'X/T, syy = Y'Y/T, and weight matrix W (identity when empty).
struct QuadraticLoss {
  Matrix gram;    // p x p
  Matrix cross;   // q x p
  Matrix syy;     // q x q
  Matrix weight;  // q x q, or empty for identity

  double value(const Matrix& k) const;
  Matrix gradient(const Matrix& k) const;  // 2 W (K gram - cross)
  /// Residual covariance syy - cross K' - K cross' + K gram K'.
  Matrix residual_covariance(const Matrix& k) const;
};

/// Row-by-row cyclic Lasso for min_K loss(K) + lambda ||K||_1 with a general
/// weight matrix W: row j is refit with weight w_jj and the residual offset
/// formed from the other rows. Ascending row order; stops on the shared rule.
Matrix row_cyclic_lasso(const QuadraticLoss& loss, double lambda, Matrix start, const SolverControl& ctrl,
                        int* iters = nullptr, bool* converged = nullptr);

/// Maximizes log det Omega - tr(S Omega) - rho * sum_{i != j} |Omega_ij| by block
/// coordinate descent on the covariance W = Omega^{-1} (diagonal unpenalized,
/// so W_ii = S_ii).
Matrix graphical_lasso(const Matrix& s, double rho, const SolverControl& ctrl);

/// Negative penalized log-likelihood tr(S Omega) - log det Omega + rho ||Omega||_{1,off}.
double graphical_lasso_objective(const Matrix& s, const Matrix& omega, double rho);

/// Proximal gradient for min_K loss(K) + lambda ||K||_* with step 1/L,
/// L = 2 lambda_max(W) lambda_max(gram). With `accelerate`, uses momentum weight
/// (t-1)/(t+2) and restarts the momentum whenever the objective would increase,
/// so both variants produce non-increasing objective sequences.
/// `trace` (optional) receives the objective after every iteration.
Matrix nuclear_prox_gradient(const QuadraticLoss& loss, double lambda, bool accelerate, Matrix start,
                             const SolverControl& ctrl, std::vector<double>* trace = nullptr,
                             double step_size = 0.0, int* iters = nullptr, bool* converged = nullptr);

/// Minimizes (1/T) ||target - design K'||_F^2 + lambda ||K||_* (K is q x p for a
/// T x p design and T x q target). `step_size` of 0 selects 1/L; a positive
/// value larger than 1/L is rejected under the fixed rule.
Matrix fista_nuclear(const Matrix& design, const Matrix& target, double lambda, bool accelerate,
                     const SolverControl& ctrl, double step_size = 0.0, std::vector<double>* trace = nullptr);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
double power_iteration_max_eig(const Matrix& sym, int max_iters = 500, double tol = 1e-10);

double nuclear_norm(const Matrix& m);
double l1_norm(const Matrix& m);
double l1_off_diagonal(const Matrix& m);

}  // namespace tbvar
