#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace tbvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class StepRule { fixed, backtracking };

/// Iteration limits and stopping rule shared by the numerical kernels.
/// A solver stops when the relative objective change drops below `rel_tol`
/// or the largest parameter change drops below `abs_tol`.
struct SolverControl {
  int max_inner_iters = 500;
  int max_outer_iters = 50;
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  StepRule step_rule = StepRule::fixed;

  void validate() const;
};

enum class PenaltyKind { l1, nuclear };

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::l1;
  double weight = 0.0;

  double evaluate(const Matrix& m) const;
};

enum class BStructure { low_rank, sparse, zero };

std::string to_string(BStructure s);
BStructure parse_b_structure(const std::string& s);

/// Parameters of the recursive two-block system
///   x_t = A x_{t-1} + u_t,        u_t with precision omega_u
///   z_t = B x_{t-1} + C z_{t-1} + v_t,  v_t with precision omega_v.
struct ModelParams {
  Matrix A;        // p1 x p1
  Matrix B;        // p2 x p1
  Matrix C;        // p2 x p2
  Matrix omega_u;  // p1 x p1, SPD
  Matrix omega_v;  // p2 x p2, SPD
  BStructure b_structure = BStructure::low_rank;

  Eigen::Index p1() const { return A.rows(); }
  Eigen::Index p2() const { return C.rows(); }

  /// Shapes, finiteness, SPD precisions, and rho(A), rho(C) < 1.
  void validate() const;
};

/// Joint transition matrix G = [[A, 0], [B, C]].
Matrix assemble_g(const Matrix& a, const Matrix& b, const Matrix& c);

bool all_finite(const Matrix& m);

}  // namespace tbvar
