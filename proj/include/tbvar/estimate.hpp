#pragma once

#include <string>
#include <vector>

#include "tbvar/types.hpp"

namespace tbvar {

/// Lagged regression matrices built from a centered panel with T rows:
/// designs hold rows 0..T-2, responses rows 1..T-1.
struct DesignResponse {
  Matrix X;   // design of the X block
  Matrix Z;   // design of the Z block (empty when no Z panel)
  Matrix XT;  // response of the X block
  Matrix ZT;  // response of the Z block (empty when no Z panel)
  Matrix W;   // [X, Z]

  Eigen::Index rows() const { return X.rows(); }
  bool has_z() const { return Z.cols() > 0; }
};

/// Centers each column and forms lagged designs/responses. Pass an empty Z for
/// the X block alone.
DesignResponse build_design_response(const Matrix& x, const Matrix& z = Matrix());

struct EstimationConfig {
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double lambda_c = 0.0;
  double rho_u = 0.0;
  double rho_v = 0.0;
  BStructure b_structure = BStructure::low_rank;
  SolverControl ctrl{500, 25, 1e-8, 1e-6, StepRule::fixed};
  int max_joint_iters = 50;
  bool accelerate = true;
  /// When false, Omega stays at the identity (penalized least squares only).
  bool estimate_precision = true;
  /// Solve the low-rank step on Omega^{1/2} B (thresholding at lambda_b in the
  /// whitened coordinates); when false, proximal steps act on B directly.
  bool whiten_b = true;

  void validate() const;
};

struct FitResult {
  ModelParams params;    // A/omega_u for block 1, B/C/omega_v for block 2
  ModelParams initial;   // iteration-0 (two-step) estimates
  std::vector<double> objective_trace;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
  bool block2 = false;
};

FitResult estimate_block1(const Matrix& x, const EstimationConfig& cfg);
FitResult estimate_block2(const Matrix& x, const Matrix& z, const EstimationConfig& cfg);

/// Same estimators on prebuilt designs (avoids repeated centering in tuning loops).
FitResult estimate_block1(const DesignResponse& d, const EstimationConfig& cfg);
FitResult estimate_block2(const DesignResponse& d, const EstimationConfig& cfg);

/// #{sigma_i > tol * sigma_1}.
int rank_of(const Matrix& m, double tol = 1e-8);

struct Forecast {
  Vector x;
  Vector z;
};

Forecast forecast_one_step(const ModelParams& params, const Vector& x_last, const Vector& z_last);

/// Penalized negative log-likelihood of the X block at (A, omega_u).
double block1_objective(const DesignResponse& d, const Matrix& a, const Matrix& omega_u, const EstimationConfig& cfg);
/// Penalized negative log-likelihood of the Z block at (B, C, omega_v).
double block2_objective(const DesignResponse& d, const Matrix& b, const Matrix& c, const Matrix& omega_v,
                        const EstimationConfig& cfg);

/// Objective of whichever blocks `params` carries: block 1 when A is set,
/// plus block 2 when B, C and a Z panel are present.
double penalized_objective(const ModelParams& params, const Matrix& x, const Matrix& z, const EstimationConfig& cfg);

/// Merges a block-1 and a block-2 fit into one parameter set.
ModelParams combine(const FitResult& block1, const FitResult& block2);

}  // namespace tbvar
