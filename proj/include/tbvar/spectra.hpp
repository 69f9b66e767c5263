#pragma once

#include <complex>
#include <vector>

#include "tbvar/types.hpp"

namespace tbvar {

using ComplexMatrix = Eigen::MatrixXcd;

/// Solves Gamma = G Gamma G' + Sigma for stable G (doubling iteration).
Matrix stationary_covariance(const Matrix& g, const Matrix& sigma);

struct SpectralSummary {
  std::vector<double> grid;            // theta_k = -pi + 2 pi k / n
  std::vector<ComplexMatrix> f_w;      // f_W(theta_k)
  double max_formula_gap = 0.0;        // largest |difference| between the two forms
  double m_lower = 0.0;                // min over grid of lambda_min(f_W)
  double M_upper = 0.0;                // max over grid of lambda_max(f_W)
  double mu_min_g = 0.0;
  double mu_max_g = 0.0;
};

/// f_W(theta) = (1/2pi) G(e^{i theta})^{-1} Sigma_eps G(e^{i theta})^{-*}, cross-checked
/// against the block decomposition through f_X.
SpectralSummary spectral_density_W(const ModelParams& params, int grid_size = 512);

/// Decomposition form of f_W at one frequency (used for the cross-check).
ComplexMatrix spectral_density_decomposed(const ModelParams& params, double theta);
ComplexMatrix spectral_density_direct(const ModelParams& params, double theta);

struct MuExtremes {
  double mu_min = 0.0;
  double mu_max = 0.0;
};

/// Extremes over the unit-circle grid of the eigenvalues of A(z)* A(z), A(z) = I - M z.
MuExtremes mu_extremes(const Matrix& m, int grid_size = 512);

struct BoundCheck {
  const char* name;
  double lhs;
  double rhs;
  double margin;  // >= 0 when the inequality holds
};

struct BoundsReport {
  std::vector<BoundCheck> checks;
  double min_margin = 0.0;
  bool all_hold(double tol = 1e-8) const { return min_margin >= -tol; }
};

/// Evaluates the spectral-density and characteristic-polynomial bounds:
///   m(f_W) >= min(lmin(Su), lmin(Sv)) / (2 pi mu_max)
///   M(f_W) <= max(lmax(Su), lmax(Sv)) / (2 pi mu_min)
///   mu_max <= (1 + (|G|_inf + |G|_1)/2)^2
///   mu_min >= (1 - max(rho(A), rho(C)))^2
///   mu_min >= (1 - rho(G))^2 / cond(P)^2   (P the eigenvector matrix of G)
BoundsReport spectrum_bounds_check(const ModelParams& params, int grid_size = 512);

}  // namespace tbvar
