#pragma once

// Reference implementations used only by the tests. Each one takes a different
// numerical route from the library code it checks.

#include <functional>
#include <vector>

#include "tbvar/rng.hpp"
#include "tbvar/solvers.hpp"
#include "tbvar/testing.hpp"
#include "tbvar/types.hpp"

namespace oracle {

using tbvar::Matrix;
using tbvar::Vector;

/// SVT through the eigen-decomposition of M'M instead of an SVD.
Matrix svt(const Matrix& m, double tau);

/// Largest KKT violation of (weight/T)||y + o - X b||^2 + lambda ||b||_1.
double lasso_kkt_violation(const Matrix& design, const Vector& response, const Vector& offset, double weight,
                           double lambda, const Vector& beta);

/// Largest KKT violation of loss(K) + lambda ||K||_1 given the loss gradient at K.
double matrix_lasso_kkt_violation(const Matrix& gradient, const Matrix& k, double lambda);

/// Graphical lasso through projected gradient ascent on the dual
///   max log det(S + U)  s.t. U_ii = 0, |U_ij| <= rho;  Omega = (S + U)^{-1}.
Matrix glasso_dual(const Matrix& s, double rho, int iters = 20000);

/// Stationary covariance from vec(Gamma) = (I - G kron G)^{-1} vec(Sigma).
Matrix lyapunov_kron(const Matrix& g, const Matrix& sigma);

/// Partial covariances of the column-centred panel from normal-equation projections.
tbvar::PartialCovariances partial_covariances(const Matrix& x, const Matrix& z);

/// Squared canonical correlations from the SVD of S00^{-1/2} S10' S11^{-1/2}.
std::vector<double> canonical_eigenvalues(const tbvar::PartialCovariances& s);

double chi2_upper_quantile(double dof, double alpha);
double chi2_cdf(double dof, double x);

/// Spectral density of a scalar AR(1) x_t = a x_{t-1} + e_t, Var(e) = s2.
double ar1_spectrum(double a, double s2, double theta);

/// sup |F_n - F| for the sample against a continuous cdf.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

/// 3 x triangles / connected triples by enumeration of vertex triples.
double clustering_brute_force(const Matrix& adjacency);

/// Random block-triangular system with rho(A), rho(C) < 1 and random SPD noise precisions.
tbvar::ModelParams random_stable_system(Eigen::Index p1, Eigen::Index p2, tbvar::Rng& rng);

}  // namespace oracle
