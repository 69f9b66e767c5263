#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tbvar/rng.hpp"
#include "tbvar/types.hpp"

namespace tbvar {

/// Covariances of the X design and Z response after projecting out the lagged Z design.
struct PartialCovariances {
  Matrix S00;  // p2 x p2
  Matrix S11;  // p1 x p1
  Matrix S10;  // p1 x p2
  Eigen::Index T = 0;
};

PartialCovariances partial_covariances(const Matrix& x, const Matrix& z);

enum class TestMethod { rank, granger, higher_criticism };

std::string to_string(TestMethod m);
TestMethod parse_test_method(const std::string& s);

struct TestReport {
  TestMethod method = TestMethod::rank;
  double statistic = 0.0;           // Psi_r, Psi_0 or HC*
  double scaled_statistic = 0.0;    // T * Psi for the chi-square tests
  std::optional<double> dof;        // chi-square degrees of freedom
  std::optional<double> threshold;  // rejection cut-off on `statistic`
  std::optional<double> p_value;
  std::optional<double> alpha;
  std::optional<int> r_null;
  bool reject = false;
  std::vector<double> eigenvalues;  // phi_k, descending
  Eigen::Index T = 0;
};

/// Solutions phi of |S01 S11^{-1} S10 - phi S00| = 0, sorted descending.
std::vector<double> canonical_eigenvalues(const PartialCovariances& s);
/// Psi_r = sum of phi_k for k = r+1, ..., min(p1, p2) (1-based).
double psi_tail(const std::vector<double>& phi, int r, Eigen::Index p1, Eigen::Index p2);

/// Rank test of H0: rank(B) <= r_null.
TestReport rank_test(const Matrix& x, const Matrix& z, int r_null, double alpha);
TestReport rank_test(const PartialCovariances& s, int r_null, double alpha);

/// Test of H0: B = 0 with diag(S11) in place of S11.
TestReport granger_test(const Matrix& x, const Matrix& z, double alpha);
TestReport granger_test(const PartialCovariances& s, double alpha);
/// tr(S00^{-1} S01 diag(S11)^{-1} S10), the closed form of the Granger statistic.
double granger_trace(const PartialCovariances& s);

/// Higher-criticism test; an empty grid selects {1, ..., floor(sqrt(5 log(p1 p2)))}.
TestReport higher_criticism_test(const Matrix& x, const Matrix& z, const std::vector<double>& t_grid = {});
TestReport higher_criticism_test(const PartialCovariances& s, const std::vector<double>& t_grid = {});

/// Standardized cross statistics sqrt(T) |S10_ij| / sqrt(S11_ii S00_jj).
Matrix hc_standardized(const PartialCovariances& s);

double std_normal_upper_tail(double t);
/// P(chi2_dof > x).
double chi2_upper_tail(double dof, double x);
/// x with P(chi2_dof > x) = alpha.
double chi2_upper_quantile(double dof, double alpha);
/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

struct CalibrationResult {
  double rate = 0.0;
  int n_subsamples = 0;
  int failures = 0;  // subsamples whose test threw
  Eigen::Index block_length = 0;
};

/// Runs `test` on `n_subsamples` contiguous blocks of `block_length` rows drawn
/// uniformly at random and returns the rejection fraction.
CalibrationResult subsample_calibration(const Matrix& x, const Matrix& z,
                                        const std::function<bool(const Matrix&, const Matrix&)>& test,
                                        int n_subsamples, Eigen::Index block_length, Rng& rng);

}  // namespace tbvar
