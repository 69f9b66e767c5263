#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tbvar/estimate.hpp"
#include "tbvar/simulate.hpp"
#include "tbvar/testing.hpp"

namespace tbvar {

struct SupportMetrics {
  std::optional<double> sen;    // TP / (TP + FN)
  std::optional<double> spc;    // TN / (FP + TN)
  std::optional<double> error;  // |est - truth|_F / |truth|_F
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

SupportMetrics support_metrics(const Matrix& est, const Matrix& truth, double zero_tol = 1e-6);

struct Summary {
  double mean = 0.0;
  std::optional<double> sd;  // absent for a single value
  std::size_t n = 0;
};

/// Mean and sample standard deviation (n - 1 denominator).
Summary summarize(const std::vector<double>& values);

/// n points log-spaced over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

struct BicPoint {
  double lambda1 = 0.0;  // lambda_a, or lambda_b for block 2
  double lambda2 = 0.0;  // lambda_c for block 2
  double score = 0.0;
  double df = 0.0;
  bool ok = false;
  std::string error;
};

struct BicResult {
  EstimationConfig config;  // base config with the selected penalties
  FitResult fit;
  BicPoint best;
  std::vector<BicPoint> surface;
};

/// T (tr(Omega S) - log det Omega) + log(T) df.
double bic_block1(const DesignResponse& d, const FitResult& fit);
double bic_block2(const DesignResponse& d, const FitResult& fit);
/// Nonzeros of A; for block 2, r(p1 + p2 - r) (low rank) or nnz(B), plus nnz(C).
double degrees_of_freedom(const FitResult& fit, double zero_tol = 1e-10);

/// Fits every lambda_a on the grid and keeps the lowest BIC. Ties go to the
/// larger penalty; the result does not depend on grid order.
BicResult bic_select_block1(const DesignResponse& d, const std::vector<double>& lambda_a, const EstimationConfig& base);
BicResult bic_select_block2(const DesignResponse& d, const std::vector<double>& lambda_b,
                            const std::vector<double>& lambda_c, const EstimationConfig& base);

struct WindowFit {
  Eigen::Index start = 0;
  FitResult block1;
  std::optional<FitResult> block2;
};

/// Fits each window [start, start + window_length) independently, with
/// window count floor((T - window_length) / step) + 1.
std::vector<WindowFit> rolling_windows(const Matrix& x, const Matrix& z, Eigen::Index window_length, Eigen::Index step,
                                       const EstimationConfig& cfg);

/// 1 where the fraction of matrices with |entry| > zero_tol is at least `threshold`.
Matrix stability_selection(const std::vector<Matrix>& estimates, double threshold, double zero_tol = 1e-6);

/// 3 x triangles / connected triples of the undirected skeleton (OR-symmetrized,
/// diagonal ignored); 0 when there are no triples.
double global_clustering_coefficient(const Matrix& adjacency);

/// Penalty scale of each matrix at the all-zero fit: the largest gradient entry
/// (operator norm of the whitened gradient for low-rank B) with
/// Omega = diag(S_0)^{-1}, S_0 the response covariance.
double lambda_max_a(const DesignResponse& d);
double lambda_max_b(const DesignResponse& d, BStructure structure);
double lambda_max_c(const DesignResponse& d);

/// How penalties are chosen in experiments. Lattices span [lo, hi] times the
/// matching lambda_max, log-spaced; fixed penalties use `*_frac` directly.
struct TuningSpec {
  bool use_bic = true;
  int grid_points = 8;   // per axis of the (lambda_b, lambda_c) lattice
  int a_points = 16;     // lambda_a is searched alone, so more finely
  double a_lo = 0.1, a_hi = 1.0;
  double b_lo = 0.05, b_hi = 1.0;
  double c_lo = 0.1, c_hi = 2.0;
  double a_frac = 0.3, b_frac = 0.3, c_frac = 0.4;
  /// Graphical-lasso weights rho_mult * sqrt(log(p) / T).
  double rho_mult = 1.0;
};

/// sqrt(log(p) / T).
double penalty_scale(Eigen::Index p, Eigen::Index T);

struct ExperimentOptions {
  TuningSpec tuning;
  EstimationConfig base;
  bool forecast = false;
  int threads = 1;
};

struct ReplicationRecord {
  int index = 0;
  bool ok = false;
  std::string error;
  std::map<std::string, double> values;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<ReplicationRecord> records;
  std::map<std::string, Summary> summary;
  int failures = 0;
};

/// Generates parameters, simulates, estimates (and optionally forecasts) per
/// replication with seed split_seed(spec.seed, i); aggregates every metric.
ExperimentReport run_experiment(const ExperimentSpec& spec, const ExperimentOptions& opts);

/// One replication of run_experiment.
ReplicationRecord run_replication(const ExperimentSpec& spec, const ExperimentOptions& opts, int index);

struct CalibrationSpec {
  ExperimentSpec model;      // dimensions, B structure, radii, seed
  TestMethod method = TestMethod::rank;
  int r_null = 0;
  double alpha = 0.05;
  int n_subsamples = 500;
  Eigen::Index block_length = 2000;
  Eigen::Index series_length = 0;  // 0 selects 50 x block_length
};

/// Rejection rate of a test over subsamples of one long simulated series.
CalibrationResult run_calibration(const CalibrationSpec& spec);

}  // namespace tbvar
