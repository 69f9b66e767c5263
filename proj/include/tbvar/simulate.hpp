#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tbvar/rng.hpp"
#include "tbvar/types.hpp"

namespace tbvar {

/// max |eigenvalue|.
double spectral_radius(const Matrix& m);

/// Sparse transition matrix: entries nonzero with probability `nonzero_prob`,
/// values from Unif([-2.5,-1.5] U [1.5,2.5]), rescaled to spectral radius
/// `target_radius`. Draws whose support graph has no cycle (nilpotent) are
/// redrawn, at most 100 times.
Matrix generate_sparse_transition(Eigen::Index p, double nonzero_prob, double target_radius, Rng& rng);

enum class LowRankMethod {
  truncate,   // keep the leading `rank` singular triples unchanged
  threshold,  // singular value thresholding at sigma_{rank+1}
};

/// Unif(-10,10) draw reduced to exact rank `rank`.
Matrix generate_lowrank(Eigen::Index p2, Eigen::Index p1, Eigen::Index rank, Rng& rng,
                        LowRankMethod method = LowRankMethod::truncate);

/// Sparse p2 x p1 matrix with Unif([-2.5,-1.5] U [1.5,2.5]) nonzeros (unscaled).
Matrix generate_sparse_cross(Eigen::Index p2, Eigen::Index p1, double nonzero_prob, Rng& rng);

/// SPD precision with Erdos-Renyi off-diagonal support and exact condition number.
/// The spectrum is shifted and scaled so that lambda_min = 1.
Matrix generate_precision_er(Eigen::Index p, double edge_density, double condition_number, Rng& rng);

enum class NoiseFamily { gaussian, student_t, elliptical };

std::string to_string(NoiseFamily f);
NoiseFamily parse_noise_family(const std::string& s);

/// Error distribution. Covariances always come from the model precisions.
/// Elliptical draws use R ~ lognormal(mu, sigma) as generating variate over the
/// whole trajectory of a block, rescaled so the covariance matches.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double df = 3.0;
  double mu = 0.0;
  double sigma = 1.4142135623730951;  // log-variance 2

  void validate() const;
};

/// Observations in time order, one row per period.
struct Panel {
  Matrix X;  // T x p1
  Matrix Z;  // T x p2
};

Panel simulate_system(const ModelParams& params, Eigen::Index T, const NoiseSpec& noise, Eigen::Index burn_in,
                      Rng& rng);

/// sqrt(tr(B Gamma_X B') / tr(Sigma_v)), Gamma_X the stationary covariance of X.
double signal_to_noise(const Matrix& b, const Matrix& a, const Matrix& sigma_u, const Matrix& sigma_v);

struct ExperimentSpec {
  std::string preset = "custom";
  Eigen::Index p1 = 50;
  Eigen::Index p2 = 20;
  Eigen::Index rank_b = 5;
  double rho_a = 0.5;
  double rho_c = 0.5;
  Eigen::Index T = 200;
  NoiseSpec noise;
  int replications = 20;
  std::uint64_t seed = 20240101;
  BStructure b_structure = BStructure::low_rank;
  double prob_a = 0.0;   // 0 selects 2/p1
  double prob_c = 0.0;   // 0 selects 1/p2
  double prob_b = 0.0;   // sparse B; 0 selects 1/p1
  double snr_b = 0.0;    // rescale B to this SNR when > 0
  LowRankMethod lowrank_method = LowRankMethod::threshold;
  double omega_density = 0.05;
  double omega_condition = 3.0;
  bool identity_noise = false;
  Eigen::Index burn_in = 500;

  void validate() const;
};

/// Named settings: A.1-A.4, B.1, B.2, C.1-C.3 and C.3' (T = 500).
ExperimentSpec preset_spec(const std::string& name);
std::vector<std::string> preset_names();

ModelParams generate_params(const ExperimentSpec& spec, Rng& rng);

}  // namespace tbvar
