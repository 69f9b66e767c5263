#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tbvar/error.hpp"
#include "tbvar/simulate.hpp"
#include "tbvar/spectra.hpp"

using namespace tbvar;

TEST_SUITE("simulate") {

TEST_CASE("split_seed is deterministic and separates streams") {
  CHECK(split_seed(1, 0) == split_seed(1, 0));
  CHECK(split_seed(1, 0) != split_seed(1, 1));
  CHECK(split_seed(1, 0) != split_seed(2, 0));
  Rng a(split_seed(5, 3)), b(split_seed(5, 3));
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("sparse transition hits the target spectral radius") {
  Rng rng(21);
  for (double radius : {0.5, 0.8}) {
    const Matrix a = generate_sparse_transition(30, 2.0 / 30.0, radius, rng);
    CHECK(spectral_radius(a) == doctest::Approx(radius).epsilon(1e-10));
    // One common rescale of Unif(+-[1.5, 2.5]) draws.
    double lo = INFINITY, hi = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (a.data()[i] != 0.0) {
        lo = std::min(lo, std::abs(a.data()[i]));
        hi = std::max(hi, std::abs(a.data()[i]));
      }
    CHECK(hi / lo <= 2.5 / 1.5 + 1e-12);
  }
}

TEST_CASE("low-rank generator has the requested rank") {
  Rng rng(22);
  for (auto method : {LowRankMethod::truncate, LowRankMethod::threshold}) {
    const Matrix b = generate_lowrank(20, 50, 5, rng, method);
    Eigen::JacobiSVD<Matrix> svd(b);
    CHECK(svd.singularValues()(4) > 1e-6);
    CHECK(svd.singularValues()(5) < 1e-9 * svd.singularValues()(0));
  }
  CHECK_THROWS_AS(generate_lowrank(3, 4, 5, rng), InvalidArgument);
}

TEST_CASE("ER precision has the requested condition number and unit minimum eigenvalue") {
  Rng rng(23);
  const Matrix omega = generate_precision_er(40, 0.05, 3.0, rng);
  Eigen::SelfAdjointEigenSolver<Matrix> es(omega);
  CHECK(es.eigenvalues().minCoeff() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff() == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("presets follow the published settings") {
  const ExperimentSpec a1 = preset_spec("A.1");
  CHECK(a1.p1 == 50);
  CHECK(a1.p2 == 20);
  CHECK(a1.rank_b == 5);
  CHECK(a1.T == 200);
  CHECK(preset_spec("C.3'").T == 500);
  CHECK(preset_spec("B.2").rank_b == 20);
  CHECK(preset_names().size() == 10);
  CHECK_THROWS_AS(preset_spec("Z.9"), InvalidArgument);
}

TEST_CASE("generated parameters have block radii and SNR as requested") {
  Rng rng(24);
  ExperimentSpec spec = preset_spec("C.1");
  spec.snr_b = 0.8;
  const ModelParams p = generate_params(spec, rng);
  CHECK(spectral_radius(p.A) == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(spectral_radius(p.C) == doctest::Approx(0.5).epsilon(1e-10));
  const Matrix g = assemble_g(p.A, p.B, p.C);
  CHECK(std::abs(spectral_radius(g) - std::max(spectral_radius(p.A), spectral_radius(p.C))) < 1e-10);
  CHECK(signal_to_noise(p.B, p.A, p.omega_u.inverse(), p.omega_v.inverse()) == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("simulated panels: shape, seed reproducibility, stationary covariance") {
  ExperimentSpec spec;
  spec.p1 = 3;
  spec.p2 = 3;
  spec.omega_density = 0.5;
  spec.rank_b = 1;
  Rng r1(31), r2(31);
  const ModelParams p = generate_params(spec, r1);
  generate_params(spec, r2);
  const Panel a = simulate_system(p, 50, spec.noise, 100, r1);
  const Panel b = simulate_system(p, 50, spec.noise, 100, r2);
  CHECK(a.X.rows() == 50);
  CHECK(a.Z.cols() == 3);
  CHECK(a.X == b.X);
  CHECK(a.Z == b.Z);

  Rng rng(32);
  const Eigen::Index n = 200000;
  const Panel big = simulate_system(p, n, spec.noise, 500, rng);
  Matrix w(n, 6);
  w << big.X, big.Z;
  const Matrix emp = w.transpose() * w / static_cast<double>(n);
  Matrix sigma = Matrix::Zero(6, 6);
  sigma.topLeftCorner(3, 3) = p.omega_u.inverse();
  sigma.bottomRightCorner(3, 3) = p.omega_v.inverse();
  const Matrix g = assemble_g(p.A, p.B, p.C);
  const Matrix gamma = oracle::lyapunov_kron(g, sigma);
  CHECK((stationary_covariance(g, sigma) - gamma).cwiseAbs().maxCoeff() < 1e-9 * gamma.cwiseAbs().maxCoeff());
  CHECK((emp - gamma).cwiseAbs().maxCoeff() < 0.05 * gamma.cwiseAbs().maxCoeff());
}

TEST_CASE("non-Gaussian noise keeps the target covariance") {
  ExperimentSpec spec;
  spec.p1 = 2;
  spec.p2 = 2;
  spec.omega_density = 0.4;
  spec.rank_b = 1;
  spec.identity_noise = true;
  Rng rng(33);
  ModelParams p = generate_params(spec, rng);
  p.A.setZero();
  p.B.setZero();
  p.C.setZero();
  for (auto family : {NoiseFamily::student_t, NoiseFamily::elliptical}) {
    NoiseSpec noise;
    noise.family = family;
    noise.df = 5.0;
    double worst = 0.0;
    const int trajectories = family == NoiseFamily::elliptical ? 4000 : 1;
    const Eigen::Index n = family == NoiseFamily::elliptical ? 50 : 400000;
    Matrix acc = Matrix::Zero(2, 2);
    for (int t = 0; t < trajectories; ++t) {
      const Panel pn = simulate_system(p, n, noise, 0, rng);
      acc += pn.X.transpose() * pn.X;
    }
    acc /= static_cast<double>(trajectories * n);
    // The elliptical radius is lognormal, so only the shape is checked there.
    if (family == NoiseFamily::elliptical) acc /= acc.trace() / 2.0;
    worst = (acc - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff();
    CHECK_MESSAGE(worst < 0.1, static_cast<int>(family));
  }
  CHECK(parse_noise_family("t") == NoiseFamily::student_t);
  CHECK_THROWS_AS(parse_noise_family("cauchy"), InvalidArgument);
}

TEST_CASE("spec validation") {
  ExperimentSpec s;
  s.rho_a = 1.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = ExperimentSpec{};
  s.rank_b = 60;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

}  // TEST_SUITE
