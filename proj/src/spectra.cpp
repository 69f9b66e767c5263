#include "tbvar/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tbvar/error.hpp"
#include "tbvar/simulate.hpp"

namespace tbvar {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxRadius = 0.99;

using Complex = std::complex<double>;

void require_stable(const Matrix& g, const char* what) {
  const double rho = spectral_radius(g);
  if (!(rho <= kMaxRadius))
    throw InvalidArgument(std::string(what) + ": spectral radius " + std::to_string(rho) +
                          " exceeds the supported limit 0.99");
}

ComplexMatrix inverse_checked(const ComplexMatrix& m) {
  Eigen::PartialPivLU<ComplexMatrix> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12)) throw InvalidArgument("characteristic polynomial is singular on the unit circle");
  return lu.inverse();
}

Matrix inverse_spd(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument(std::string(what) + " is not positive definite");
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

double theta_at(int k, int n) { return -kPi + 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n); }

}  // namespace

Matrix stationary_covariance(const Matrix& g, const Matrix& sigma) {
  if (g.rows() != g.cols() || sigma.rows() != g.rows() || sigma.cols() != g.rows())
    throw InvalidArgument("stationary_covariance: dimension mismatch");
  if (!(spectral_radius(g) < 1.0)) throw InvalidArgument("stationary_covariance: transition is not stable");
  Matrix gamma = sigma;
  Matrix power = g;
  for (int it = 0; it < 200; ++it) {
    gamma += power * gamma * power.transpose();
    power = power * power;
    if (power.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  return 0.5 * (gamma + gamma.transpose());
}

ComplexMatrix spectral_density_direct(const ModelParams& params, double theta) {
  const Eigen::Index p1 = params.p1(), p2 = params.p2(), p = p1 + p2;
  const Matrix g = assemble_g(params.A, params.B, params.C);
  Matrix sigma = Matrix::Zero(p, p);
  sigma.topLeftCorner(p1, p1) = inverse_spd(params.omega_u, "omega_u");
  sigma.bottomRightCorner(p2, p2) = inverse_spd(params.omega_v, "omega_v");
  const Complex z = std::polar(1.0, theta);
  const ComplexMatrix inv = inverse_checked(ComplexMatrix::Identity(p, p) - g.cast<Complex>() * z);
  return inv * sigma.cast<Complex>() * inv.adjoint() / (2.0 * kPi);
}

ComplexMatrix spectral_density_decomposed(const ModelParams& params, double theta) {
  const Eigen::Index p1 = params.p1(), p2 = params.p2(), p = p1 + p2;
  const Complex z = std::polar(1.0, theta);
  const Complex zc = std::conj(z);
  const Matrix sigma_u = inverse_spd(params.omega_u, "omega_u");
  const Matrix sigma_v = inverse_spd(params.omega_v, "omega_v");

  const ComplexMatrix ia = inverse_checked(ComplexMatrix::Identity(p1, p1) - params.A.cast<Complex>() * z);
  const ComplexMatrix f_x = ia * sigma_u.cast<Complex>() * ia.adjoint() / (2.0 * kPi);

  auto h1 = [&](Complex x) {
    ComplexMatrix h = ComplexMatrix::Identity(p, p);
    h.bottomRightCorner(p2, p2) -= params.C.cast<Complex>() * x;
    return h;
  };
  auto h2 = [&](Complex x) {
    ComplexMatrix h = ComplexMatrix::Zero(p, 2 * p1);
    h.topLeftCorner(p1, p1).setIdentity();
    h.bottomRightCorner(p2, p1) = params.B.cast<Complex>() * x;
    return h;
  };
  ComplexMatrix ones_fx(2 * p1, 2 * p1);
  for (int bi = 0; bi < 2; ++bi)
    for (int bj = 0; bj < 2; ++bj) ones_fx.block(bi * p1, bj * p1, p1, p1) = f_x;

  ComplexMatrix middle = h2(z) * ones_fx * h2(zc).transpose();
  middle.bottomRightCorner(p2, p2) += sigma_v.cast<Complex>() / (2.0 * kPi);
  return inverse_checked(h1(z)) * middle * inverse_checked(h1(zc)).transpose();
}

SpectralSummary spectral_density_W(const ModelParams& params, int grid_size) {
  params.validate();
  if (grid_size < 8) throw InvalidArgument("spectral_density_W: grid_size must be >= 8");
  const Matrix g = assemble_g(params.A, params.B, params.C);
  require_stable(g, "spectral_density_W");

  SpectralSummary out;
  out.grid.reserve(grid_size);
  out.f_w.reserve(grid_size);
  out.m_lower = std::numeric_limits<double>::infinity();
  out.M_upper = 0.0;
  for (int k = 0; k < grid_size; ++k) {
    const double theta = theta_at(k, grid_size);
    ComplexMatrix f = spectral_density_direct(params, theta);
    const ComplexMatrix f2 = spectral_density_decomposed(params, theta);
    out.max_formula_gap = std::max(out.max_formula_gap, (f - f2).cwiseAbs().maxCoeff());
    f = 0.5 * (f + f.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(f, Eigen::EigenvaluesOnly);
    out.m_lower = std::min(out.m_lower, es.eigenvalues()(0));
    out.M_upper = std::max(out.M_upper, es.eigenvalues()(f.rows() - 1));
    out.grid.push_back(theta);
    out.f_w.push_back(std::move(f));
  }
  if (out.max_formula_gap > 1e-8)
    throw NumericalBreakdown("spectral_density_W: the two spectral-density forms disagree by " +
                             std::to_string(out.max_formula_gap));
  const MuExtremes mu = mu_extremes(g, grid_size);
  out.mu_min_g = mu.mu_min;
  out.mu_max_g = mu.mu_max;
  return out;
}

MuExtremes mu_extremes(const Matrix& m, int grid_size) {
  if (m.rows() != m.cols()) throw InvalidArgument("mu_extremes: matrix must be square");
  if (grid_size < 8) throw InvalidArgument("mu_extremes: grid_size must be >= 8");
  if (!(spectral_radius(m) < 1.0)) throw InvalidArgument("mu_extremes: matrix is not stable");
  const Eigen::Index p = m.rows();
  MuExtremes out{std::numeric_limits<double>::infinity(), 0.0};
  for (int k = 0; k < grid_size; ++k) {
    const ComplexMatrix a = ComplexMatrix::Identity(p, p) - m.cast<Complex>() * std::polar(1.0, theta_at(k, grid_size));
    const ComplexMatrix aa = a.adjoint() * a;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(aa, Eigen::EigenvaluesOnly);
    out.mu_min = std::min(out.mu_min, es.eigenvalues()(0));
    out.mu_max = std::max(out.mu_max, es.eigenvalues()(p - 1));
  }
  return out;
}

BoundsReport spectrum_bounds_check(const ModelParams& params, int grid_size) {
  const SpectralSummary s = spectral_density_W(params, grid_size);
  const Matrix g = assemble_g(params.A, params.B, params.C);
  Eigen::SelfAdjointEigenSolver<Matrix> eu(inverse_spd(params.omega_u, "omega_u"), Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> ev(inverse_spd(params.omega_v, "omega_v"), Eigen::EigenvaluesOnly);
  const double lam_min = std::min(eu.eigenvalues().minCoeff(), ev.eigenvalues().minCoeff());
  const double lam_max = std::max(eu.eigenvalues().maxCoeff(), ev.eigenvalues().maxCoeff());
  const double norm_inf = g.cwiseAbs().rowwise().sum().maxCoeff();
  const double norm_one = g.cwiseAbs().colwise().sum().maxCoeff();
  const double rho_blocks = std::max(spectral_radius(params.A), spectral_radius(params.C));

  Eigen::EigenSolver<Matrix> es(g);
  double cond_p = std::numeric_limits<double>::infinity();
  if (es.info() == Eigen::Success) {
    Eigen::JacobiSVD<ComplexMatrix> svd(es.eigenvectors());
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) > 0.0) cond_p = sv(0) / sv(sv.size() - 1);
  }
  const double corrected = std::isfinite(cond_p) ? std::pow(1.0 - spectral_radius(g), 2) / (cond_p * cond_p) : 0.0;

  BoundsReport r;
  const double lower_rhs = lam_min / (2.0 * kPi * s.mu_max_g);
  const double upper_rhs = lam_max / (2.0 * kPi * s.mu_min_g);
  const double mu_max_rhs = std::pow(1.0 + 0.5 * (norm_inf + norm_one), 2);
  const double mu_min_rhs = std::pow(1.0 - rho_blocks, 2);
  r.checks.push_back({"spectral_density_lower", s.m_lower, lower_rhs, s.m_lower - lower_rhs});
  r.checks.push_back({"spectral_density_upper", s.M_upper, upper_rhs, upper_rhs - s.M_upper});
  r.checks.push_back({"mu_max_upper", s.mu_max_g, mu_max_rhs, mu_max_rhs - s.mu_max_g});
  r.checks.push_back({"mu_min_lower", s.mu_min_g, mu_min_rhs, s.mu_min_g - mu_min_rhs});
  r.checks.push_back({"mu_min_lower_eigvec", s.mu_min_g, corrected, s.mu_min_g - corrected});
  r.min_margin = std::numeric_limits<double>::infinity();
  for (const BoundCheck& c : r.checks) r.min_margin = std::min(r.min_margin, c.margin);
  return r;
}

}  // namespace tbvar
