#include "oracles.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "tbvar/estimate.hpp"
#include "tbvar/simulate.hpp"

namespace oracle {

Matrix svt(const Matrix& m, double tau) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.transpose() * m);
  Vector scale(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    const double s = std::sqrt(std::max(es.eigenvalues()(i), 0.0));
    scale(i) = s > tau ? (s - tau) / s : 0.0;
  }
  return m * es.eigenvectors() * scale.asDiagonal() * es.eigenvectors().transpose();
}

double lasso_kkt_violation(const Matrix& design, const Vector& response, const Vector& offset, double weight,
                           double lambda, const Vector& beta) {
  const double n = static_cast<double>(design.rows());
  const Vector grad = (2.0 * weight / n) * design.transpose() * (response + offset - design * beta);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    if (beta(k) == 0.0)
      worst = std::max(worst, std::abs(grad(k)) - lambda);
    else
      worst = std::max(worst, std::abs(grad(k) - lambda * (beta(k) > 0 ? 1.0 : -1.0)));
  }
  return worst;
}

double matrix_lasso_kkt_violation(const Matrix& gradient, const Matrix& k, double lambda) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
      const double g = gradient(i, j);
      if (k(i, j) == 0.0)
        worst = std::max(worst, std::abs(g) - lambda);
      else
        worst = std::max(worst, std::abs(g + lambda * (k(i, j) > 0 ? 1.0 : -1.0)));
    }
  return worst;
}

Matrix glasso_dual(const Matrix& s, double rho, int iters) {
  const Eigen::Index p = s.rows();
  Matrix u = Matrix::Zero(p, p);
  const double step = 0.5 * std::pow(Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff(), 2);
  for (int it = 0; it < iters; ++it) {
    const Matrix w = (s + u).inverse();
    u += step * w;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) u(i, j) = i == j ? 0.0 : std::clamp(u(i, j), -rho, rho);
    u = 0.5 * (u + u.transpose());
  }
  return (s + u).inverse();
}

Matrix lyapunov_kron(const Matrix& g, const Matrix& sigma) {
  const Eigen::Index p = g.rows();
  Matrix kron(p * p, p * p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) kron.block(i * p, j * p, p, p) = g(i, j) * g;
  const Matrix lhs = Matrix::Identity(p * p, p * p) - kron;
  const Vector vec = Eigen::Map<const Vector>(sigma.data(), p * p);
  const Vector sol = lhs.partialPivLu().solve(vec);
  return Eigen::Map<const Matrix>(sol.data(), p, p);
}

tbvar::PartialCovariances partial_covariances(const Matrix& x, const Matrix& z) {
  const Eigen::Index n = x.rows() - 1;
  const Matrix xc = x.rowwise() - x.colwise().mean(), zc = z.rowwise() - z.colwise().mean();
  const Matrix xl = xc.topRows(n), zl = zc.topRows(n), zr = zc.bottomRows(n);
  const Eigen::LDLT<Matrix> zz(zl.transpose() * zl);
  const Matrix r1 = xl - zl * zz.solve(zl.transpose() * xl);
  const Matrix r0 = zr - zl * zz.solve(zl.transpose() * zr);
  tbvar::PartialCovariances s;
  s.S11 = r1.transpose() * r1 / static_cast<double>(n);
  s.S00 = r0.transpose() * r0 / static_cast<double>(n);
  s.S10 = r1.transpose() * r0 / static_cast<double>(n);
  s.T = n;
  return s;
}

namespace {

Matrix inv_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.operatorInverseSqrt();
}

}  // namespace

std::vector<double> canonical_eigenvalues(const tbvar::PartialCovariances& s) {
  const Matrix k = inv_sqrt(s.S00) * s.S10.transpose() * inv_sqrt(s.S11);
  Eigen::JacobiSVD<Matrix> svd(k);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) out.push_back(std::pow(svd.singularValues()(i), 2));
  return out;
}

double chi2_upper_quantile(double dof, double alpha) {
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared(dof), alpha));
}

double chi2_cdf(double dof, double x) { return boost::math::cdf(boost::math::chi_squared(dof), x); }

double ar1_spectrum(double a, double s2, double theta) {
  return s2 / (2.0 * M_PI * (1.0 - 2.0 * a * std::cos(theta) + a * a));
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

double clustering_brute_force(const Matrix& adjacency) {
  const Eigen::Index p = adjacency.rows();
  auto edge = [&](Eigen::Index i, Eigen::Index j) {
    return i != j && (adjacency(i, j) != 0.0 || adjacency(j, i) != 0.0);
  };
  double closed = 0.0, triples = 0.0;
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = a + 1; b < p; ++b) {
        if (a == c || b == c || !edge(a, c) || !edge(b, c)) continue;
        triples += 1.0;
        if (edge(a, b)) closed += 1.0;
      }
  return triples > 0.0 ? closed / triples : 0.0;
}

tbvar::ModelParams random_stable_system(Eigen::Index p1, Eigen::Index p2, tbvar::Rng& rng) {
  auto random_matrix = [&rng](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
  };
  auto scaled = [&](Eigen::Index p) {
    Matrix m = random_matrix(p, p);
    return Matrix(m * (rng.uniform(0.1, 0.95) / tbvar::spectral_radius(m)));
  };
  auto spd = [&](Eigen::Index p) {
    const Matrix m = random_matrix(p, p);
    return Matrix(m * m.transpose() / static_cast<double>(p) + 0.5 * Matrix::Identity(p, p));
  };
  tbvar::ModelParams params;
  params.A = scaled(p1);
  params.C = scaled(p2);
  params.B = random_matrix(p2, p1) * rng.uniform(0.0, 1.0);
  params.omega_u = spd(p1);
  params.omega_v = spd(p2);
  return params;
}

}  // namespace oracle
