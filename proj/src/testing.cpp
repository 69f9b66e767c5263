#include "tbvar/testing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tbvar/error.hpp"
#include "tbvar/estimate.hpp"

namespace tbvar {

std::string to_string(TestMethod m) {
  switch (m) {
    case TestMethod::rank: return "rank";
    case TestMethod::granger: return "granger";
    case TestMethod::higher_criticism: return "hc";
  }
  return "unknown";
}

TestMethod parse_test_method(const std::string& s) {
  if (s == "rank") return TestMethod::rank;
  if (s == "granger") return TestMethod::granger;
  if (s == "hc" || s == "higher_criticism") return TestMethod::higher_criticism;
  throw InvalidArgument("unknown test method '" + s + "' (expected rank|granger|hc)");
}

PartialCovariances partial_covariances(const Matrix& x, const Matrix& z) {
  if (z.size() == 0) throw InvalidArgument("partial_covariances: Z panel is required");
  const DesignResponse d = build_design_response(x, z);
  const Eigen::Index n = d.rows(), p2 = d.Z.cols();
  if (p2 >= n)
    throw RankDeficiency("Z'Z", "partial_covariances: lagged Z design needs more rows than columns (p2 < T)");
  Eigen::ColPivHouseholderQR<Matrix> qr(d.Z);
  qr.setThreshold(1e-10);
  if (qr.rank() < p2) throw RankDeficiency("Z'Z", "partial_covariances: lagged Z design is rank deficient");
  const Matrix r1 = d.X - d.Z * qr.solve(d.X);
  const Matrix r0 = d.ZT - d.Z * qr.solve(d.ZT);
  const double inv_t = 1.0 / static_cast<double>(n);
  PartialCovariances s;
  s.S11 = r1.transpose() * r1 * inv_t;
  s.S00 = r0.transpose() * r0 * inv_t;
  s.S10 = r1.transpose() * r0 * inv_t;
  s.T = n;
  return s;
}

namespace {

Eigen::LLT<Matrix> chol_or_throw(const Matrix& m, const char* block) {
  Eigen::LLT<Matrix> llt(m);
  const double scale = std::max(m.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Matrix l = llt.matrixL();
    ok = l.diagonal().minCoeff() > 1e-7 * std::sqrt(scale);
  }
  if (!ok) throw RankDeficiency(block, std::string("partial covariance ") + block + " is singular");
  return llt;
}

// Eigenvalues of L^{-1} M L^{-T} with S00 = L L', descending.
std::vector<double> whitened_eigenvalues(const Matrix& s00, const Matrix& m) {
  const Eigen::LLT<Matrix> llt = chol_or_throw(s00, "S00");
  const Matrix l = llt.matrixL();
  Matrix tmp = l.triangularView<Eigen::Lower>().solve(m);
  Matrix w = l.triangularView<Eigen::Lower>().solve(tmp.transpose());
  w = 0.5 * (w + w.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalBreakdown("eigen solve failed");
  std::vector<double> phi(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(phi.begin(), phi.end(), std::greater<double>());
  return phi;
}

}  // namespace

std::vector<double> canonical_eigenvalues(const PartialCovariances& s) {
  const Eigen::LLT<Matrix> l11 = chol_or_throw(s.S11, "S11");
  const Matrix m = s.S10.transpose() * l11.solve(s.S10);
  return whitened_eigenvalues(s.S00, m);
}

double psi_tail(const std::vector<double>& phi, int r, Eigen::Index p1, Eigen::Index p2) {
  const Eigen::Index m = std::min({p1, p2, static_cast<Eigen::Index>(phi.size())});
  if (r < 0) throw InvalidArgument("psi_tail: r must be >= 0");
  double sum = 0.0;
  for (Eigen::Index k = r; k < m; ++k) sum += phi[k];
  return sum;
}

TestReport rank_test(const Matrix& x, const Matrix& z, int r_null, double alpha) {
  return rank_test(partial_covariances(x, z), r_null, alpha);
}

TestReport rank_test(const PartialCovariances& s, int r_null, double alpha) {
  const Eigen::Index p1 = s.S11.rows(), p2 = s.S00.rows();
  if (r_null < 0 || r_null >= std::min(p1, p2))
    throw InvalidArgument("rank_test: r_null must lie in [0, min(p1, p2))");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("rank_test: alpha must lie in (0, 1)");
  TestReport rep;
  rep.method = TestMethod::rank;
  rep.eigenvalues = canonical_eigenvalues(s);
  rep.statistic = psi_tail(rep.eigenvalues, r_null, p1, p2);
  rep.T = s.T;
  rep.scaled_statistic = static_cast<double>(s.T) * rep.statistic;
  const double dof = static_cast<double>((p1 - r_null) * (p2 - r_null));
  rep.dof = dof;
  rep.alpha = alpha;
  rep.r_null = r_null;
  rep.threshold = chi2_upper_quantile(dof, alpha) / static_cast<double>(s.T);
  rep.p_value = chi2_upper_tail(dof, std::max(0.0, rep.scaled_statistic));
  rep.reject = *rep.p_value < alpha;
  return rep;
}

namespace {

Matrix diag_weighted_cross(const PartialCovariances& s) {
  const Vector d = s.S11.diagonal();
  if (!(d.minCoeff() > 0.0)) throw RankDeficiency("S11", "diag(S11) has a zero entry");
  return s.S10.transpose() * d.cwiseInverse().asDiagonal() * s.S10;
}

}  // namespace

double granger_trace(const PartialCovariances& s) {
  const Eigen::LLT<Matrix> l00 = chol_or_throw(s.S00, "S00");
  return l00.solve(diag_weighted_cross(s)).trace();
}

TestReport granger_test(const Matrix& x, const Matrix& z, double alpha) {
  return granger_test(partial_covariances(x, z), alpha);
}

TestReport granger_test(const PartialCovariances& s, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("granger_test: alpha must lie in (0, 1)");
  const Eigen::Index p1 = s.S11.rows(), p2 = s.S00.rows();
  TestReport rep;
  rep.method = TestMethod::granger;
  rep.eigenvalues = whitened_eigenvalues(s.S00, diag_weighted_cross(s));
  double sum = 0.0;
  for (double v : rep.eigenvalues) sum += v;
  rep.statistic = sum;
  rep.T = s.T;
  rep.scaled_statistic = static_cast<double>(s.T) * sum;
  const double dof = static_cast<double>(p1 * p2);
  rep.dof = dof;
  rep.alpha = alpha;
  rep.r_null = 0;
  rep.threshold = chi2_upper_quantile(dof, alpha) / static_cast<double>(s.T);
  rep.p_value = chi2_upper_tail(dof, std::max(0.0, rep.scaled_statistic));
  rep.reject = rep.statistic > *rep.threshold;
  return rep;
}

Matrix hc_standardized(const PartialCovariances& s) {
  const Vector d1 = s.S11.diagonal(), d0 = s.S00.diagonal();
  if (!(d1.minCoeff() > 0.0)) throw RankDeficiency("S11", "higher criticism: zero-variance X residual");
  if (!(d0.minCoeff() > 0.0)) throw RankDeficiency("S00", "higher criticism: zero-variance Z residual");
  const double rt = std::sqrt(static_cast<double>(s.T));
  Matrix out(s.S10.rows(), s.S10.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = rt * std::abs(s.S10(i, j)) / std::sqrt(d1(i) * d0(j));
  return out;
}

TestReport higher_criticism_test(const Matrix& x, const Matrix& z, const std::vector<double>& t_grid) {
  return higher_criticism_test(partial_covariances(x, z), t_grid);
}

TestReport higher_criticism_test(const PartialCovariances& s, const std::vector<double>& t_grid) {
  const double n = static_cast<double>(s.S11.rows() * s.S00.rows());
  if (n < 3.0) throw InvalidArgument("higher_criticism_test: requires p1 * p2 >= 3");
  std::vector<double> grid = t_grid;
  if (grid.empty()) {
    const int tmax = static_cast<int>(std::floor(std::sqrt(5.0 * std::log(n))));
    for (int t = 1; t <= tmax; ++t) grid.push_back(t);
  }
  for (double t : grid)
    if (!(t > 0.0)) throw InvalidArgument("higher_criticism_test: grid values must be > 0");
  const Matrix stat = hc_standardized(s);
  TestReport rep;
  rep.method = TestMethod::higher_criticism;
  rep.statistic = -std::numeric_limits<double>::infinity();
  for (double t : grid) {
    const double tail = std_normal_upper_tail(t);
    const double frac = static_cast<double>((stat.array() > t).count()) / n;
    const double h = std::sqrt(n / (2.0 * tail * (1.0 - 2.0 * tail))) * (frac - 2.0 * tail);
    rep.statistic = std::max(rep.statistic, h);
  }
  rep.T = s.T;
  rep.scaled_statistic = rep.statistic;
  rep.threshold = 2.0 * std::sqrt(std::log(std::log(n)));
  rep.reject = rep.statistic > *rep.threshold;
  return rep;
}

double std_normal_upper_tail(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw InvalidArgument("regularized_gamma_p: a must be > 0");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return std::min(1.0, sum * std::exp(-x + a * std::log(x) - std::lgamma(a)));
  }
  return 1.0 - chi2_upper_tail(2.0 * a, 2.0 * x);
}

namespace {

// Upper regularized gamma Q(a, x) by the modified Lentz continued fraction (x >= a + 1).
double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chi2_log_density(double k, double x) {
  return (0.5 * k - 1.0) * std::log(x) - 0.5 * x - 0.5 * k * std::log(2.0) - std::lgamma(0.5 * k);
}

}  // namespace

double chi2_upper_tail(double dof, double x) {
  if (!(dof > 0.0)) throw InvalidArgument("chi2_upper_tail: dof must be > 0");
  if (x <= 0.0) return 1.0;
  const double a = 0.5 * dof, h = 0.5 * x;
  if (h < a + 1.0) return 1.0 - regularized_gamma_p(a, h);
  return gamma_q_cf(a, h);
}

double chi2_upper_quantile(double dof, double alpha) {
  if (!(dof >= 1.0)) throw InvalidArgument("chi2_upper_quantile: dof must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("chi2_upper_quantile: alpha must lie in (0, 1)");
  double lo = 0.0, hi = std::max(1.0, dof);
  while (chi2_upper_tail(dof, hi) > alpha) {
    lo = hi;
    hi *= 2.0;
  }
  // Newton on Q(x) - alpha, falling back to bisection outside the bracket.
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double q = chi2_upper_tail(dof, x);
    const double f = q - alpha;
    if (f > 0.0) lo = x;
    else hi = x;
    const double dens = std::exp(chi2_log_density(dof, x));
    double next = dens > 0.0 ? x + f / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, x)) return next;
    x = next;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return x;
}

CalibrationResult subsample_calibration(const Matrix& x, const Matrix& z,
                                        const std::function<bool(const Matrix&, const Matrix&)>& test,
                                        int n_subsamples, Eigen::Index block_length, Rng& rng) {
  const Eigen::Index T = x.rows();
  if (z.rows() != T) throw InvalidArgument("subsample_calibration: X and Z lengths differ");
  if (n_subsamples < 1) throw InvalidArgument("subsample_calibration: n_subsamples must be >= 1");
  if (block_length < 3 || block_length > T)
    throw InvalidArgument("subsample_calibration: block_length must lie in [3, T]");
  CalibrationResult out;
  out.n_subsamples = n_subsamples;
  out.block_length = block_length;
  int rejections = 0;
  const std::uint64_t starts = static_cast<std::uint64_t>(T - block_length + 1);
  for (int k = 0; k < n_subsamples; ++k) {
    const Eigen::Index s = static_cast<Eigen::Index>(rng.index(starts));
    try {
      if (test(x.middleRows(s, block_length), z.middleRows(s, block_length))) ++rejections;
    } catch (const Error&) {
      ++out.failures;
    }
  }
  const int valid = n_subsamples - out.failures;
  if (valid == 0) throw DegenerateInput("subsample_calibration: the test failed on every subsample");
  out.rate = static_cast<double>(rejections) / static_cast<double>(valid);
  return out;
}

}  // namespace tbvar
