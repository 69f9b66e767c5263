#include "tbvar/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "tbvar/error.hpp"
#include "tbvar/solvers.hpp"

namespace tbvar {

SupportMetrics support_metrics(const Matrix& est, const Matrix& truth, double zero_tol) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw InvalidArgument("support_metrics: estimate and truth differ in shape");
  if (!(zero_tol > 0.0)) throw InvalidArgument("support_metrics: zero_tol must be > 0");
  SupportMetrics m;
  for (Eigen::Index i = 0; i < est.rows(); ++i)
    for (Eigen::Index j = 0; j < est.cols(); ++j) {
      const bool e = std::abs(est(i, j)) > zero_tol, t = std::abs(truth(i, j)) > zero_tol;
      if (e && t) ++m.tp;
      else if (e) ++m.fp;
      else if (t) ++m.fn;
      else ++m.tn;
    }
  if (m.tp + m.fn > 0) m.sen = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.tn + m.fp > 0) m.spc = static_cast<double>(m.tn) / static_cast<double>(m.tn + m.fp);
  const double tn = truth.norm();
  if (tn > 0.0) m.error = (est - truth).norm() / tn;
  return m;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw InvalidArgument("log_grid: need 0 < lo <= hi and n >= 1");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    g[i] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
  }
  return g;
}

namespace {

double nnz(const Matrix& m, double tol) { return static_cast<double>((m.array().abs() > tol).count()); }

double gaussian_deviance(const Matrix& omega, const Matrix& s, Eigen::Index T) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) throw NumericalBreakdown("bic: precision is not positive definite");
  const Matrix l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  return static_cast<double>(T) * (omega.cwiseProduct(s).sum() - logdet);
}

bool better(const BicPoint& a, const BicPoint& b) {
  if (a.score != b.score) return a.score < b.score;
  if (a.lambda1 != b.lambda1) return a.lambda1 > b.lambda1;
  return a.lambda2 > b.lambda2;
}

}  // namespace

double degrees_of_freedom(const FitResult& fit, double zero_tol) {
  if (!fit.block2) return nnz(fit.params.A, zero_tol);
  const ModelParams& p = fit.params;
  double df = nnz(p.C, zero_tol);
  if (p.b_structure == BStructure::low_rank) {
    const double r = rank_of(p.B);
    df += r * (static_cast<double>(p.B.rows() + p.B.cols()) - r);
  } else {
    df += nnz(p.B, zero_tol);
  }
  return df;
}

double bic_block1(const DesignResponse& d, const FitResult& fit) {
  const double inv_t = 1.0 / static_cast<double>(d.rows());
  const Matrix r = d.XT - d.X * fit.params.A.transpose();
  const Matrix s = r.transpose() * r * inv_t;
  return gaussian_deviance(fit.params.omega_u, s, d.rows()) +
         std::log(static_cast<double>(d.rows())) * degrees_of_freedom(fit);
}

double bic_block2(const DesignResponse& d, const FitResult& fit) {
  const double inv_t = 1.0 / static_cast<double>(d.rows());
  const Matrix r = d.ZT - d.X * fit.params.B.transpose() - d.Z * fit.params.C.transpose();
  const Matrix s = r.transpose() * r * inv_t;
  return gaussian_deviance(fit.params.omega_v, s, d.rows()) +
         std::log(static_cast<double>(d.rows())) * degrees_of_freedom(fit);
}

namespace {

template <typename Fit, typename Score>
BicResult bic_search(std::vector<std::pair<double, double>> points, const EstimationConfig& base, Fit fit_at,
                     Score score_of) {
  if (points.empty()) throw InvalidArgument("bic_select: empty grid");
  BicResult out;
  bool have = false;
  std::string errors;
  for (const auto& [l1, l2] : points) {
    BicPoint pt;
    pt.lambda1 = l1;
    pt.lambda2 = l2;
    try {
      EstimationConfig cfg = fit_at(base, l1, l2);
      FitResult fit = score_of.fit(cfg);
      pt.df = degrees_of_freedom(fit);
      pt.score = score_of.score(fit);
      pt.ok = std::isfinite(pt.score);
      if (pt.ok && (!have || better(pt, out.best))) {
        out.best = pt;
        out.config = cfg;
        out.fit = std::move(fit);
        have = true;
      }
    } catch (const Error& e) {
      pt.error = e.what();
      errors += "(" + std::to_string(l1) + ", " + std::to_string(l2) + "): " + e.what() + "; ";
    }
    out.surface.push_back(pt);
  }
  if (!have) throw NumericalBreakdown("bic_select: every lattice point failed: " + errors);
  return out;
}

}  // namespace

BicResult bic_select_block1(const DesignResponse& d, const std::vector<double>& lambda_a, const EstimationConfig& base) {
  std::vector<std::pair<double, double>> pts;
  for (double l : lambda_a) pts.emplace_back(l, 0.0);
  struct {
    const DesignResponse& d;
    FitResult fit(const EstimationConfig& c) const { return estimate_block1(d, c); }
    double score(const FitResult& f) const { return bic_block1(d, f); }
  } scorer{d};
  return bic_search(
      pts, base,
      [](EstimationConfig c, double l1, double) {
        c.lambda_a = l1;
        return c;
      },
      scorer);
}

BicResult bic_select_block2(const DesignResponse& d, const std::vector<double>& lambda_b,
                            const std::vector<double>& lambda_c, const EstimationConfig& base) {
  std::vector<std::pair<double, double>> pts;
  for (double lb : lambda_b)
    for (double lc : lambda_c) pts.emplace_back(lb, lc);
  struct {
    const DesignResponse& d;
    FitResult fit(const EstimationConfig& c) const { return estimate_block2(d, c); }
    double score(const FitResult& f) const { return bic_block2(d, f); }
  } scorer{d};
  return bic_search(
      pts, base,
      [](EstimationConfig c, double l1, double l2) {
        c.lambda_b = l1;
        c.lambda_c = l2;
        return c;
      },
      scorer);
}

std::vector<WindowFit> rolling_windows(const Matrix& x, const Matrix& z, Eigen::Index window_length, Eigen::Index step,
                                       const EstimationConfig& cfg) {
  const Eigen::Index T = x.rows();
  if (step < 1) throw InvalidArgument("rolling_windows: step must be >= 1");
  if (window_length < 3 || window_length > T) throw InvalidArgument("rolling_windows: window_length must lie in [3, T]");
  if (z.size() > 0 && z.rows() != T) throw InvalidArgument("rolling_windows: X and Z lengths differ");
  const Eigen::Index count = (T - window_length) / step + 1;
  std::vector<WindowFit> out;
  out.reserve(count);
  for (Eigen::Index w = 0; w < count; ++w) {
    WindowFit fit;
    fit.start = w * step;
    const Matrix xw = x.middleRows(fit.start, window_length);
    fit.block1 = estimate_block1(xw, cfg);
    if (z.size() > 0) fit.block2 = estimate_block2(xw, z.middleRows(fit.start, window_length), cfg);
    out.push_back(std::move(fit));
  }
  return out;
}

Matrix stability_selection(const std::vector<Matrix>& estimates, double threshold, double zero_tol) {
  if (estimates.empty()) throw InvalidArgument("stability_selection: no estimates");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("stability_selection: threshold must lie in (0, 1]");
  const Eigen::Index r = estimates[0].rows(), c = estimates[0].cols();
  Matrix count = Matrix::Zero(r, c);
  for (const Matrix& m : estimates) {
    if (m.rows() != r || m.cols() != c) throw InvalidArgument("stability_selection: estimates differ in shape");
    count += (m.array().abs() > zero_tol).cast<double>().matrix();
  }
  const double n = static_cast<double>(estimates.size());
  return ((count.array() / n) >= threshold - 1e-12).cast<double>().matrix();
}

double global_clustering_coefficient(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw InvalidArgument("global_clustering_coefficient: matrix must be square");
  const Eigen::Index n = adjacency.rows();
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && (adjacency(i, j) != 0.0 || adjacency(j, i) != 0.0)) a(i, j) = 1.0;
  const Matrix a2 = a * a;
  const double closed_walks = (a2.cwiseProduct(a)).sum();  // 6 x triangles
  double triples = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a.row(i).sum();
    triples += 0.5 * d * (d - 1.0);
  }
  if (triples == 0.0) return 0.0;
  return 3.0 * (closed_walks / 6.0) / triples;
}

namespace {

// Rows of cross scaled by the inverse response variances raised to `power`.
Matrix precision_weighted(const Matrix& response, const Matrix& design, double power = 1.0) {
  const double inv_t = 1.0 / static_cast<double>(response.rows());
  Vector var = response.colwise().squaredNorm().transpose() * inv_t;
  for (Eigen::Index i = 0; i < var.size(); ++i)
    if (!(var(i) > 0.0)) var(i) = 1.0;
  const Vector scale = var.array().pow(-power).matrix();
  return scale.asDiagonal() * (response.transpose() * design * inv_t);
}

}  // namespace

double lambda_max_a(const DesignResponse& d) {
  return 2.0 * precision_weighted(d.XT, d.X).cwiseAbs().maxCoeff();
}

double lambda_max_b(const DesignResponse& d, BStructure structure) {
  if (structure == BStructure::low_rank) {
    Eigen::JacobiSVD<Matrix> svd(precision_weighted(d.ZT, d.X, 0.5));
    return 2.0 * svd.singularValues()(0);
  }
  return 2.0 * precision_weighted(d.ZT, d.X).cwiseAbs().maxCoeff();
}

double lambda_max_c(const DesignResponse& d) {
  return 2.0 * precision_weighted(d.ZT, d.Z).cwiseAbs().maxCoeff();
}

double penalty_scale(Eigen::Index p, Eigen::Index T) {
  return std::sqrt(std::log(static_cast<double>(std::max<Eigen::Index>(p, 2))) / static_cast<double>(T));
}

namespace {

bool trace_non_increasing(const std::vector<double>& trace, double tol = 1e-9) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1] + tol) return false;
  return true;
}

void put_metrics(std::map<std::string, double>& v, const std::string& key, const SupportMetrics& m,
                 const std::string& suffix = "") {
  if (m.sen) v[key + ".sen" + suffix] = *m.sen;
  if (m.spc) v[key + ".spc" + suffix] = *m.spc;
  if (m.error) v[key + ".error" + suffix] = *m.error;
}

}  // namespace

ReplicationRecord run_replication(const ExperimentSpec& spec, const ExperimentOptions& opts, int index) {
  ReplicationRecord rec;
  rec.index = index;
  try {
    Rng rng(split_seed(spec.seed, static_cast<std::uint64_t>(index)));
    const ModelParams truth = generate_params(spec, rng);
    const Eigen::Index extra = opts.forecast ? 1 : 0;
    const Panel panel = simulate_system(truth, spec.T + extra, spec.noise, spec.burn_in, rng);
    const Matrix x = panel.X.topRows(spec.T), z = panel.Z.topRows(spec.T);
    const DesignResponse d = build_design_response(x, z);
    const Eigen::Index n = d.rows();

    EstimationConfig cfg = opts.base;
    cfg.b_structure = spec.b_structure == BStructure::zero ? BStructure::low_rank : spec.b_structure;
    const TuningSpec& tu = opts.tuning;
    cfg.rho_u = tu.rho_mult * penalty_scale(spec.p1, n);
    cfg.rho_v = tu.rho_mult * penalty_scale(spec.p2, n);
    const double ma = lambda_max_a(d), mxb = lambda_max_b(d, cfg.b_structure), mc = lambda_max_c(d);

    FitResult f1, f2;
    if (tu.use_bic) {
      const int g = tu.grid_points;
      BicResult b1 = bic_select_block1(d, log_grid(tu.a_lo * ma, tu.a_hi * ma, tu.a_points), cfg);
      BicResult b2 = bic_select_block2(d, log_grid(tu.b_lo * mxb, tu.b_hi * mxb, g),
                                       log_grid(tu.c_lo * mc, tu.c_hi * mc, g), cfg);
      f1 = std::move(b1.fit);
      f2 = std::move(b2.fit);
      rec.values["lambda_a"] = b1.best.lambda1 / ma;
      rec.values["lambda_b"] = b2.best.lambda1 / mxb;
      rec.values["lambda_c"] = b2.best.lambda2 / mc;
    } else {
      cfg.lambda_a = tu.a_frac * ma;
      cfg.lambda_b = tu.b_frac * mxb;
      cfg.lambda_c = tu.c_frac * mc;
      f1 = estimate_block1(d, cfg);
      f2 = estimate_block2(d, cfg);
      rec.values["lambda_a"] = tu.a_frac;
      rec.values["lambda_b"] = tu.b_frac;
      rec.values["lambda_c"] = tu.c_frac;
    }

    auto& v = rec.values;
    put_metrics(v, "A", support_metrics(f1.params.A, truth.A));
    put_metrics(v, "C", support_metrics(f2.params.C, truth.C));
    const SupportMetrics mb = support_metrics(f2.params.B, truth.B);
    if (mb.error) v["B.error"] = *mb.error;
    if (spec.b_structure == BStructure::sparse) put_metrics(v, "B", mb);
    v["B.rank"] = rank_of(f2.params.B);
    v["A.fro"] = (f1.params.A - truth.A).norm();
    Matrix bc_est(spec.p2, spec.p1 + spec.p2), bc_true(spec.p2, spec.p1 + spec.p2);
    bc_est << f2.params.B, f2.params.C;
    bc_true << truth.B, truth.C;
    v["BC.fro"] = (bc_est - bc_true).norm();
    put_metrics(v, "A", support_metrics(f1.initial.A, truth.A), "_twostep");
    put_metrics(v, "C", support_metrics(f2.initial.C, truth.C), "_twostep");
    const SupportMetrics b0 = support_metrics(f2.initial.B, truth.B);
    if (b0.error) v["B.error_twostep"] = *b0.error;
    if (spec.b_structure == BStructure::sparse) put_metrics(v, "B", b0, "_twostep");
    v["B.rank_twostep"] = rank_of(f2.initial.B);
    v["trace_ok"] = trace_non_increasing(f1.objective_trace) && trace_non_increasing(f2.objective_trace) ? 1.0 : 0.0;
    v["converged"] = f1.converged && f2.converged ? 1.0 : 0.0;
    v["outer_iters.A"] = f1.outer_iterations;
    v["outer_iters.BC"] = f2.outer_iterations;

    if (opts.forecast) {
      const ModelParams est = combine(f1, f2);
      const Vector x_last = panel.X.row(spec.T - 1).transpose(), z_last = panel.Z.row(spec.T - 1).transpose();
      const Forecast fc = forecast_one_step(est, x_last, z_last);
      const Vector x_next = panel.X.row(spec.T).transpose(), z_next = panel.Z.row(spec.T).transpose();
      v["forecast.x"] = (fc.x - x_next).norm() / x_next.norm();
      v["forecast.z"] = (fc.z - z_next).norm() / z_next.norm();
    }
    rec.ok = true;
  } catch (const Error& e) {
    rec.error = e.what();
  }
  return rec;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const ExperimentOptions& opts) {
  spec.validate();
  ExperimentReport rep;
  rep.spec = spec;
  rep.records.resize(spec.replications);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < spec.replications; i = next++) rep.records[i] = run_replication(spec, opts, i);
  };
  const int threads = std::max(1, std::min(opts.threads, spec.replications));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::map<std::string, std::vector<double>> columns;
  for (const ReplicationRecord& r : rep.records) {
    if (!r.ok) {
      ++rep.failures;
      continue;
    }
    for (const auto& [k, val] : r.values) columns[k].push_back(val);
  }
  for (const auto& [k, vals] : columns) rep.summary[k] = summarize(vals);
  return rep;
}

CalibrationResult run_calibration(const CalibrationSpec& spec) {
  spec.model.validate();
  if (spec.block_length < 3) throw InvalidArgument("calibration: block_length must be >= 3");
  Rng rng(split_seed(spec.model.seed, 0));
  const ModelParams truth = generate_params(spec.model, rng);
  const Eigen::Index len = spec.series_length > 0 ? spec.series_length : 50 * spec.block_length;
  const Panel panel = simulate_system(truth, len, spec.model.noise, spec.model.burn_in, rng);
  Rng sub(split_seed(spec.model.seed, 1));
  const TestMethod method = spec.method;
  const int r = spec.r_null;
  const double alpha = spec.alpha;
  auto test = [method, r, alpha](const Matrix& x, const Matrix& z) {
    switch (method) {
      case TestMethod::rank: return rank_test(x, z, r, alpha).reject;
      case TestMethod::granger: return granger_test(x, z, alpha).reject;
      case TestMethod::higher_criticism: return higher_criticism_test(x, z).reject;
    }
    return false;
  };
  return subsample_calibration(panel.X, panel.Z, test, spec.n_subsamples, spec.block_length, sub);
}

}  // namespace tbvar
