#include "tbvar/estimate.hpp"

#include <algorithm>
#include <cmath>

#include "tbvar/error.hpp"
#include "tbvar/solvers.hpp"

namespace tbvar {

DesignResponse build_design_response(const Matrix& x, const Matrix& z) {
  if (x.rows() < 2) throw InvalidArgument("build_design_response: need at least 2 observations");
  if (x.cols() < 1) throw InvalidArgument("build_design_response: X has no columns");
  const bool has_z = z.size() > 0;
  if (has_z && z.rows() != x.rows())
    throw InvalidArgument("build_design_response: X and Z have different lengths (" + std::to_string(x.rows()) +
                          " vs " + std::to_string(z.rows()) + ")");
  const Eigen::Index n = x.rows() - 1;
  const Matrix xc = x.rowwise() - x.colwise().mean();
  DesignResponse d;
  d.X = xc.topRows(n);
  d.XT = xc.bottomRows(n);
  if (has_z) {
    const Matrix zc = z.rowwise() - z.colwise().mean();
    d.Z = zc.topRows(n);
    d.ZT = zc.bottomRows(n);
    d.W.resize(n, x.cols() + z.cols());
    d.W << d.X, d.Z;
  } else {
    d.Z = Matrix(n, 0);
    d.ZT = Matrix(n, 0);
    d.W = d.X;
  }
  return d;
}

void EstimationConfig::validate() const {
  for (double v : {lambda_a, lambda_b, lambda_c, rho_u, rho_v})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("EstimationConfig: penalties must be finite and >= 0");
  if (max_joint_iters < 1) throw InvalidArgument("EstimationConfig: max_joint_iters must be >= 1");
  ctrl.validate();
}

int rank_of(const Matrix& m, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("rank_of: tol must be > 0");
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (!(s(0) > 0.0)) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol * s(0)) ++r;
  return r;
}

Forecast forecast_one_step(const ModelParams& params, const Vector& x_last, const Vector& z_last) {
  if (params.A.rows() != params.A.cols() || x_last.size() != params.A.cols())
    throw InvalidArgument("forecast_one_step: A and x_T do not conform");
  Forecast f;
  f.x = params.A * x_last;
  if (z_last.size() > 0 || params.C.size() > 0) {
    if (params.C.cols() != z_last.size() || params.B.rows() != params.C.rows() || params.B.cols() != x_last.size())
      throw InvalidArgument("forecast_one_step: B, C and z_T do not conform");
    f.z = params.B * x_last + params.C * z_last;
  }
  return f;
}

namespace {

double logdet_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument("precision matrix is not positive definite");
  const Matrix l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

double weighted_trace(const Matrix& omega, const Matrix& s) {
  return omega.size() == 0 ? s.trace() : omega.cwiseProduct(s).sum();
}

double relative_gap(double before, double after) {
  return std::abs(before - after) / std::max(std::abs(before), 1e-300);
}

// Second moments shared by every fit on one design.
struct Block1Moments {
  QuadraticLoss loss;  // gram = X'X/T, cross = XT'X/T, syy = XT'XT/T
};

Block1Moments block1_moments(const DesignResponse& d) {
  const double inv_t = 1.0 / static_cast<double>(d.rows());
  Block1Moments m;
  m.loss.gram = d.X.transpose() * d.X * inv_t;
  m.loss.cross = d.XT.transpose() * d.X * inv_t;
  m.loss.syy = d.XT.transpose() * d.XT * inv_t;
  return m;
}

struct Block2Moments {
  Matrix gxx, gzz, gxz, syy, sxy, szy;

  // Loss in B with C fixed.
  QuadraticLoss b_loss(const Matrix& c, const Matrix& omega) const {
    QuadraticLoss l;
    l.gram = gxx;
    l.cross = sxy.transpose() - c * gxz.transpose();
    const Matrix cs = c * szy;
    l.syy = syy - cs - cs.transpose() + c * gzz * c.transpose();
    l.weight = omega;
    return l;
  }
  // Loss in C with B fixed.
  QuadraticLoss c_loss(const Matrix& b, const Matrix& omega) const {
    QuadraticLoss l;
    l.gram = gzz;
    l.cross = szy.transpose() - b * gxz;
    const Matrix bs = b * sxy;
    l.syy = syy - bs - bs.transpose() + b * gxx * b.transpose();
    l.weight = omega;
    return l;
  }
  Matrix residual_covariance(const Matrix& b, const Matrix& c) const {
    const Matrix bs = b * sxy, cs = c * szy, bc = b * gxz * c.transpose();
    return syy - bs - bs.transpose() - cs - cs.transpose() + b * gxx * b.transpose() + bc + bc.transpose() +
           c * gzz * c.transpose();
  }
};

Block2Moments block2_moments(const DesignResponse& d) {
  const double inv_t = 1.0 / static_cast<double>(d.rows());
  Block2Moments m;
  m.gxx = d.X.transpose() * d.X * inv_t;
  m.gzz = d.Z.transpose() * d.Z * inv_t;
  m.gxz = d.X.transpose() * d.Z * inv_t;
  m.syy = d.ZT.transpose() * d.ZT * inv_t;
  m.sxy = d.X.transpose() * d.ZT * inv_t;
  m.szy = d.Z.transpose() * d.ZT * inv_t;
  return m;
}

double b_penalty(const Matrix& b, const EstimationConfig& cfg) {
  switch (cfg.b_structure) {
    case BStructure::low_rank:
      return cfg.lambda_b * nuclear_norm(b);
    case BStructure::sparse: return cfg.lambda_b * l1_norm(b);
    case BStructure::zero: return 0.0;
  }
  return 0.0;
}

// Objective without the log-determinant and Omega penalty.
double block1_smooth(const Block1Moments& m, const Matrix& a, const Matrix& omega, const EstimationConfig& cfg) {
  return weighted_trace(omega, m.loss.residual_covariance(a)) + cfg.lambda_a * l1_norm(a);
}

double block2_smooth(const Block2Moments& m, const Matrix& b, const Matrix& c, const Matrix& omega,
                     const EstimationConfig& cfg) {
  return weighted_trace(omega, m.residual_covariance(b, c)) + b_penalty(b, cfg) + cfg.lambda_c * l1_norm(c);
}

double precision_terms(const Matrix& omega, double rho) {
  if (omega.size() == 0) return 0.0;
  return -logdet_spd(omega) + rho * l1_off_diagonal(omega);
}

Matrix sym_sqrt(const Matrix& s, bool inverse) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success) throw NumericalBreakdown("matrix square root: eigensolver failed");
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  if (inverse) {
    if (!(ev.minCoeff() > 0.0)) throw NumericalBreakdown("matrix square root: singular precision");
    ev = ev.cwiseInverse();
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Updates Omega by graphical lasso on `s`, keeping the old value if the
// objective would not decrease.
void precision_step(const Matrix& s, double rho, const SolverControl& ctrl, Matrix& omega) {
  Matrix candidate = graphical_lasso(s, rho, ctrl);
  const Matrix current = omega.size() == 0 ? Matrix::Identity(s.rows(), s.cols()) : omega;
  const double before = weighted_trace(current, s) + precision_terms(current, rho);
  const double after = weighted_trace(candidate, s) + precision_terms(candidate, rho);
  if (after <= before) omega = std::move(candidate);
  else omega = current;
}

// Block-coordinate descent on (B, C) for a fixed Omega. Returns sweeps used.
int joint_bc(const Block2Moments& m, const Matrix& omega, const EstimationConfig& cfg, Matrix& b, Matrix& c,
             int& inner, bool& ok) {
  double f = block2_smooth(m, b, c, omega, cfg);
  ok = false;
  int sweep = 0;
  while (sweep < cfg.max_joint_iters) {
    ++sweep;
    const Matrix b_old = b, c_old = c;
    if (cfg.b_structure != BStructure::zero) {
      const QuadraticLoss lb = m.b_loss(c, omega);
      int it = 0;
      bool conv = true;
      if (cfg.b_structure == BStructure::sparse) {
        b = row_cyclic_lasso(lb, cfg.lambda_b, b, cfg.ctrl, &it, &conv);
      } else if (cfg.whiten_b && omega.size() != 0) {
        const Matrix root = sym_sqrt(omega, false);
        QuadraticLoss lw;
        lw.gram = lb.gram;
        lw.cross = root * lb.cross;
        lw.syy = root * lb.syy * root;
        const Matrix bt = nuclear_prox_gradient(lw, cfg.lambda_b, cfg.accelerate, root * b, cfg.ctrl, nullptr, 0.0,
                                                &it, &conv);
        b = sym_sqrt(omega, true) * bt;
      } else {
        b = nuclear_prox_gradient(lb, cfg.lambda_b, cfg.accelerate, b, cfg.ctrl, nullptr, 0.0, &it, &conv);
      }
      inner += it;
    }
    {
      int it = 0;
      bool conv = true;
      c = row_cyclic_lasso(m.c_loss(b, omega), cfg.lambda_c, c, cfg.ctrl, &it, &conv);
      inner += it;
    }
    const double next = block2_smooth(m, b, c, omega, cfg);
    const double change = std::max(b.size() ? (b - b_old).cwiseAbs().maxCoeff() : 0.0,
                                   c.size() ? (c - c_old).cwiseAbs().maxCoeff() : 0.0);
    const bool small = relative_gap(f, next) < cfg.ctrl.rel_tol;
    f = next;
    if (small || change < cfg.ctrl.abs_tol) {
      ok = true;
      break;
    }
  }
  return sweep;
}

}  // namespace

double block1_objective(const DesignResponse& d, const Matrix& a, const Matrix& omega_u, const EstimationConfig& cfg) {
  const Block1Moments m = block1_moments(d);
  return block1_smooth(m, a, omega_u, cfg) + precision_terms(omega_u, cfg.rho_u);
}

double block2_objective(const DesignResponse& d, const Matrix& b, const Matrix& c, const Matrix& omega_v,
                        const EstimationConfig& cfg) {
  if (!d.has_z()) throw InvalidArgument("block2_objective: design has no Z block");
  const Block2Moments m = block2_moments(d);
  return block2_smooth(m, b, c, omega_v, cfg) + precision_terms(omega_v, cfg.rho_v);
}

double penalized_objective(const ModelParams& params, const Matrix& x, const Matrix& z, const EstimationConfig& cfg) {
  const DesignResponse d = build_design_response(x, z);
  double total = 0.0;
  if (params.A.size() > 0) {
    if (params.A.rows() != d.X.cols() || params.omega_u.rows() != d.X.cols())
      throw InvalidArgument("penalized_objective: A/omega_u do not match X");
    total += block1_objective(d, params.A, params.omega_u, cfg);
  }
  if (params.C.size() > 0 && d.has_z()) {
    if (params.C.rows() != d.Z.cols() || params.B.rows() != d.Z.cols() || params.B.cols() != d.X.cols() ||
        params.omega_v.rows() != d.Z.cols())
      throw InvalidArgument("penalized_objective: B/C/omega_v do not match the panels");
    total += block2_objective(d, params.B, params.C, params.omega_v, cfg);
  }
  return total;
}

FitResult estimate_block1(const Matrix& x, const EstimationConfig& cfg) {
  return estimate_block1(build_design_response(x), cfg);
}

FitResult estimate_block2(const Matrix& x, const Matrix& z, const EstimationConfig& cfg) {
  if (z.size() == 0) throw InvalidArgument("estimate_block2: Z panel is required");
  return estimate_block2(build_design_response(x, z), cfg);
}

FitResult estimate_block1(const DesignResponse& d, const EstimationConfig& cfg) {
  cfg.validate();
  const Eigen::Index p = d.X.cols();
  const Block1Moments m = block1_moments(d);
  FitResult fit;

  int it = 0;
  bool ok = true;
  Matrix a = row_cyclic_lasso(m.loss, cfg.lambda_a, Matrix::Zero(p, p), cfg.ctrl, &it, &ok);
  fit.inner_iterations += it;
  Matrix omega = Matrix::Identity(p, p);
  fit.objective_trace.push_back(block1_smooth(m, a, omega, cfg) + precision_terms(omega, cfg.rho_u));
  fit.initial.A = a;
  fit.initial.omega_u = omega;
  fit.converged = ok;

  if (cfg.estimate_precision) {
    fit.converged = false;
    for (int outer = 1; outer <= cfg.ctrl.max_outer_iters; ++outer) {
      fit.outer_iterations = outer;
      precision_step(m.loss.residual_covariance(a), cfg.rho_u, cfg.ctrl, omega);
      if (outer == 1) fit.initial.omega_u = omega;
      QuadraticLoss weighted = m.loss;
      weighted.weight = omega;
      const Matrix a_old = a;
      a = row_cyclic_lasso(weighted, cfg.lambda_a, a, cfg.ctrl, &it, &ok);
      fit.inner_iterations += it;
      const double f = block1_smooth(m, a, omega, cfg) + precision_terms(omega, cfg.rho_u);
      const double prev = fit.objective_trace.back();
      fit.objective_trace.push_back(f);
      if (relative_gap(prev, f) < cfg.ctrl.rel_tol || (a - a_old).cwiseAbs().maxCoeff() < cfg.ctrl.abs_tol) {
        fit.converged = true;
        break;
      }
    }
  }
  fit.params.A = std::move(a);
  fit.params.omega_u = std::move(omega);
  return fit;
}

FitResult estimate_block2(const DesignResponse& d, const EstimationConfig& cfg) {
  cfg.validate();
  if (!d.has_z()) throw InvalidArgument("estimate_block2: design has no Z block");
  const Eigen::Index p1 = d.X.cols(), p2 = d.Z.cols();
  const Block2Moments m = block2_moments(d);
  FitResult fit;
  fit.block2 = true;

  Matrix b = Matrix::Zero(p2, p1), c = Matrix::Zero(p2, p2);
  Matrix omega = Matrix::Identity(p2, p2);
  bool ok = true;
  joint_bc(m, Matrix(), cfg, b, c, fit.inner_iterations, ok);
  fit.objective_trace.push_back(block2_smooth(m, b, c, omega, cfg) + precision_terms(omega, cfg.rho_v));
  fit.initial.B = b;
  fit.initial.C = c;
  fit.initial.omega_v = omega;
  fit.initial.b_structure = cfg.b_structure;
  fit.converged = ok;

  if (cfg.estimate_precision) {
    fit.converged = false;
    for (int outer = 1; outer <= cfg.ctrl.max_outer_iters; ++outer) {
      fit.outer_iterations = outer;
      precision_step(m.residual_covariance(b, c), cfg.rho_v, cfg.ctrl, omega);
      if (outer == 1) fit.initial.omega_v = omega;
      const Matrix b_old = b, c_old = c;
      joint_bc(m, omega, cfg, b, c, fit.inner_iterations, ok);
      const double f = block2_smooth(m, b, c, omega, cfg) + precision_terms(omega, cfg.rho_v);
      const double prev = fit.objective_trace.back();
      fit.objective_trace.push_back(f);
      const double change = std::max((b - b_old).cwiseAbs().maxCoeff(), (c - c_old).cwiseAbs().maxCoeff());
      if (relative_gap(prev, f) < cfg.ctrl.rel_tol || change < cfg.ctrl.abs_tol) {
        fit.converged = true;
        break;
      }
    }
  }
  fit.params.B = std::move(b);
  fit.params.C = std::move(c);
  fit.params.omega_v = std::move(omega);
  fit.params.b_structure = cfg.b_structure;
  return fit;
}

ModelParams combine(const FitResult& block1, const FitResult& block2) {
  ModelParams p;
  p.A = block1.params.A;
  p.omega_u = block1.params.omega_u;
  p.B = block2.params.B;
  p.C = block2.params.C;
  p.omega_v = block2.params.omega_v;
  p.b_structure = block2.params.b_structure;
  return p;
}

}  // namespace tbvar
