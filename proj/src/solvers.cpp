#include "tbvar/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tbvar/error.hpp"

namespace tbvar {

double soft_threshold(double x, double tau) {
  if (tau < 0.0) throw InvalidArgument("soft_threshold: tau must be >= 0");
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

double nuclear_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double l1_norm(const Matrix& m) { return m.cwiseAbs().sum(); }

double l1_off_diagonal(const Matrix& m) { return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum(); }

Matrix svt(const Matrix& m, double tau) {
  if (tau < 0.0) throw InvalidArgument("svt: tau must be >= 0");
  if (!m.allFinite()) throw NumericalBreakdown("svt: non-finite input");
  if (m.size() == 0) return m;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalBreakdown("svt: SVD failed");
  Vector s = (svd.singularValues().array() - tau).max(0.0).matrix();
  Eigen::Index keep = 0;
  while (keep < s.size() && s(keep) > 0.0) ++keep;
  if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
  return svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose();
}

double power_iteration_max_eig(const Matrix& sym, int max_iters, double tol) {
  const Eigen::Index n = sym.rows();
  if (n == 0) return 0.0;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double lambda = v.dot(sym * v);
  for (int it = 0; it < max_iters; ++it) {
    Vector w = sym * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(sym * v);
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  return lambda;
}

namespace {

void fail_or_flag(bool ok, bool* converged, const char* what, const Matrix& last) {
  if (converged) {
    *converged = ok;
  } else if (!ok) {
    throw ConvergenceFailure(what, last);
  }
}

bool relative_change_small(double before, double after, double rel_tol) {
  return std::abs(before - after) <= rel_tol * std::max(std::abs(before), std::numeric_limits<double>::min());
}

}  // namespace

Vector lasso_gram(const Matrix& gram, const Vector& cross, double weight, double lambda, Vector beta,
                  const SolverControl& ctrl, int* iters, bool* converged) {
  const Eigen::Index p = gram.rows();
  if (gram.cols() != p || cross.size() != p) throw InvalidArgument("lasso_gram: dimension mismatch");
  if (!(weight > 0.0)) throw InvalidArgument("lasso: weight must be positive");
  if (lambda < 0.0) throw InvalidArgument("lasso: lambda must be >= 0");
  if (beta.size() == 0) beta = Vector::Zero(p);
  if (beta.size() != p) throw InvalidArgument("lasso: warm start has wrong length");

  const double tau = lambda / (2.0 * weight);
  Vector g = gram * beta;
  bool ok = false;
  int sweep = 0;
  while (sweep < ctrl.max_inner_iters) {
    ++sweep;
    double max_change = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      const double gkk = gram(k, k);
      double next = 0.0;
      if (gkk > 0.0) {
        const double z = cross(k) - g(k) + gkk * beta(k);
        next = soft_threshold(z, tau) / gkk;
      }
      const double delta = next - beta(k);
      if (delta != 0.0) {
        g.noalias() += delta * gram.col(k);
        beta(k) = next;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (!beta.allFinite()) throw NumericalBreakdown("lasso: non-finite coefficients");
    if (max_change < ctrl.abs_tol) {
      ok = true;
      break;
    }
  }
  if (iters) *iters = sweep;
  fail_or_flag(ok, converged, "lasso coordinate descent did not converge", beta);
  return beta;
}

Vector weighted_lasso_row_update(const Matrix& design, const Vector& response, const Vector& offset,
                                 double weight, double lambda, const Vector& warm_start,
                                 const SolverControl& ctrl) {
  ctrl.validate();
  const Eigen::Index t = design.rows();
  if (t == 0 || response.size() != t || offset.size() != t)
    throw InvalidArgument("weighted_lasso_row_update: response/offset length must equal design rows");
  const double inv_t = 1.0 / static_cast<double>(t);
  const Matrix gram = design.transpose() * design * inv_t;
  const Vector cross = design.transpose() * (response + offset) * inv_t;
  return lasso_gram(gram, cross, weight, lambda, warm_start, ctrl);
}

Matrix QuadraticLoss::residual_covariance(const Matrix& k) const {
  Matrix kc = k * cross.transpose();
  return syy - kc - kc.transpose() + k * gram * k.transpose();
}

double QuadraticLoss::value(const Matrix& k) const {
  const Matrix r = residual_covariance(k);
  if (weight.size() == 0) return r.trace();
  return (weight.cwiseProduct(r)).sum();  // tr(W R) for symmetric W, R
}

Matrix QuadraticLoss::gradient(const Matrix& k) const {
  Matrix d = k * gram - cross;
  if (weight.size() == 0) return 2.0 * d;
  return 2.0 * weight * d;
}

Matrix row_cyclic_lasso(const QuadraticLoss& loss, double lambda, Matrix start, const SolverControl& ctrl,
                        int* iters, bool* converged) {
  const Eigen::Index q = loss.cross.rows(), p = loss.cross.cols();
  if (loss.gram.rows() != p || loss.gram.cols() != p) throw InvalidArgument("row_cyclic_lasso: gram shape");
  if (start.size() == 0) start = Matrix::Zero(q, p);
  if (start.rows() != q || start.cols() != p) throw InvalidArgument("row_cyclic_lasso: start shape");
  const bool weighted = loss.weight.size() != 0;
  if (weighted && (loss.weight.rows() != q || loss.weight.cols() != q))
    throw InvalidArgument("row_cyclic_lasso: weight shape");

  Matrix k = std::move(start);
  // Column i holds X'R_i / T, the cross-covariance of the design with residual i.
  Matrix resid_cross = loss.cross.transpose() - loss.gram * k.transpose();
  SolverControl inner = ctrl;
  double objective = loss.value(k) + lambda * l1_norm(k);
  bool ok = false;
  int sweep = 0;
  while (sweep < ctrl.max_inner_iters) {
    ++sweep;
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      const double wjj = weighted ? loss.weight(j, j) : 1.0;
      if (!(wjj > 0.0)) throw InvalidArgument("row_cyclic_lasso: weight diagonal must be positive");
      Vector c = loss.cross.row(j).transpose();
      if (weighted) {
        c += (resid_cross * loss.weight.col(j) - resid_cross.col(j) * wjj) / wjj;
      }
      bool row_ok = true;
      Vector row = lasso_gram(loss.gram, c, wjj, lambda, k.row(j).transpose(), inner, nullptr, &row_ok);
      max_change = std::max(max_change, (row - k.row(j).transpose()).cwiseAbs().maxCoeff());
      k.row(j) = row.transpose();
      resid_cross.col(j) = loss.cross.row(j).transpose() - loss.gram * row;
    }
    const double next = loss.value(k) + lambda * l1_norm(k);
    const bool small = relative_change_small(objective, next, ctrl.rel_tol);
    objective = next;
    if (max_change < ctrl.abs_tol || small) {
      ok = true;
      break;
    }
  }
  if (iters) *iters = sweep;
  fail_or_flag(ok, converged, "row-cyclic lasso did not converge", k);
  return k;
}

double graphical_lasso_objective(const Matrix& s, const Matrix& omega, double rho) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) throw InvalidArgument("graphical_lasso_objective: Omega not positive definite");
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return (s.cwiseProduct(omega)).sum() - logdet + rho * l1_off_diagonal(omega);
}

Matrix graphical_lasso(const Matrix& s, double rho, const SolverControl& ctrl) {
  const Eigen::Index p = s.rows();
  if (p == 0 || s.cols() != p) throw InvalidArgument("graphical_lasso: S must be square and non-empty");
  if (rho < 0.0) throw InvalidArgument("graphical_lasso: rho must be >= 0");
  if (!s.allFinite()) throw InvalidArgument("graphical_lasso: S has non-finite entries");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidArgument("graphical_lasso: S is not symmetric");
  if ((s.diagonal().array() <= 0.0).any()) throw InvalidArgument("graphical_lasso: S diagonal must be positive");

  const Matrix sym = 0.5 * (s + s.transpose());
  if (rho == 0.0 || p == 1) {
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success) throw NumericalBreakdown("graphical_lasso: S singular with rho = 0");
    Matrix omega = llt.solve(Matrix::Identity(p, p));
    return 0.5 * (omega + omega.transpose());
  }

  Matrix w = sym;
  Matrix betas = Matrix::Zero(p - 1, p);
  SolverControl inner = ctrl;
  inner.abs_tol = ctrl.abs_tol * 1e-2;
  inner.max_inner_iters = std::max(ctrl.max_inner_iters, 1000);

  std::vector<Eigen::Index> others(p - 1);
  Matrix w11(p - 1, p - 1);
  Vector s12(p - 1);
  for (int sweep = 0; sweep < std::max(ctrl.max_outer_iters, 100); ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index i = 0, n = 0; i < p; ++i)
        if (i != j) others[n++] = i;
      for (Eigen::Index a = 0; a < p - 1; ++a) {
        s12(a) = sym(others[a], j);
        for (Eigen::Index b = 0; b < p - 1; ++b) w11(a, b) = w(others[a], others[b]);
      }
      // min 1/2 b'W11 b - b's12 + rho |b|_1
      bool ok = true;
      Vector beta = lasso_gram(w11, s12, 0.5, rho, betas.col(j), inner, nullptr, &ok);
      betas.col(j) = beta;
      const Vector w12 = w11 * beta;
      for (Eigen::Index a = 0; a < p - 1; ++a) {
        max_change = std::max(max_change, std::abs(w12(a) - w(others[a], j)));
        w(others[a], j) = w12(a);
        w(j, others[a]) = w12(a);
      }
    }
    if (!w.allFinite()) throw NumericalBreakdown("graphical_lasso: non-finite covariance iterate");
    if (max_change < ctrl.abs_tol) break;
  }

  Matrix omega = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double dot = 0.0;
    for (Eigen::Index a = 0, n = 0; a < p; ++a) {
      if (a == j) continue;
      dot += w(a, j) * betas(n++, j);
    }
    const double denom = w(j, j) - dot;
    if (!(denom > 0.0)) throw NumericalBreakdown("graphical_lasso: lost positive definiteness");
    const double ojj = 1.0 / denom;
    omega(j, j) = ojj;
    for (Eigen::Index a = 0, n = 0; a < p; ++a) {
      if (a == j) continue;
      omega(a, j) = -betas(n++, j) * ojj;
    }
  }
  omega = 0.5 * (omega + omega.transpose());
  Eigen::LLT<Matrix> check(omega);
  if (check.info() != Eigen::Success || !omega.allFinite())
    throw NumericalBreakdown("graphical_lasso: estimate is not positive definite");
  return omega;
}

Matrix nuclear_prox_gradient(const QuadraticLoss& loss, double lambda, bool accelerate, Matrix start,
                             const SolverControl& ctrl, std::vector<double>* trace, double step_size, int* iters,
                             bool* converged) {
  ctrl.validate();
  const Eigen::Index q = loss.cross.rows(), p = loss.cross.cols();
  if (lambda < 0.0) throw InvalidArgument("nuclear_prox_gradient: lambda must be >= 0");
  if (start.size() == 0) start = Matrix::Zero(q, p);
  if (start.rows() != q || start.cols() != p) throw InvalidArgument("nuclear_prox_gradient: start shape");

  const double wmax = loss.weight.size() == 0 ? 1.0 : power_iteration_max_eig(loss.weight);
  const double lipschitz = 2.0 * wmax * power_iteration_max_eig(loss.gram);
  if (lipschitz <= 0.0) {
    // Loss is constant in K; the penalty alone is minimized at zero.
    if (iters) *iters = 0;
    if (converged) *converged = true;
    return lambda > 0.0 ? Matrix::Zero(q, p) : start;
  }
  double alpha = 1.0 / lipschitz;
  if (step_size > 0.0) {
    if (ctrl.step_rule == StepRule::fixed && step_size > alpha * (1.0 + 1e-9))
      throw InvalidArgument("nuclear_prox_gradient: step size exceeds 1/L under the fixed rule");
    alpha = step_size;
  }

  auto objective = [&](const Matrix& k) { return loss.value(k) + lambda * nuclear_norm(k); };
  auto prox_step = [&](const Matrix& y, double& a) {
    const Matrix grad = loss.gradient(y);
    if (ctrl.step_rule == StepRule::fixed) return svt(y - a * grad, a * lambda);
    const double fy = loss.value(y);
    for (int halvings = 0; halvings < 60; ++halvings) {
      Matrix z = svt(y - a * grad, a * lambda);
      const Matrix d = z - y;
      if (loss.value(z) <= fy + (grad.cwiseProduct(d)).sum() + d.squaredNorm() / (2.0 * a) + 1e-14 * std::abs(fy))
        return z;
      a *= 0.5;
    }
    return svt(y - a * grad, a * lambda);
  };

  Matrix x = std::move(start);
  Matrix x_prev = x;
  double fx = objective(x);
  int momentum_k = 1;
  bool ok = false;
  int it = 0;
  while (it < ctrl.max_inner_iters) {
    ++it;
    Matrix z;
    double fz;
    if (accelerate && momentum_k > 1) {
      const double beta = static_cast<double>(momentum_k - 1) / static_cast<double>(momentum_k + 2);
      const Matrix y = x + beta * (x - x_prev);
      z = prox_step(y, alpha);
      fz = objective(z);
      if (fz > fx) {
        momentum_k = 1;
        z = prox_step(x, alpha);
        fz = objective(z);
      }
    } else {
      z = prox_step(x, alpha);
      fz = objective(z);
    }
    if (!z.allFinite()) throw NumericalBreakdown("nuclear_prox_gradient: non-finite iterate");
    const double max_change = (z - x).cwiseAbs().maxCoeff();
    const bool small = relative_change_small(fx, fz, ctrl.rel_tol);
    x_prev = std::move(x);
    x = std::move(z);
    fx = fz;
    ++momentum_k;
    if (trace) trace->push_back(fx);
    if (max_change < ctrl.abs_tol || small) {
      ok = true;
      break;
    }
  }
  if (iters) *iters = it;
  fail_or_flag(ok, converged, "nuclear-norm proximal gradient did not converge", x);
  return x;
}

Matrix fista_nuclear(const Matrix& design, const Matrix& target, double lambda, bool accelerate,
                     const SolverControl& ctrl, double step_size, std::vector<double>* trace) {
  const Eigen::Index t = design.rows();
  if (t == 0 || target.rows() != t) throw InvalidArgument("fista_nuclear: design and target row counts differ");
  const double inv_t = 1.0 / static_cast<double>(t);
  QuadraticLoss loss;
  loss.gram = design.transpose() * design * inv_t;
  loss.cross = target.transpose() * design * inv_t;
  loss.syy = target.transpose() * target * inv_t;
  return nuclear_prox_gradient(loss, lambda, accelerate, Matrix(), ctrl, trace, step_size);
}

}  // namespace tbvar
