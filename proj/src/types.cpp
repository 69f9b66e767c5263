#include "tbvar/types.hpp"

#include <cmath>

#include "tbvar/error.hpp"
#include "tbvar/simulate.hpp"
#include "tbvar/solvers.hpp"

namespace tbvar {

void SolverControl::validate() const {
  if (max_inner_iters < 1 || max_outer_iters < 1)
    throw InvalidArgument("SolverControl: iteration caps must be >= 1");
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw InvalidArgument("SolverControl: tolerances must be > 0");
}

double PenaltySpec::evaluate(const Matrix& m) const {
  return weight * (kind == PenaltyKind::l1 ? l1_norm(m) : nuclear_norm(m));
}

std::string to_string(BStructure s) {
  switch (s) {
    case BStructure::low_rank: return "lowrank";
    case BStructure::sparse: return "sparse";
    case BStructure::zero: return "zero";
  }
  return "unknown";
}

BStructure parse_b_structure(const std::string& s) {
  if (s == "lowrank" || s == "low-rank" || s == "low_rank") return BStructure::low_rank;
  if (s == "sparse") return BStructure::sparse;
  if (s == "zero") return BStructure::zero;
  throw InvalidArgument("unknown B structure '" + s + "' (expected lowrank|sparse|zero)");
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix assemble_g(const Matrix& a, const Matrix& b, const Matrix& c) {
  const Eigen::Index p1 = a.rows(), p2 = c.rows();
  if (a.cols() != p1 || c.cols() != p2 || b.rows() != p2 || b.cols() != p1)
    throw InvalidArgument("assemble_g: A must be p1xp1, B p2xp1, C p2xp2");
  Matrix g = Matrix::Zero(p1 + p2, p1 + p2);
  g.topLeftCorner(p1, p1) = a;
  g.bottomLeftCorner(p2, p1) = b;
  g.bottomRightCorner(p2, p2) = c;
  return g;
}

namespace {

void require_spd(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw InvalidArgument(std::string(name) + " must be square");
  if (!m.isApprox(m.transpose(), 1e-10)) throw InvalidArgument(std::string(name) + " must be symmetric");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument(std::string(name) + " must be positive definite");
}

}  // namespace

void ModelParams::validate() const {
  const Eigen::Index n1 = p1(), n2 = p2();
  if (n1 < 1 || n2 < 1) throw InvalidArgument("ModelParams: empty block");
  if (A.cols() != n1 || B.rows() != n2 || B.cols() != n1 || C.cols() != n2)
    throw InvalidArgument("ModelParams: A must be p1xp1, B p2xp1, C p2xp2");
  if (!all_finite(A) || !all_finite(B) || !all_finite(C)) throw InvalidArgument("ModelParams: non-finite entries");
  if (omega_u.rows() != n1 || omega_v.rows() != n2) throw InvalidArgument("ModelParams: precision shapes");
  require_spd(omega_u, "omega_u");
  require_spd(omega_v, "omega_v");
  if (spectral_radius(A) >= 1.0) throw InvalidArgument("ModelParams: rho(A) >= 1 (unstable)");
  if (spectral_radius(C) >= 1.0) throw InvalidArgument("ModelParams: rho(C) >= 1 (unstable)");
}

}  // namespace tbvar
