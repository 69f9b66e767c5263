#include "tbvar/simulate.hpp"

#include <cmath>

#include "tbvar/error.hpp"
#include "tbvar/spectra.hpp"

namespace tbvar {

double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("spectral_radius: matrix must be square");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalBreakdown("spectral_radius: eigen decomposition failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

double signed_magnitude(Rng& rng) {
  const double mag = rng.uniform(1.5, 2.5);
  return rng.bernoulli(0.5) ? mag : -mag;
}

// True when the directed support graph contains a cycle (self-loops included).
bool support_has_cycle(const Matrix& m) {
  const Eigen::Index p = m.rows();
  std::vector<int> indeg(p, 0);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      if (m(i, j) != 0.0) ++indeg[i];  // edge j -> i
  std::vector<Eigen::Index> queue;
  for (Eigen::Index i = 0; i < p; ++i)
    if (indeg[i] == 0) queue.push_back(i);
  std::size_t head = 0;
  while (head < queue.size()) {
    const Eigen::Index j = queue[head++];
    for (Eigen::Index i = 0; i < p; ++i)
      if (m(i, j) != 0.0 && --indeg[i] == 0) queue.push_back(i);
  }
  return static_cast<Eigen::Index>(queue.size()) < p;
}

Matrix inverse_spd(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw InvalidArgument(std::string(what) + " is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

Matrix generate_sparse_transition(Eigen::Index p, double nonzero_prob, double target_radius, Rng& rng) {
  if (p < 1) throw InvalidArgument("generate_sparse_transition: p must be >= 1");
  if (!(nonzero_prob >= 0.0 && nonzero_prob < 1.0))
    throw InvalidArgument("generate_sparse_transition: nonzero_prob must lie in [0, 1)");
  if (!(target_radius > 0.0 && target_radius < 1.0))
    throw InvalidArgument("generate_sparse_transition: target_radius must lie in (0, 1)");
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix m = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j)
        if (rng.bernoulli(nonzero_prob)) m(i, j) = signed_magnitude(rng);
    if (!support_has_cycle(m)) continue;
    const double rho = spectral_radius(m);
    if (!(rho > 1e-8)) continue;
    return m * (target_radius / rho);
  }
  throw DegenerateInput("generate_sparse_transition: 100 draws were all nilpotent");
}

Matrix generate_lowrank(Eigen::Index p2, Eigen::Index p1, Eigen::Index rank, Rng& rng, LowRankMethod method) {
  if (p1 < 1 || p2 < 1) throw InvalidArgument("generate_lowrank: dimensions must be >= 1");
  if (rank < 0 || rank > std::min(p1, p2)) throw InvalidArgument("generate_lowrank: rank exceeds min(p1, p2)");
  Matrix raw(p2, p1);
  for (Eigen::Index i = 0; i < p2; ++i)
    for (Eigen::Index j = 0; j < p1; ++j) raw(i, j) = rng.uniform(-10.0, 10.0);
  if (rank == std::min(p1, p2)) return raw;
  if (rank == 0) return Matrix::Zero(p2, p1);
  Eigen::JacobiSVD<Matrix> svd(raw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = svd.singularValues().head(rank);
  if (method == LowRankMethod::threshold) s.array() -= svd.singularValues()(rank);
  return svd.matrixU().leftCols(rank) * s.asDiagonal() * svd.matrixV().leftCols(rank).transpose();
}

Matrix generate_sparse_cross(Eigen::Index p2, Eigen::Index p1, double nonzero_prob, Rng& rng) {
  if (!(nonzero_prob > 0.0 && nonzero_prob <= 1.0))
    throw InvalidArgument("generate_sparse_cross: nonzero_prob must lie in (0, 1]");
  Matrix m = Matrix::Zero(p2, p1);
  for (Eigen::Index i = 0; i < p2; ++i)
    for (Eigen::Index j = 0; j < p1; ++j)
      if (rng.bernoulli(nonzero_prob)) m(i, j) = signed_magnitude(rng);
  return m;
}

Matrix generate_precision_er(Eigen::Index p, double edge_density, double condition_number, Rng& rng) {
  if (p < 1) throw InvalidArgument("generate_precision_er: p must be >= 1");
  if (!(condition_number >= 1.0)) throw InvalidArgument("generate_precision_er: condition_number must be >= 1");
  if (condition_number == 1.0) return Matrix::Identity(p, p);
  if (!(edge_density > 0.0 && edge_density < 1.0))
    throw InvalidArgument("generate_precision_er: edge_density must lie in (0, 1)");
  const double expected_edges = 0.5 * static_cast<double>(p * (p - 1)) * edge_density;
  if (expected_edges < 1.0)
    throw InvalidArgument("generate_precision_er: p too small for the requested edge density (raise omega_density or use identity_noise)");
  for (int attempt = 0; attempt < 100; ++attempt) {
    Matrix m = Matrix::Zero(p, p);
    int edges = 0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = i + 1; j < p; ++j)
        if (rng.bernoulli(edge_density)) {
          const double w = rng.uniform(0.5, 1.0) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
          m(i, j) = m(j, i) = w;
          ++edges;
        }
    if (edges == 0) continue;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(p - 1);
    if (!(lmax - lmin > 1e-12)) continue;
    const double shift = (lmax - condition_number * lmin) / (condition_number - 1.0);
    Matrix omega = m + shift * Matrix::Identity(p, p);
    omega /= (lmin + shift);
    return 0.5 * (omega + omega.transpose());
  }
  throw DegenerateInput("generate_precision_er: could not draw a graph with edges");
}

std::string to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::student_t: return "student_t";
    case NoiseFamily::elliptical: return "elliptical";
  }
  return "unknown";
}

NoiseFamily parse_noise_family(const std::string& s) {
  if (s == "gaussian" || s == "normal") return NoiseFamily::gaussian;
  if (s == "student_t" || s == "t") return NoiseFamily::student_t;
  if (s == "elliptical") return NoiseFamily::elliptical;
  throw InvalidArgument("unknown noise family '" + s + "' (expected gaussian|student_t|elliptical)");
}

void NoiseSpec::validate() const {
  if (family == NoiseFamily::student_t && !(df > 2.0))
    throw InvalidArgument("noise: student_t requires df > 2");
  if (family == NoiseFamily::elliptical && !(sigma > 0.0)) throw InvalidArgument("noise: sigma must be > 0");
}

namespace {

// n x p matrix of draws with covariance L L' per row.
Matrix draw_noise(const Matrix& chol, Eigen::Index n, const NoiseSpec& noise, Rng& rng) {
  const Eigen::Index p = chol.rows();
  Matrix xi(n, p);
  for (Eigen::Index t = 0; t < n; ++t)
    for (Eigen::Index j = 0; j < p; ++j) xi(t, j) = rng.normal();
  switch (noise.family) {
    case NoiseFamily::gaussian:
      break;
    case NoiseFamily::student_t:
      for (Eigen::Index t = 0; t < n; ++t) xi.row(t) *= std::sqrt((noise.df - 2.0) / rng.chi_squared(noise.df));
      break;
    case NoiseFamily::elliptical: {
      // One draw over the stacked trajectory: R * S with S uniform on the sphere.
      const double d = static_cast<double>(n * p);
      const double second_moment = std::exp(2.0 * noise.mu + 2.0 * noise.sigma * noise.sigma);
      const double r = rng.lognormal(noise.mu, noise.sigma);
      xi *= r * std::sqrt(d / second_moment) / xi.norm();
      break;
    }
  }
  return xi * chol.transpose();
}

}  // namespace

Panel simulate_system(const ModelParams& params, Eigen::Index T, const NoiseSpec& noise, Eigen::Index burn_in,
                      Rng& rng) {
  params.validate();
  noise.validate();
  if (T < 2) throw InvalidArgument("simulate_system: T must be >= 2");
  if (burn_in < 0) throw InvalidArgument("simulate_system: burn_in must be >= 0");
  const Eigen::Index p1 = params.p1(), p2 = params.p2(), n = T + burn_in;
  const Matrix lu = Eigen::LLT<Matrix>(inverse_spd(params.omega_u, "omega_u")).matrixL();
  const Matrix lv = Eigen::LLT<Matrix>(inverse_spd(params.omega_v, "omega_v")).matrixL();
  const Matrix u = draw_noise(lu, n, noise, rng);
  const Matrix v = draw_noise(lv, n, noise, rng);

  Panel out{Matrix(T, p1), Matrix(T, p2)};
  Vector x = Vector::Zero(p1), z = Vector::Zero(p2);
  for (Eigen::Index t = 0; t < n; ++t) {
    Vector zn = params.B * x + params.C * z + v.row(t).transpose();
    x = params.A * x + u.row(t).transpose();
    z = std::move(zn);
    if (t >= burn_in) {
      out.X.row(t - burn_in) = x.transpose();
      out.Z.row(t - burn_in) = z.transpose();
    }
  }
  if (!out.X.allFinite() || !out.Z.allFinite()) throw NumericalBreakdown("simulate_system: trajectory overflowed");
  return out;
}

double signal_to_noise(const Matrix& b, const Matrix& a, const Matrix& sigma_u, const Matrix& sigma_v) {
  const Matrix gamma_x = stationary_covariance(a, sigma_u);
  const double den = sigma_v.trace();
  if (!(den > 0.0)) throw InvalidArgument("signal_to_noise: Sigma_v has zero trace");
  return std::sqrt(std::max(0.0, (b * gamma_x * b.transpose()).trace()) / den);
}

void ExperimentSpec::validate() const {
  if (p1 < 1 || p2 < 1) throw InvalidArgument("experiment: p1 and p2 must be >= 1");
  if (b_structure == BStructure::low_rank && (rank_b < 0 || rank_b > std::min(p1, p2)))
    throw InvalidArgument("experiment: rank_b must lie in [0, min(p1, p2)]");
  if (!(rho_a > 0.0 && rho_a < 1.0) || !(rho_c > 0.0 && rho_c < 1.0))
    throw InvalidArgument("experiment: rho_a and rho_c must lie in (0, 1)");
  if (T < 3) throw InvalidArgument("experiment: T must be >= 3");
  if (replications < 1) throw InvalidArgument("experiment: replications must be >= 1");
  if (burn_in < 0) throw InvalidArgument("experiment: burn_in must be >= 0");
  if (snr_b < 0.0) throw InvalidArgument("experiment: snr_b must be >= 0");
  noise.validate();
}

ExperimentSpec preset_spec(const std::string& name) {
  struct Row {
    const char* name;
    Eigen::Index p1, p2, rank;
    double rho_a, rho_c;
    Eigen::Index T;
  };
  static const Row rows[] = {
      {"A.1", 50, 20, 5, 0.5, 0.5, 200},   {"A.2", 100, 50, 5, 0.5, 0.5, 200},
      {"A.3", 200, 50, 5, 0.5, 0.5, 200},  {"A.4", 50, 100, 5, 0.5, 0.5, 200},
      {"B.1", 100, 50, 10, 0.5, 0.5, 200}, {"B.2", 100, 50, 20, 0.5, 0.5, 200},
      {"C.1", 50, 20, 5, 0.8, 0.5, 200},   {"C.2", 50, 20, 5, 0.5, 0.8, 200},
      {"C.3", 50, 20, 5, 0.8, 0.8, 200},   {"C.3'", 50, 20, 5, 0.8, 0.8, 500},
  };
  for (const Row& r : rows) {
    if (name == r.name) {
      ExperimentSpec s;
      s.preset = r.name;
      s.p1 = r.p1;
      s.p2 = r.p2;
      s.rank_b = r.rank;
      s.rho_a = r.rho_a;
      s.rho_c = r.rho_c;
      s.T = r.T;
      return s;
    }
  }
  throw InvalidArgument("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"A.1", "A.2", "A.3", "A.4", "B.1", "B.2", "C.1", "C.2", "C.3", "C.3'"};
}

ModelParams generate_params(const ExperimentSpec& spec, Rng& rng) {
  spec.validate();
  const double pa = spec.prob_a > 0.0 ? spec.prob_a : std::min(0.99, 2.0 / static_cast<double>(spec.p1));
  const double pc = spec.prob_c > 0.0 ? spec.prob_c : std::min(0.99, 1.0 / static_cast<double>(spec.p2));
  ModelParams m;
  m.b_structure = spec.b_structure;
  m.A = generate_sparse_transition(spec.p1, pa, spec.rho_a, rng);
  m.C = generate_sparse_transition(spec.p2, pc, spec.rho_c, rng);
  switch (spec.b_structure) {
    case BStructure::low_rank:
      m.B = generate_lowrank(spec.p2, spec.p1, spec.rank_b, rng, spec.lowrank_method);
      break;
    case BStructure::sparse: {
      const double pb = spec.prob_b > 0.0 ? spec.prob_b : 1.0 / static_cast<double>(spec.p1);
      m.B = generate_sparse_cross(spec.p2, spec.p1, pb, rng);
      break;
    }
    case BStructure::zero:
      m.B = Matrix::Zero(spec.p2, spec.p1);
      break;
  }
  if (spec.identity_noise) {
    m.omega_u = Matrix::Identity(spec.p1, spec.p1);
    m.omega_v = Matrix::Identity(spec.p2, spec.p2);
  } else {
    m.omega_u = generate_precision_er(spec.p1, spec.omega_density, spec.omega_condition, rng);
    m.omega_v = generate_precision_er(spec.p2, spec.omega_density, spec.omega_condition, rng);
  }
  if (spec.snr_b > 0.0 && m.B.squaredNorm() > 0.0) {
    const double now = signal_to_noise(m.B, m.A, inverse_spd(m.omega_u, "omega_u"), inverse_spd(m.omega_v, "omega_v"));
    m.B *= spec.snr_b / now;
  }
  return m;
}

}  // namespace tbvar
