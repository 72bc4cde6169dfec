/**
 * @file flows.hpp
 * @brief Discrete H^2 gradient flow for E_h under the linearized metric
 * constraint, and the two preprocessing stages that produce its initial
 * guess (bi-Laplacian for boundary conditions, stretching flow for the
 * metric defect).
 */
#pragma once

#include "ldgplate/solvers.hpp"

#include <chrono>
#include <memory>

namespace ldgplate {

/// Everything that stays fixed during a run: discretization, metric,
/// boundary data, assembled bending form and H^2 product.
class PlateProblem {
public:
  /// `data` must be present iff the mesh has Dirichlet edges.
  PlateProblem(Mesh mesh, const TargetMetric &metric, std::optional<BoundaryData> data, MaterialParams mat,
               VectorFunction f = nullptr)
      : mesh_(std::make_unique<Mesh>(std::move(mesh))), metric_(metric), data_(std::move(data)), mat_(mat) {
    mat_.validate();
    const bool dirichlet = mesh_->has_dirichlet();
    if (dirichlet && !data_) throw Error(ErrorKind::missing_data, "Dirichlet edges present but no boundary data");
    if (dirichlet && data_ && !data_->Phi)
      throw Error(ErrorKind::missing_data, "clamped boundary needs the gradient data Phi");
    V_ = std::make_unique<BrokenSpace>(*mesh_);
    J_ = JumpSet::standard(*mesh_, dirichlet ? data_ : std::nullopt);
    cache_ = std::make_unique<HessianCache>(*V_, *V_, J_);
    metric_field_ = MetricField(*V_, metric_);
    bending_ = assemble_bending(*cache_, J_, metric_field_, FormCoefficients::bending(mat_));
    sigma_ = dirichlet ? 0.0 : 1.0;
    h2_ = assemble_h2_product(*V_, J_, sigma_);
    load_ = f ? load_vector(*V_, f) : FieldCoeffs::Zero(V_->n_scalar(), 3);
  }

  const Mesh &mesh() const { return *mesh_; }
  const BrokenSpace &space() const { return *V_; }
  const JumpSet &jumps() const { return J_; }
  const HessianCache &cache() const { return *cache_; }
  const TargetMetric &metric() const { return metric_; }
  const MetricField &metric_field() const { return metric_field_; }
  const std::optional<BoundaryData> &boundary_data() const { return data_; }
  const MaterialParams &material() const { return mat_; }
  const QuadraticSystem &bending() const { return bending_; }
  const SparseMatrix &h2_product() const { return h2_; }
  const FieldCoeffs &load() const { return load_; }
  double sigma() const { return sigma_; }
  bool clamped() const { return mesh_->has_dirichlet(); }

  double energy(const FieldCoeffs &y) const { return ldgplate::energy(*cache_, J_, metric_field_, mat_, y, &load_); }
  double defect(const FieldCoeffs &y) const { return metric_defect(*V_, y, metric_field_); }
  double stretching(const FieldCoeffs &y) const { return stretching_energy(*V_, y, metric_field_); }

  /// sqrt(sum_c Y_c^T M Y_c) with M the H^2 product.
  double h2_norm(const FieldCoeffs &y) const {
    double s = 0;
    for (int c = 0; c < 3; ++c) s += y.col(c).dot(h2_ * y.col(c));
    return std::sqrt(std::max(s, 0.0));
  }

  /// L^2 norm of the value jump against the Dirichlet data.
  double dirichlet_mismatch(const FieldCoeffs &y) const {
    double s = 0;
    for (int e = 0; e < mesh_->n_edges(); ++e) {
      if (mesh_->edge(e).cls != EdgeClass::dirichlet) continue;
      const EdgeTrace tr = edge_traces(*V_, y, J_, e);
      const auto &w = V_->edge(e).weights;
      for (int q = 0; q < w.size(); ++q) s += w[q] * tr.value_jump.row(q).squaredNorm();
    }
    return std::sqrt(s);
  }

private:
  std::unique_ptr<Mesh> mesh_;
  TargetMetric metric_;
  std::optional<BoundaryData> data_;
  MaterialParams mat_;
  std::unique_ptr<BrokenSpace> V_;
  JumpSet J_;
  std::unique_ptr<HessianCache> cache_;
  MetricField metric_field_;
  QuadraticSystem bending_;
  double sigma_ = 0;
  SparseMatrix h2_;
  FieldCoeffs load_;
};

struct StepRecord {
  int step = 0;
  double E = 0, D = 0;
  int schur_iters = 0;
  double increment_norm = 0;
  double wall_ms = 0;
};

using StepObserver = std::function<void(const StepRecord &)>;

struct FlowParams {
  double tau = 0.01;
  double tol = 1e-6;
  int max_steps = 20000;
  SchurOptions schur;
  /// Precondition the Schur CG with a periodically refreshed exact Schur
  /// complement (for long flows); off reproduces plain CG counts.
  bool reference_preconditioner = false;
  int refresh_after = 30;
  /// Allowed energy increase per step, relative to max(1, |E|).
  double decay_slack = 1e-10;
  /// Slack on the per-step defect expansion bound.
  double defect_slack = 1e-10;
  /// The flow stops before stepping when |F| <= stationary_tol (|L + f| + max|A| |y|).
  double stationary_tol = 1e-12;

  void validate() const {
    if (!(tau > 0) || !(tol > 0) || max_steps <= 0)
      throw Error(ErrorKind::invalid_parameter, "flow needs tau > 0, tol > 0, max_steps > 0");
  }
};

struct FlowState {
  FieldCoeffs y;
  double E = 0, D = 0;
  int steps = 0;
  bool converged = false;
  std::vector<StepRecord> history;
  int schur_min = 0, schur_max = 0;
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

/// sum_K ||int_K (a^T b + b^T a)||_F and sum_K ||int_K a^T a||_F style sums.
inline double cellwise_gram(const BrokenSpace &V, const FieldCoeffs &a, const FieldCoeffs &b, bool symmetric) {
  double s = 0;
  for (int c = 0; c < V.n_cells(); ++c) {
    const auto ga = cell_gradients(V, a, c), gb = cell_gradients(V, b, c);
    const auto &w = V.cell(c).weights;
    Mat2 m = Mat2::Zero();
    for (std::size_t p = 0; p < ga.size(); ++p) {
      const Mat2 x = ga[p].transpose() * gb[p];
      m += w[p] * (symmetric ? Mat2(x + x.transpose()) : x);
    }
    s += m.norm();
  }
  return s;
}

inline std::string step_context(const char *stage, int step) {
  return std::string(stage) + " step " + std::to_string(step) + ": ";
}

} // namespace detail

/// Main gradient flow. Each step solves
///   tau^{-1}(dy, v)_{H^2} + a_h(dy, v) + b(Lam, v) = -dE_h[y^n](v),  b(mu, dy) = 0,
/// and stops when tau^{-1}|E_h[y^{n+1}] - E_h[y^n]| <= tol.
inline FlowState gradient_flow(const PlateProblem &P, const FieldCoeffs &y0, const FlowParams &params,
                               const StepObserver &observer = nullptr) {
  params.validate();
  const BrokenSpace &V = P.space();
  const QuadraticSystem &Q = P.bending();
  SparseMatrix A = Q.A + (1.0 / params.tau) * P.h2_product();
  SpdFactorization fact;
  try {
    fact.factorize(A);
  } catch (const Error &e) {
    throw Error(e.kind(), std::string("gradient flow: ") + e.what());
  }
  const FieldCoeffs rhs0 = P.load() + Q.L;
  const double A_max = Eigen::MatrixXd::Map(Q.A.valuePtr(), Q.A.nonZeros(), 1).cwiseAbs().maxCoeff();
  std::optional<ReferenceSchurPreconditioner> pc;
  if (params.reference_preconditioner) pc.emplace(params.refresh_after);

  FlowState st;
  st.y = y0;
  st.E = P.energy(st.y);
  st.D = P.defect(st.y);
  st.history.push_back({0, st.E, st.D, 0, 0.0, 0.0});
  if (observer) observer(st.history.back());
  st.schur_min = std::numeric_limits<int>::max();
  const auto t0 = std::chrono::steady_clock::now();

  for (int n = 1; n <= params.max_steps; ++n) {
    FieldCoeffs F(V.n_scalar(), 3);
    for (int c = 0; c < 3; ++c) F.col(c) = rhs0.col(c) - Q.A * st.y.col(c);
    // stationary up to rounding in the residual terms
    const double scale = rhs0.cwiseAbs().maxCoeff() + A_max * st.y.cwiseAbs().maxCoeff();
    if (F.cwiseAbs().maxCoeff() <= params.stationary_tol * scale) {
      st.converged = true;
      break;
    }
    const ConstraintMatrix B(V, st.y);
    SaddleSolution sol;
    try {
      sol = saddle_solve(fact, B, F, params.schur, pc ? &*pc : nullptr);
    } catch (const Error &e) {
      throw Error(e.kind(), detail::step_context("gradient flow", n) + e.what());
    }
    const FieldCoeffs &dy = sol.dY;
    const FieldCoeffs y_new = st.y + dy;
    const double E_new = P.energy(y_new);
    const double D_new = P.defect(y_new);

    if (E_new > st.E + params.decay_slack * std::max(1.0, std::abs(st.E)))
      throw Error(ErrorKind::energy_increase, detail::step_context("gradient flow", n) + "energy increased from " +
                                                  std::to_string(st.E) + " to " + std::to_string(E_new));
    const double bound = st.D + detail::cellwise_gram(V, dy, dy, false) + detail::cellwise_gram(V, dy, st.y, true);
    if (D_new > bound + params.defect_slack * std::max(1.0, bound))
      throw Error(ErrorKind::internal, detail::step_context("gradient flow", n) + "metric defect expansion bound violated");

    const double dE = std::abs(E_new - st.E);
    st.y = y_new;
    st.E = E_new;
    st.D = D_new;
    st.steps = n;
    st.schur_min = std::min(st.schur_min, sol.iterations);
    st.schur_max = std::max(st.schur_max, sol.iterations);
    st.history.push_back({n, E_new, D_new, sol.iterations, P.h2_norm(dy), detail::ms_since(t0)});
    if (observer) observer(st.history.back());
    if (dE / params.tau <= params.tol) {
      st.converged = true;
      break;
    }
  }
  if (st.schur_min == std::numeric_limits<int>::max()) st.schur_min = 0;
  if (!st.converged)
    throw Error(ErrorKind::nonconvergence, "gradient flow did not stop within " + std::to_string(params.max_steps) + " steps");
  return st;
}

/// Boundary-condition preprocessing: solves c_h(yhat, v) = (fhat, v) once.
/// Clamped problems use their own (phi, Phi); otherwise values are anchored
/// to phi = (x, 0) on the whole boundary without gradient data.
inline FieldCoeffs bc_preprocess(const PlateProblem &P, const VectorFunction &fhat, double gamma0_hat = 1.0,
                                 double gamma1_hat = 1.0) {
  const BrokenSpace &V = P.space();
  const JumpSet J = P.clamped() ? P.jumps()
                                : JumpSet::value_anchor(P.mesh(), [](const Vec2 &x) { return Vec3(x.x(), x.y(), 0.0); });
  const HessianCache cache(V, V, J);
  const BilaplacianSystem sys = assemble_bilaplacian(cache, J, gamma0_hat, gamma1_hat, fhat);
  try {
    const SpdFactorization fact(sys.C);
    return fact.solve(sys.rhs);
  } catch (const Error &e) {
    throw Error(e.kind(), std::string("BC preprocessing: ") + e.what());
  }
}

struct PreprocessParams {
  double tau = 0.05;     ///< pseudo time step
  double eps0 = 0.1;     ///< target defect; <= 0 disables
  double tol = 1e-6;     ///< stationarity tolerance; <= 0 disables
  int max_steps = 20000;
  /// Energy monitored by the stationarity test: the stretching energy by
  /// default, or E_h.
  bool stop_on_bending_energy = false;

  void validate() const {
    if (!(tau > 0) || max_steps <= 0) throw Error(ErrorKind::invalid_parameter, "preprocessing needs tau > 0");
    if (!(eps0 > 0) && !(tol > 0))
      throw Error(ErrorKind::invalid_parameter, "preprocessing needs at least one stopping criterion");
  }
};

struct PreprocessState {
  FieldCoeffs y;
  double E_stretch = 0, D = 0;
  int steps = 0;
  int stretch_increases = 0;
  std::vector<StepRecord> history; ///< E column holds E_h
};

/// Metric preprocessing: H^2 gradient flow for the stretching energy,
/// (tau^{-1} M + S(y^n)) dy = -S(y^n) y^n, until D_h <= eps0 or the
/// monitored energy is stationary.
inline PreprocessState metric_preprocess(const PlateProblem &P, const FieldCoeffs &y0, const PreprocessParams &params,
                                         const StepObserver &observer = nullptr) {
  params.validate();
  const BrokenSpace &V = P.space();
  const SparseMatrix Mt = (1.0 / params.tau) * P.h2_product();
  PreprocessState st;
  st.y = y0;
  st.D = P.defect(st.y);
  st.E_stretch = P.stretching(st.y);
  double monitored = params.stop_on_bending_energy ? P.energy(st.y) : st.E_stretch;
  st.history.push_back({0, P.energy(st.y), st.D, 0, 0.0, 0.0});
  if (observer) observer(st.history.back());
  if (params.eps0 > 0 && st.D <= params.eps0) return st;

  SpdFactorization fact;
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 1; n <= params.max_steps; ++n) {
    const SparseMatrix S = assemble_stretch(V, st.y, P.metric_field());
    try {
      fact.factorize(Mt + S);
    } catch (const Error &e) {
      throw Error(e.kind(), detail::step_context("metric preprocessing", n) + e.what());
    }
    FieldCoeffs rhs(V.n_scalar(), 3);
    for (int c = 0; c < 3; ++c) rhs.col(c) = -(S * st.y.col(c));
    const FieldCoeffs dy = fact.solve(rhs);
    st.y += dy;
    const double Es = P.stretching(st.y);
    if (Es > st.E_stretch) ++st.stretch_increases;
    st.E_stretch = Es;
    st.D = P.defect(st.y);
    st.steps = n;
    const double Eh = P.energy(st.y);
    const double m_new = params.stop_on_bending_energy ? Eh : Es;
    const double dm = std::abs(m_new - monitored);
    monitored = m_new;
    st.history.push_back({n, Eh, st.D, 0, P.h2_norm(dy), detail::ms_since(t0)});
    if (observer) observer(st.history.back());
    if (params.eps0 > 0 && st.D <= params.eps0) return st;
    if (params.tol > 0 && dm / params.tau <= params.tol) return st;
  }
  throw Error(ErrorKind::nonconvergence,
              "metric preprocessing did not stop within " + std::to_string(params.max_steps) + " steps");
}

} // namespace ldgplate
