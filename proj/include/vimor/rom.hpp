#pragma once

// Online reduced-order solver: operator projection (dense or hyper-reduced),
// reduced Uzawa and direct NNLS backends, reconstruction and reduced time
// stepping with an optional coordinate corrector.

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "vimor/eim.hpp"
#include "vimor/eq.hpp"
#include "vimor/fom.hpp"
#include "vimor/nnls.hpp"

namespace vimor::rom {

enum class Backend { Nnls, Uzawa };
enum class HyperMode { Dense, Eq, Eim };

// Returns the coordinate vector used for reconstruction in place of the raw
// Galerkin coordinates.
using CorrectorHook =
    std::function<Vec(const Vec& alpha, int nu, const fom::ParameterPoint& mu)>;

// Precomputed reduced views of the EIM modes; the contact modes are stored
// as their projected R x Ntot matrices (one per mode, column-major
// vectorization of the full operator).
struct EimProjection {
  Mat pv;               // V' G1, Ntot x m1
  std::vector<Mat> pb;  // W' mat(g2_j) V, each R x Ntot
  Mat pw;               // W' G3, R x m3
};

struct ReducedModel {
  Mat V;  // enriched primal basis, orthonormal columns (POD head + supremizers)
  Mat W;  // dual cone generators, Ncont x R, entries >= 0
  Index n_pod = 0;  // number of leading POD columns inside V

  std::optional<hyper::EimModel> eim1, eim2, eim3;
  std::optional<hyper::EqModel> eq1, eq2, eq3;
  std::optional<EimProjection> eim_projection;

  Index total() const { return V.cols(); }
  Index cone_size() const { return W.cols(); }

  bool has_eq() const { return eq1 && eq2 && eq3; }
  bool has_eim() const { return eim1 && eim2 && eim3; }

  static ReducedModel identity(Index dim, Index n_cont) {
    ReducedModel m;
    m.V = Mat::Identity(dim, dim);
    m.W = Mat::Identity(n_cont, n_cont);
    m.n_pod = dim;
    return m;
  }
};

// Builds the reduced views of attached EIM models; call once offline.
inline void attach_eim_projection(ReducedModel& model) {
  if (!model.has_eim()) throw ConfigError("attach_eim_projection: EIM models missing");
  EimProjection proj;
  proj.pv = model.V.transpose() * model.eim1->modes;
  proj.pw = model.W.transpose() * model.eim3->modes;
  const Index rows = model.W.rows();
  const Index cols = model.V.rows();
  proj.pb.reserve(static_cast<std::size_t>(model.eim2->m()));
  for (Index j = 0; j < model.eim2->m(); ++j) {
    const Eigen::Map<const Mat> mode(model.eim2->modes.col(j).data(), rows, cols);
    proj.pb.push_back(model.W.transpose() * mode * model.V);
  }
  model.eim_projection = std::move(proj);
}

struct ReducedOperators {
  Vec ups;  // V' upsilon
  Mat B;    // W' B V
  Vec d;    // W' d
};

// Exact dense projection of the three operators.
inline ReducedOperators project_operators(const geom::ContactSystem& sys,
                                          const Vec& upsilon,
                                          const ReducedModel& model) {
  if (sys.B.cols() != model.V.rows() || sys.rows() != model.W.rows())
    throw DimensionError("project_operators: shape mismatch");
  ReducedOperators ops;
  ops.ups = model.V.transpose() * upsilon;
  ops.B = model.W.transpose() * (sys.B * model.V);
  ops.d = model.W.transpose() * sys.d;
  return ops;
}

struct ReducedSolveResult {
  Vec alpha;
  Vec beta;
  long long iterations = 0;
  bool converged = false;
};

inline ReducedSolveResult reduced_solve(const ReducedOperators& ops,
                                        Backend backend, double rho,
                                        double epsilon, long long k_max) {
  ReducedSolveResult out;
  const Index R = ops.B.rows();
  if (backend == Backend::Nnls) {
    // Dual of the projection: min over beta >= 0 of
    // 1/2 beta' BB' beta - beta'(B ups - d), then alpha = ups - B' beta.
    const Mat Q = ops.B * ops.B.transpose();
    const Vec c = ops.B * ops.ups - ops.d;
    out.beta = nnqp(Q, c);
    out.alpha = ops.ups - ops.B.transpose() * out.beta;
    out.iterations = 1;
    out.converged = true;
    return out;
  }
  if (rho <= 0.0) throw ConfigError("reduced_solve: rho must be positive");
  Vec beta = Vec::Zero(R);
  Vec beta_prev = beta;
  Vec alpha = ops.ups;
  Vec alpha_prev = alpha;
  const double a_scale = std::max(ops.ups.norm(), 1e-30);
  for (long long k = 1; k <= k_max; ++k) {
    alpha_prev.swap(alpha);
    beta_prev.swap(beta);
    alpha.noalias() = ops.ups - ops.B.transpose() * beta_prev;
    beta.noalias() = beta_prev + rho * (ops.B * alpha - ops.d);
    beta = beta.cwiseMax(0.0);
    const double db = (beta - beta_prev).norm() / (beta_prev.norm() + 1.0);
    const double da = (alpha - alpha_prev).norm() / std::max(alpha_prev.norm(), a_scale);
    out.iterations = k;
    if (k >= 2 && db <= epsilon && da <= epsilon) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged)
    throw ConvergenceError("reduced_solve: Uzawa backend did not converge");
  out.alpha = std::move(alpha);
  out.beta = std::move(beta);
  return out;
}

// u = V alpha, lambda = W beta.
inline std::pair<Vec, Vec> reconstruct(const Vec& alpha, const Vec& beta,
                                       const ReducedModel& model) {
  if (alpha.size() != model.total() || beta.size() != model.cone_size())
    throw DimensionError("reconstruct: coordinate dimensions mismatch");
  return {model.V * alpha, model.W * beta};
}

struct RomSettings {
  Backend backend = Backend::Nnls;
  HyperMode hyper = HyperMode::Dense;
  double rho = 0.0;  // <= 0 selects 0.2/h^2 for the Uzawa backend
  double epsilon = 1e-12;
  long long max_iterations = 10000000;
};

namespace detail {

inline ReducedOperators evaluate_operators(const Vec& q, const geom::Scenario& s,
                                           const fom::ParameterPoint& mu,
                                           const ReducedModel& model,
                                           HyperMode mode,
                                           const std::vector<geom::ContactIndexEntry>& map,
                                           const std::vector<geom::Obstacle>& obstacles) {
  if (mode == HyperMode::Dense) {
    const auto sys = geom::assemble_contact_system(q, s, s.time_step);
    return project_operators(sys, fom::spontaneous_velocity(q, mu, s), model);
  }
  if (mode == HyperMode::Eq) {
    if (!model.has_eq()) throw ConfigError("rom: EQ models not attached");
    ReducedOperators ops;
    Vec s1(model.eq1->m());
    for (Index a = 0; a < model.eq1->m(); ++a)
      s1[a] = fom::spontaneous_velocity_entry(
          q, mu, s, model.eq1->indices[static_cast<std::size_t>(a)]);
    ops.ups = hyper::eq_upsilon(*model.eq1, s1, model.V);

    Mat bV(model.eq2->m(), model.total());
    for (Index a = 0; a < model.eq2->m(); ++a) {
      const auto row = geom::contact_row(
          q, s, model.eq2->indices[static_cast<std::size_t>(a)], map, obstacles,
          s.time_step);
      bV.row(a).setZero();
      for (int t = 0; t < row.nnz; ++t)
        bV.row(a) += row.val[t] * model.V.row(row.idx[t]);
    }
    ops.B = hyper::eq_contact(*model.eq2, bV, model.W);

    Vec s3(model.eq3->m());
    for (Index a = 0; a < model.eq3->m(); ++a)
      s3[a] = geom::contact_row(q, s,
                                model.eq3->indices[static_cast<std::size_t>(a)],
                                map, obstacles, s.time_step)
                  .gap;
    ops.d = hyper::eq_gaps(*model.eq3, s3, model.W);
    return ops;
  }
  // EIM path: sample the non-affine quantities at the interpolation
  // indices, solve for the coefficients, assemble via precomputed views.
  if (!model.has_eim() || !model.eim_projection)
    throw ConfigError("rom: EIM models not attached");
  const EimProjection& proj = *model.eim_projection;
  ReducedOperators ops;

  Vec s1(model.eim1->m());
  for (Index a = 0; a < model.eim1->m(); ++a)
    s1[a] = fom::spontaneous_velocity_entry(
        q, mu, s, model.eim1->indices[static_cast<std::size_t>(a)]);
  ops.ups = proj.pv * hyper::eim_coefficients(*model.eim1, s1);

  const Index n_rows = model.W.rows();
  Vec s2(model.eim2->m());
  for (Index a = 0; a < model.eim2->m(); ++a) {
    const Index flat = model.eim2->indices[static_cast<std::size_t>(a)];
    const Index row_id = flat % n_rows;  // column-major vectorization
    const Index col_id = flat / n_rows;
    const auto row = geom::contact_row(q, s, row_id, map, obstacles, s.time_step);
    double value = 0.0;
    for (int t = 0; t < row.nnz; ++t)
      if (row.idx[t] == col_id) value = row.val[t];
    s2[a] = value;
  }
  const Vec c2 = hyper::eim_coefficients(*model.eim2, s2);
  Mat Bh = Mat::Zero(model.cone_size(), model.total());
  for (Index j = 0; j < c2.size(); ++j) Bh += c2[j] * proj.pb[static_cast<std::size_t>(j)];
  ops.B = Bh;

  Vec s3(model.eim3->m());
  for (Index a = 0; a < model.eim3->m(); ++a)
    s3[a] = geom::contact_row(q, s,
                              model.eim3->indices[static_cast<std::size_t>(a)],
                              map, obstacles, s.time_step)
                .gap;
  ops.d = proj.pw * hyper::eim_coefficients(*model.eim3, s3);
  return ops;
}

}  // namespace detail

struct RomTrajectory {
  Mat positions;
  Mat velocities;
  Mat multipliers;
  Mat coordinates;  // alpha per step (raw Galerkin coordinates)
  std::vector<long long> iterations;
  double wall_seconds = 0.0;
  bool completed = true;
  std::string failure;

  int steps() const { return static_cast<int>(velocities.cols()); }
};

// Reduced time stepping from a given initial configuration (shared with the
// FOM via the seed). The optional corrector maps the Galerkin coordinates to
// the coordinates used for reconstruction; the corrected velocity drives the
// position update.
inline RomTrajectory rom_simulate(const geom::Scenario& s,
                                  const fom::ParameterPoint& mu,
                                  const ReducedModel& model, const Vec& q0,
                                  const RomSettings& st = {},
                                  const CorrectorHook* corrector = nullptr) {
  const geom::Scenario sc = s.with_exit(mu.l_exit);
  const auto t0 = std::chrono::steady_clock::now();
  const auto map = geom::contact_index(sc);
  const auto obstacles = sc.obstacles();
  const double rho = st.rho > 0.0 ? st.rho : fom::default_rho(sc.time_step);

  RomTrajectory traj;
  const Index dim = q0.size();
  const int nt = sc.horizon;
  traj.positions.resize(dim, nt + 1);
  traj.velocities.resize(dim, nt);
  traj.multipliers.resize(model.W.rows(), nt);
  traj.coordinates.resize(model.total(), nt);
  traj.positions.col(0) = q0;

  Vec q = q0;
  int done = 0;
  for (int nu = 1; nu <= nt; ++nu) {
    try {
      const ReducedOperators ops =
          detail::evaluate_operators(q, sc, mu, model, st.hyper, map, obstacles);
      const ReducedSolveResult sol =
          reduced_solve(ops, st.backend, rho, st.epsilon, st.max_iterations);
      Vec coords = sol.alpha;
      if (corrector && *corrector) coords = (*corrector)(sol.alpha, nu, mu);
      const Vec u = model.V * coords;
      const Vec lambda = model.W * sol.beta;
      q += sc.time_step * u;
      traj.positions.col(nu) = q;
      traj.velocities.col(nu - 1) = u;
      traj.multipliers.col(nu - 1) = lambda;
      traj.coordinates.col(nu - 1) = sol.alpha;
      traj.iterations.push_back(sol.iterations);
      done = nu;
    } catch (const std::exception& e) {
      traj.completed = false;
      traj.failure = e.what();
      break;
    }
  }
  traj.positions.conservativeResize(dim, done + 1);
  traj.velocities.conservativeResize(dim, done);
  traj.multipliers.conservativeResize(traj.multipliers.rows(), done);
  traj.coordinates.conservativeResize(model.total(), done);
  traj.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return traj;
}

}  // namespace vimor::rom
