#pragma once

// Full-order model: spontaneous velocity field, Uzawa saddle-point solver,
// explicit time stepping, position initialization and snapshot recording.

#include <chrono>
#include <string>
#include <vector>

#include "vimor/common.hpp"
#include "vimor/geometry.hpp"

namespace vimor::fom {

// mu = (exit width, componentwise speed multipliers). The speed vector has
// one entry per coordinate; a constant vector reproduces scalar magnitudes.
struct ParameterPoint {
  double l_exit = 2.0;
  Vec c;

  static ParameterPoint constant(double l_exit, double speed, int n_agents) {
    ParameterPoint mu;
    mu.l_exit = l_exit;
    mu.c = Vec::Constant(2 * n_agents, speed);
    return mu;
  }
};

struct UzawaResult {
  Vec u;
  Vec lambda;
  long long iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;  // multiplier stopping-rule values
  std::vector<Vec> velocity_history;     // only with record_history
};

struct FomSettings {
  double rho = 0.0;        // <= 0 selects the default 0.2/h^2
  bool rho_auto = false;   // 0.9 * 2/||B||_2^2 instead, via power iteration
  double epsilon = 1e-12;
  long long max_iterations = 10000000;
};

// Spectral norm of B via 20 power iterations on B'B.
inline double two_norm_estimate(const SpMat& B, int iters = 20) {
  if (B.rows() == 0 || B.cols() == 0) return 0.0;
  Rng rng(0x5eedULL);
  Vec v = gaussian_matrix(B.cols(), 1, rng).col(0);
  double norm = v.norm();
  if (norm == 0.0) return 0.0;
  v /= norm;
  double sigma2 = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec w = B.transpose() * (B * v).eval();
    sigma2 = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
  }
  return std::sqrt(std::max(sigma2, 0.0));
}

inline double default_rho(double h) { return 0.2 / (h * h); }

inline double auto_rho(const SpMat& B) {
  const double nb = two_norm_estimate(B);
  if (nb < 1e-14) return 1.0;
  return 0.9 * 2.0 / (nb * nb);
}

inline double resolve_rho(const FomSettings& st, const geom::ContactSystem& sys) {
  if (st.rho > 0.0) return st.rho;
  if (st.rho_auto) return auto_rho(sys.B);
  return default_rho(sys.h);
}

// Fixed-step dual ascent for the projection of upsilon onto {u : Bu <= d}.
// Converges for 0 < rho < 2/||B||_2^2. Both the multiplier rule
// ||dl||/(||l||+1) <= eps and the relative velocity change must hold. The
// velocity denominator is floored at the spontaneous-velocity scale so the
// rule stays meaningful when the limit velocity vanishes.
inline UzawaResult uzawa_solve(const geom::ContactSystem& sys, const Vec& upsilon,
                               double rho, double epsilon, long long k_max,
                               bool record_history = false) {
  if (upsilon.size() != sys.B.cols())
    throw DimensionError("uzawa_solve: velocity dimension mismatch");
  if (rho <= 0.0) throw ConfigError("uzawa_solve: rho must be positive");

  UzawaResult res;
  const Index m = sys.rows();
  Vec lambda = Vec::Zero(m);
  Vec lambda_prev = lambda;
  Vec u = upsilon;
  Vec u_prev = u;
  const double u_scale = std::max(upsilon.norm(), 1e-30);

  for (long long k = 1; k <= k_max; ++k) {
    u_prev.swap(u);
    lambda_prev.swap(lambda);
    u.noalias() = upsilon - sys.B.transpose() * lambda_prev;
    lambda.noalias() = lambda_prev + rho * (sys.B * u - sys.d);
    lambda = lambda.cwiseMax(0.0);

    const double dl = (lambda - lambda_prev).norm() / (lambda_prev.norm() + 1.0);
    const double du = (u - u_prev).norm() / std::max(u_prev.norm(), u_scale);
    if (record_history) {
      res.residual_history.push_back(dl);
      res.velocity_history.push_back(u);
    }
    if (k >= 2 && dl <= epsilon && du <= epsilon) {
      res.iterations = k;
      res.converged = true;
      break;
    }
    res.iterations = k;
  }
  res.u = std::move(u);
  res.lambda = std::move(lambda);
  return res;
}

// Straight-to-exit velocity field: each agent heads for the exit-segment
// midpoint; agents at or past the exit line keep moving straight out. The
// per-coordinate multipliers in mu.c scale the unit direction.
inline Vec spontaneous_velocity(const Vec& q, const ParameterPoint& mu,
                                const geom::Scenario& s) {
  geom::detail::check_dims(q, s);
  if (mu.c.size() != q.size())
    throw DimensionError("spontaneous_velocity: speed vector dimension mismatch");
  const Vec2 mid = s.exit_midpoint();
  Vec v(q.size());
  for (int i = 0; i < s.n_agents; ++i) {
    const Vec2 qi(q[2 * i], q[2 * i + 1]);
    Vec2 dir(0.0, 1.0);
    if (qi.y() < s.hall_height) {
      const Vec2 diff = mid - qi;
      const double norm = diff.norm();
      if (norm > 0.0) dir = diff / norm;
    }
    v[2 * i] = mu.c[2 * i] * dir.x();
    v[2 * i + 1] = mu.c[2 * i + 1] * dir.y();
  }
  return v;
}

// Single coordinate of the spontaneous velocity (hyper-reduction sampling).
inline double spontaneous_velocity_entry(const Vec& q, const ParameterPoint& mu,
                                         const geom::Scenario& s, Index coord) {
  const int agent = static_cast<int>(coord / 2);
  const Vec2 qi(q[2 * agent], q[2 * agent + 1]);
  const Vec2 mid = s.exit_midpoint();
  Vec2 dir(0.0, 1.0);
  if (qi.y() < s.hall_height) {
    const Vec2 diff = mid - qi;
    const double norm = diff.norm();
    if (norm > 0.0) dir = diff / norm;
  }
  return mu.c[coord] * (coord % 2 == 0 ? dir.x() : dir.y());
}

struct StepResult {
  Vec q_next;
  Vec u;
  Vec lambda;
  long long iterations = 0;
};

inline StepResult step(const Vec& q, const ParameterPoint& mu,
                       const geom::Scenario& s, const FomSettings& st = {}) {
  const geom::ContactSystem sys = geom::assemble_contact_system(q, s, s.time_step);
  const Vec upsilon = spontaneous_velocity(q, mu, s);
  const UzawaResult res = uzawa_solve(sys, upsilon, resolve_rho(st, sys),
                                      st.epsilon, st.max_iterations);
  if (!res.converged)
    throw ConvergenceError("fom::step: Uzawa did not converge within " +
                           std::to_string(st.max_iterations) + " iterations");
  StepResult out;
  out.q_next = q + s.time_step * res.u;
  out.u = res.u;
  out.lambda = res.lambda;
  out.iterations = res.iterations;
  return out;
}

struct Trajectory {
  Mat positions;    // 2 Na x (steps+1)
  Mat velocities;   // 2 Na x steps
  Mat multipliers;  // Ncont x steps
  std::vector<long long> uzawa_iterations;
  double wall_seconds = 0.0;
  bool completed = true;
  std::string failure;

  int steps() const { return static_cast<int>(velocities.cols()); }
};

namespace detail {

// Scenario contact rows plus four hall-wall rows per agent; used only by the
// initialization separation solve.
inline geom::ContactSystem boxed_system(const Vec& q, const geom::Scenario& s) {
  geom::ContactSystem base = geom::assemble_contact_system(q, s, s.time_step);
  const Index m = base.rows();
  const int na = s.n_agents;
  geom::ContactSystem sys;
  sys.h = base.h;
  sys.index = base.index;
  sys.d.resize(m + 4 * na);
  sys.d.head(m) = base.d;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(base.B.nonZeros()) + 8 * static_cast<std::size_t>(na));
  for (Index k = 0; k < base.B.outerSize(); ++k)
    for (SpMat::InnerIterator it(base.B, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  const double r = s.agent_radius;
  const double h = s.time_step;
  for (int i = 0; i < na; ++i) {
    const Index row = m + 4 * i;
    const double x = q[2 * i], y = q[2 * i + 1];
    sys.d[row + 0] = x - r;
    trips.emplace_back(static_cast<int>(row + 0), 2 * i, -h);
    sys.d[row + 1] = s.hall_width - r - x;
    trips.emplace_back(static_cast<int>(row + 1), 2 * i, h);
    sys.d[row + 2] = y - r;
    trips.emplace_back(static_cast<int>(row + 2), 2 * i + 1, -h);
    sys.d[row + 3] = s.hall_height - r - y;
    trips.emplace_back(static_cast<int>(row + 3), 2 * i + 1, h);
  }
  sys.B.resize(m + 4 * na, 2 * na);
  sys.B.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

}  // namespace detail

// Uniform random placement in the hall followed by one Uzawa separation
// solve (zero spontaneous velocity, 1000-iteration cap, hall walls included
// as constraints). Deterministic given the seed.
inline Vec initialize_positions(const geom::Scenario& s, std::uint64_t seed) {
  s.validate();
  const double r = s.agent_radius;
  if (s.hall_width <= 2 * r || s.hall_height <= 2 * r)
    throw ConfigError("initialize_positions: hall too small for agent radius");
  Rng rng = Rng::derive(seed, 1);
  const auto obstacles = s.obstacles();
  Vec q(2 * s.n_agents);
  for (int i = 0; i < s.n_agents; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const Vec2 p(rng.uniform(r, s.hall_width - r), rng.uniform(r, s.hall_height - r));
      bool clear = true;
      for (const auto& obs : obstacles) {
        const auto g = geom::detail::obstacle_gap(p, obs);
        const double gap = s.subtract_radius_for_obstacles ? g.gap - r : g.gap;
        if (g.degenerate || gap < 0.0) clear = false;
      }
      if (clear) {
        q[2 * i] = p.x();
        q[2 * i + 1] = p.y();
        placed = true;
      }
    }
    if (!placed)
      throw ConvergenceError("initialize_positions: could not place agent " +
                             std::to_string(i));
  }
  if (s.n_agents == 1) return q;

  const geom::ContactSystem sys = detail::boxed_system(q, s);
  const Vec zero = Vec::Zero(q.size());
  const UzawaResult sep =
      uzawa_solve(sys, zero, auto_rho(sys.B), 1e-12, 1000);
  q += s.time_step * sep.u;

  const double residual = geom::min_gap(q, s);
  if (residual < -1e-6 * r)
    throw ConvergenceError(
        "initialize_positions: separation left residual overlap " +
        std::to_string(residual));
  return q;
}

inline bool all_exited(const Vec& q, const geom::Scenario& s) {
  for (int i = 0; i < s.n_agents; ++i)
    if (q[2 * i + 1] <= s.hall_height + s.agent_radius) return false;
  return true;
}

// Runs initialize_positions then horizon steps (or until the crowd exits
// when the flag is set). A step failure aborts with the partial trajectory
// attached in the result.
inline Trajectory simulate(const geom::Scenario& s, const ParameterPoint& mu,
                           std::uint64_t seed, const FomSettings& st = {}) {
  const geom::Scenario sc = s.with_exit(mu.l_exit);
  const auto t0 = std::chrono::steady_clock::now();
  Trajectory traj;
  Vec q = initialize_positions(sc, seed);
  const Index dim = q.size();
  const int nt = sc.horizon;
  traj.positions.resize(dim, nt + 1);
  traj.velocities.resize(dim, nt);
  traj.multipliers.resize(sc.n_contacts(), nt);
  traj.positions.col(0) = q;

  int done = 0;
  for (int nu = 1; nu <= nt; ++nu) {
    try {
      StepResult sr = step(q, mu, sc, st);
      q = sr.q_next;
      traj.positions.col(nu) = q;
      traj.velocities.col(nu - 1) = sr.u;
      traj.multipliers.col(nu - 1) = sr.lambda;
      traj.uzawa_iterations.push_back(sr.iterations);
      done = nu;
    } catch (const std::exception& e) {
      traj.completed = false;
      traj.failure = e.what();
      break;
    }
    if (sc.run_until_exit && all_exited(q, sc)) break;
  }
  traj.positions.conservativeResize(dim, done + 1);
  traj.velocities.conservativeResize(dim, done);
  traj.multipliers.conservativeResize(traj.multipliers.rows(), done);
  traj.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return traj;
}

}  // namespace vimor::fom
