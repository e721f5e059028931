#pragma once

// Dual reduced-cone construction for the Lagrange multipliers: greedy index
// selection (canonical basis vectors at the largest coordinates) and the
// modified cone projected greedy (normalized non-negative residuals), plus
// the non-negative cone projection both rely on.

#include <vector>

#include "vimor/nnls.hpp"
#include "vimor/pod.hpp"

namespace vimor::red {

struct DualCone {
  Mat W;                              // Ncont x R, entries >= 0
  std::vector<Index> selected_sigma;  // snapshot column chosen at each step
  std::vector<Index> selected_index;  // gIS coordinate i_r (empty for mCPG)
  std::vector<double> error_history;  // e_r per iteration

  Index R() const { return W.cols(); }
};

struct ConeProjection {
  Vec beta;
  double residual = 0.0;
};

// beta = argmin_{beta >= 0} ||lambda - W beta||, by Lawson-Hanson.
inline ConeProjection cone_project(const Vec& lambda, const Mat& W) {
  if (W.cols() == 0)
    throw DimensionError("cone_project: empty generator set");
  const NnlsResult r = nnls(W, lambda);
  return {r.x, r.residual};
}

// Greedy index selection. Ties break to the lowest coordinate index and the
// earliest snapshot label.
inline DualCone gis(const SnapshotSet& snapshots, double delta, Index R_max) {
  snapshots.validate();
  const Mat& L = snapshots.S;
  const Index dim = L.rows();
  const Index n = L.cols();
  DualCone cone;
  cone.W.resize(dim, 0);
  if (n == 0) return cone;

  Index sigma = 0;
  double best = -1.0;
  for (Index j = 0; j < n; ++j) {
    const double v = L.col(j).squaredNorm();
    if (v > best) {
      best = v;
      sigma = j;
    }
  }
  const double norm1 = std::sqrt(best);
  if (norm1 == 0.0) return cone;  // all snapshots zero

  // The residual of a snapshot is its restriction to the unused coordinates;
  // summing over those directly keeps exact zeros exact.
  std::vector<bool> used(static_cast<std::size_t>(dim), false);
  auto residual2 = [&](Index j) {
    double acc = 0.0;
    for (Index i = 0; i < dim; ++i)
      if (!used[static_cast<std::size_t>(i)]) acc += L(i, j) * L(i, j);
    return acc;
  };

  double e = 1.0 + delta;
  Index r = 0;
  while (e > delta && r < R_max && r < dim) {
    ++r;
    Index ir = -1;
    double vmax = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < dim; ++i)
      if (!used[static_cast<std::size_t>(i)] && L(i, sigma) > vmax) {
        vmax = L(i, sigma);
        ir = i;
      }
    used[static_cast<std::size_t>(ir)] = true;
    cone.selected_sigma.push_back(sigma);
    cone.selected_index.push_back(ir);
    Index next = 0;
    double worst = -1.0;
    for (Index j = 0; j < n; ++j) {
      const double res = residual2(j);
      if (res > worst) {
        worst = res;
        next = j;
      }
    }
    e = std::sqrt(worst) / norm1;
    cone.error_history.push_back(e);
    sigma = next;
  }

  cone.W = Mat::Zero(dim, r);
  for (Index k = 0; k < r; ++k)
    cone.W(cone.selected_index[static_cast<std::size_t>(k)], k) = 1.0;
  return cone;
}

namespace detail {

// Residual norm of the plain non-negative projection, evaluated in Gram
// coordinates: ||l||^2 - 2 k'g + k'Hk with k = nnqp(H, g).
inline double cone_residual_gram(const Mat& H, const Vec& g, double lam2) {
  if (g.size() == 0) return std::sqrt(std::max(lam2, 0.0));
  const Vec k = nnqp(H, g);
  const double val = lam2 - 2.0 * k.dot(g) + k.dot(H * k);
  return std::sqrt(std::max(val, 0.0));
}

}  // namespace detail

// Modified cone projected greedy. The per-step interpolation problem keeps
// the residual componentwise non-negative; its QP is solved by the primal
// active set in qp_ineq.
inline DualCone mcpg(const SnapshotSet& snapshots, double delta, Index R_max) {
  snapshots.validate();
  const Mat& L = snapshots.S;
  const Index dim = L.rows();
  const Index n = L.cols();
  DualCone cone;
  cone.W.resize(dim, 0);
  if (n == 0) return cone;

  Index sigma = 0;
  double best = -1.0;
  for (Index j = 0; j < n; ++j) {
    const double v = L.col(j).squaredNorm();
    if (v > best) {
      best = v;
      sigma = j;
    }
  }
  const double norm1 = std::sqrt(best);
  if (norm1 == 0.0) return cone;

  Mat psi(dim, 0);
  Mat gram(0, 0);        // psi'psi
  Mat cross(0, n);       // psi'L
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  double e = 1.0 + delta;
  Index r = 0;
  while (e > delta && r < R_max) {
    ++r;
    taken[static_cast<std::size_t>(sigma)] = true;
    const Vec lambda = L.col(sigma);

    Vec gamma = Vec::Zero(dim);
    if (psi.cols() > 0) {
      const Vec g = psi.transpose() * lambda;
      const Vec k = qp_ineq(gram, g, psi, lambda);
      gamma = psi * k;
    }
    Vec resid = (lambda - gamma).cwiseMax(0.0);
    const double rn = resid.norm();
    if (rn < 1e-14 * std::max(norm1, 1.0)) {
      --r;  // numerically inside the cone already; nothing to add
      break;
    }
    resid /= rn;

    psi.conservativeResize(dim, r);
    psi.col(r - 1) = resid;
    gram.conservativeResize(r, r);
    cross.conservativeResize(r, n);
    cross.row(r - 1) = resid.transpose() * L;
    for (Index k = 0; k < r; ++k) {
      const double v = psi.col(k).dot(resid);
      gram(k, r - 1) = v;
      gram(r - 1, k) = v;
    }
    cone.selected_sigma.push_back(sigma);

    Index next = -1;
    double worst = -1.0;
    for (Index j = 0; j < n; ++j) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      const double res = detail::cone_residual_gram(gram, cross.col(j),
                                                    L.col(j).squaredNorm());
      if (res > worst) {
        worst = res;
        next = j;
      }
    }
    if (next < 0) {
      e = 0.0;
      cone.error_history.push_back(e);
      break;
    }
    e = worst / norm1;
    cone.error_history.push_back(e);
    sigma = next;
  }
  cone.W = psi;
  return cone;
}

}  // namespace vimor::red
