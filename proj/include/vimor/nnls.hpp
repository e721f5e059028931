#pragma once

// Active-set solvers for the small constrained least-squares problems used
// throughout the offline and online phases:
//
//   nnls    min ||A x - b||        s.t. x >= 0          (Lawson-Hanson)
//   nnqp    min 1/2 x'Qx - c'x     s.t. x >= 0          (Q PSD, possibly singular)
//   qp_ineq min 1/2 x'Hx - g'x     s.t. x >= 0, Cx <= u (primal active set)

#include <algorithm>
#include <limits>
#include <vector>

#include "vimor/common.hpp"

namespace vimor {

struct NnlsResult {
  Vec x;
  double residual = 0.0;  // ||A x - b||
  int iterations = 0;
};

namespace detail {

inline Vec solve_ls(const Mat& A, const Vec& b) {
  return A.colPivHouseholderQr().solve(b);
}

}  // namespace detail

inline NnlsResult nnls(const Mat& A, const Vec& b, int max_iter = 0) {
  const Index n = A.cols();
  if (max_iter <= 0) max_iter = 3 * static_cast<int>(n) + 100;
  Vec x = Vec::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, (A.transpose() * b).cwiseAbs().maxCoeff());

  NnlsResult out;
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter;
    const Vec w = A.transpose() * (b - A * x);
    int t = -1;
    double wmax = tol;
    for (Index i = 0; i < n; ++i)
      if (!passive[static_cast<std::size_t>(i)] && w[i] > wmax) {
        wmax = w[i];
        t = static_cast<int>(i);
      }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;

    for (;;) {
      std::vector<Index> P;
      for (Index i = 0; i < n; ++i)
        if (passive[static_cast<std::size_t>(i)]) P.push_back(i);
      Mat Ap(A.rows(), static_cast<Index>(P.size()));
      for (std::size_t k = 0; k < P.size(); ++k) Ap.col(static_cast<Index>(k)) = A.col(P[k]);
      const Vec zp = detail::solve_ls(Ap, b);

      bool all_pos = true;
      for (Index k = 0; k < zp.size(); ++k)
        if (zp[k] <= 0.0) all_pos = false;
      if (all_pos) {
        Vec xn = Vec::Zero(n);
        for (std::size_t k = 0; k < P.size(); ++k) xn[P[k]] = zp[static_cast<Index>(k)];
        x = xn;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < P.size(); ++k) {
        const double zi = zp[static_cast<Index>(k)];
        if (zi <= 0.0) {
          const double xi = x[P[k]];
          alpha = std::min(alpha, xi / (xi - zi));
        }
      }
      for (std::size_t k = 0; k < P.size(); ++k)
        x[P[k]] += alpha * (zp[static_cast<Index>(k)] - x[P[k]]);
      for (std::size_t k = 0; k < P.size(); ++k)
        if (x[P[k]] <= 1e-14) {
          x[P[k]] = 0.0;
          passive[static_cast<std::size_t>(P[k])] = false;
        }
    }
  }
  out.x = x;
  out.residual = (A * x - b).norm();
  return out;
}

// Non-negative quadratic program with PSD (possibly singular) Q. Face
// subproblems are solved in the least-squares sense, which picks the
// minimal-norm stationary point when multipliers are not unique.
inline Vec nnqp(const Mat& Q, const Vec& c, int max_iter = 0) {
  const Index n = Q.cols();
  if (max_iter <= 0) max_iter = 5 * static_cast<int>(n) + 200;
  Vec x = Vec::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff());

  for (int iter = 0; iter < max_iter; ++iter) {
    const Vec w = c - Q * x;
    int t = -1;
    double wmax = tol;
    for (Index i = 0; i < n; ++i)
      if (!passive[static_cast<std::size_t>(i)] && w[i] > wmax) {
        wmax = w[i];
        t = static_cast<int>(i);
      }
    if (t < 0) return x;
    passive[static_cast<std::size_t>(t)] = true;

    for (;;) {
      std::vector<Index> P;
      for (Index i = 0; i < n; ++i)
        if (passive[static_cast<std::size_t>(i)]) P.push_back(i);
      Mat Qp(static_cast<Index>(P.size()), static_cast<Index>(P.size()));
      Vec cp(static_cast<Index>(P.size()));
      for (std::size_t a = 0; a < P.size(); ++a) {
        cp[static_cast<Index>(a)] = c[P[a]];
        for (std::size_t bI = 0; bI < P.size(); ++bI)
          Qp(static_cast<Index>(a), static_cast<Index>(bI)) = Q(P[a], P[bI]);
      }
      const Vec zp = Qp.completeOrthogonalDecomposition().solve(cp);

      bool all_pos = true;
      for (Index k = 0; k < zp.size(); ++k)
        if (zp[k] <= 0.0) all_pos = false;
      if (all_pos) {
        Vec xn = Vec::Zero(n);
        for (std::size_t k = 0; k < P.size(); ++k) xn[P[k]] = zp[static_cast<Index>(k)];
        x = xn;
        break;
      }
      double alpha = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < P.size(); ++k) {
        const double zi = zp[static_cast<Index>(k)];
        if (zi <= 0.0) {
          const double xi = x[P[k]];
          alpha = std::min(alpha, xi / (xi - zi));
        }
      }
      for (std::size_t k = 0; k < P.size(); ++k)
        x[P[k]] += alpha * (zp[static_cast<Index>(k)] - x[P[k]]);
      for (std::size_t k = 0; k < P.size(); ++k)
        if (x[P[k]] <= 1e-14) {
          x[P[k]] = 0.0;
          passive[static_cast<std::size_t>(P[k])] = false;
        }
    }
  }
  throw ConvergenceError("nnqp: active-set iteration limit reached");
}

// min 1/2 x'Hx - g'x  s.t.  x >= 0 and Cx <= u, starting from the feasible
// point x = 0 (requires u >= 0). H must be positive definite on the feasible
// directions; ties are broken by lowest constraint index. If the active-set
// loop cycles, falls back to projected gradient with diminishing steps and a
// final feasibility pull-back.
inline Vec qp_ineq(const Mat& H, const Vec& g, const Mat& C, const Vec& u,
                   int max_iter = 0) {
  const Index n = H.cols();
  const Index mC = C.rows();
  const Index m = n + mC;  // bound rows first, then general rows
  if (max_iter <= 0) max_iter = 20 * static_cast<int>(m) + 200;

  auto row_dot = [&](Index r, const Vec& v) -> double {
    return r < n ? -v[r] : C.row(r - n).dot(v);
  };
  auto rhs = [&](Index r) -> double { return r < n ? 0.0 : u[r - n]; };

  Vec x = Vec::Zero(n);
  std::vector<Index> work;  // active working set, sorted
  for (Index r = 0; r < m; ++r)
    if (std::abs(row_dot(r, x) - rhs(r)) < 1e-14) {
      if (r < n) work.push_back(r);  // bounds active at the origin
    }

  auto build_active = [&](Mat& Aw) {
    Aw.resize(static_cast<Index>(work.size()), n);
    for (std::size_t k = 0; k < work.size(); ++k) {
      const Index r = work[k];
      if (r < n) {
        Aw.row(static_cast<Index>(k)).setZero();
        Aw(static_cast<Index>(k), r) = -1.0;
      } else {
        Aw.row(static_cast<Index>(k)) = C.row(r - n);
      }
    }
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    const Vec grad = H * x - g;
    Mat Aw;
    build_active(Aw);

    Vec p;
    if (work.empty()) {
      p = H.ldlt().solve(-grad);
    } else {
      // Null-space step: p = Z y with A_w Z = 0; Z from the SVD of A_w.
      Eigen::JacobiSVD<Mat> svd(Aw, Eigen::ComputeFullV);
      svd.setThreshold(1e-12);
      const Index rank = svd.rank();
      if (rank >= n) {
        p = Vec::Zero(n);
      } else {
        const Mat Z = svd.matrixV().rightCols(n - rank);
        const Mat Hz = Z.transpose() * H * Z;
        const Vec y = Hz.ldlt().solve(-Z.transpose() * grad);
        p = Z * y;
      }
    }

    if (p.lpNorm<Eigen::Infinity>() < 1e-12) {
      if (work.empty()) return x;
      // Multipliers from grad = -A_w' mu at a stationary point.
      const Vec mu = Aw.transpose()
                         .completeOrthogonalDecomposition()
                         .solve(-grad);
      int drop = -1;
      double most_neg = -1e-10;
      for (std::size_t k = 0; k < work.size(); ++k)
        if (mu[static_cast<Index>(k)] < most_neg) {
          most_neg = mu[static_cast<Index>(k)];
          drop = static_cast<int>(k);
        }
      if (drop < 0) return x;
      work.erase(work.begin() + drop);
      continue;
    }

    // Largest step along p keeping feasibility.
    double alpha = 1.0;
    int blocking = -1;
    for (Index r = 0; r < m; ++r) {
      bool in_work = false;
      for (const Index w : work)
        if (w == r) in_work = true;
      if (in_work) continue;
      const double ap = row_dot(r, p);
      if (ap > 1e-14) {
        const double room = rhs(r) - row_dot(r, x);
        const double a = room / ap;
        if (a < alpha - 1e-14) {
          alpha = std::max(a, 0.0);
          blocking = static_cast<int>(r);
        }
      }
    }
    x += alpha * p;
    if (blocking >= 0) {
      auto pos = std::lower_bound(work.begin(), work.end(), static_cast<Index>(blocking));
      work.insert(pos, static_cast<Index>(blocking));
    }
  }

  // Fallback: projected gradient with diminishing steps on the bound
  // constraints, then pull back into the general constraints.
  Vec xf = Vec::Zero(n);
  double step = 1.0 / std::max(1.0, H.norm());
  for (int it = 0; it < 5000; ++it) {
    const Vec grad = H * xf - g;
    xf = (xf - step * grad).cwiseMax(0.0);
    if (it % 100 == 99) step *= 0.7;
  }
  double t = 1.0;
  const Vec cx = C * xf;
  for (Index r = 0; r < mC; ++r)
    if (cx[r] > u[r] && cx[r] > 0.0) t = std::min(t, u[r] / cx[r]);
  return t * xf;
}

}  // namespace vimor
