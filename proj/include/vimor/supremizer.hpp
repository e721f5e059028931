#pragma once

// Supremizer enrichment of the primal basis (PGA) and the reduced inf-sup
// diagnostic over the non-negative multiplier cone.

#include <vector>

#include "vimor/common.hpp"

namespace vimor::red {

struct EnrichedBasis {
  Mat base;         // V_N
  Mat supremizers;  // orthonormal block, orthogonal to base
  Mat combined;     // [base | supremizers]
  std::vector<double> error_history;  // worst relative projection error

  Index n_pga() const { return supremizers.cols(); }
  Index total() const { return combined.cols(); }
};

// Candidate pool {B(sigma)' psi_r} over all training systems and dual
// generators, enriched greedily until the worst relative projection error
// onto the current space drops below delta. Candidates numerically inside
// the span (norm below 1e-12 after orthogonalization) are skipped.
inline EnrichedBasis pga_enrich(const Mat& V, const Mat& W,
                                const std::vector<SpMat>& systems,
                                double delta) {
  const Index dim = V.rows();
  EnrichedBasis out;
  out.base = V;

  std::vector<Vec> candidates;
  candidates.reserve(systems.size() * static_cast<std::size_t>(W.cols()));
  for (const SpMat& B : systems) {
    if (B.cols() != dim || B.rows() != W.rows())
      throw DimensionError("pga_enrich: system shape mismatch");
    for (Index r = 0; r < W.cols(); ++r)
      candidates.push_back(B.transpose() * W.col(r));
  }

  const std::size_t nc = candidates.size();
  Vec norms(static_cast<Index>(nc));
  Mat resid(dim, static_cast<Index>(nc));
  for (std::size_t c = 0; c < nc; ++c) {
    norms[static_cast<Index>(c)] = candidates[c].norm();
    resid.col(static_cast<Index>(c)) = candidates[c];
  }
  // Residual against the current space, updated one column at a time.
  for (Index j = 0; j < V.cols(); ++j)
    resid.noalias() -= V.col(j) * (V.col(j).transpose() * resid);

  Mat sup(dim, 0);
  while (true) {
    Index worst = -1;
    double emax = delta;
    for (Index c = 0; c < static_cast<Index>(nc); ++c) {
      if (norms[c] < 1e-300) continue;
      const double e = resid.col(c).norm() / norms[c];
      if (e > emax) {
        emax = e;
        worst = c;
      }
    }
    if (worst < 0) break;
    out.error_history.push_back(emax);

    // Modified Gram-Schmidt with one re-orthogonalization pass.
    Vec v = candidates[static_cast<std::size_t>(worst)];
    for (int pass = 0; pass < 2; ++pass) {
      for (Index j = 0; j < V.cols(); ++j) v -= V.col(j).dot(v) * V.col(j);
      for (Index j = 0; j < sup.cols(); ++j) v -= sup.col(j).dot(v) * sup.col(j);
    }
    const double vn = v.norm();
    if (vn < 1e-12) {
      norms[worst] = 0.0;  // numerically in span; skip this candidate
      continue;
    }
    v /= vn;
    sup.conservativeResize(dim, sup.cols() + 1);
    sup.col(sup.cols() - 1) = v;
    resid.noalias() -= v * (v.transpose() * resid);
    if (sup.cols() + V.cols() >= dim) break;  // full space reached
  }

  out.supremizers = sup;
  out.combined.resize(dim, V.cols() + sup.cols());
  out.combined << V, sup;
  return out;
}

// Estimate of the reduced inf-sup constant
//   min over beta >= 0, ||W beta|| = 1 of ||V' B' W beta||.
// The cone-constrained minimization is non-convex; the value returned is the
// best found by projected gradient descent from 20 random restarts (plus the
// canonical single-generator rays), with the restart seed fixed.
inline double infsup(const SpMat& B, const Mat& V, const Mat& W,
                     std::uint64_t seed = 0x1f50ULL, int restarts = 20,
                     int iters = 400) {
  if (V.cols() == 0 || W.cols() == 0)
    throw DimensionError("infsup: empty basis or cone");
  const Mat M = V.transpose() * (B.transpose() * W);  // Ntot x R
  const Mat Q = M.transpose() * M;
  const Mat G = W.transpose() * W;
  const Index R = W.cols();

  const double lq = Q.trace();
  const double lg = G.trace();

  auto value = [&](const Vec& beta) -> double {
    const double den = beta.dot(G * beta);
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return beta.dot(Q * beta) / den;
  };

  auto polish = [&](Vec beta) -> double {
    double den = std::sqrt(std::max(beta.dot(G * beta), 1e-300));
    beta /= den;
    double q = value(beta);
    const double step = 1.0 / std::max(lq + q * lg, 1e-300);
    for (int it = 0; it < iters; ++it) {
      const Vec grad = 2.0 * (Q * beta - q * (G * beta));
      beta = (beta - step * grad).cwiseMax(0.0);
      const double nn = std::sqrt(beta.dot(G * beta));
      if (nn <= 0.0) break;
      beta /= nn;
      q = value(beta);
    }
    return q;
  };

  double best = std::numeric_limits<double>::infinity();
  for (Index r = 0; r < R; ++r) {
    Vec beta = Vec::Zero(R);
    beta[r] = 1.0;
    best = std::min(best, polish(beta));
  }
  Rng rng = Rng::derive(seed, 3);
  for (int t = 0; t < restarts; ++t) {
    Vec beta(R);
    for (Index r = 0; r < R; ++r) beta[r] = rng.uniform();
    best = std::min(best, polish(beta));
  }
  return std::sqrt(std::max(best, 0.0));
}

}  // namespace vimor::red
