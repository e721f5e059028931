#pragma once

// Discrete empirical interpolation of the non-affine quantities: POD modes
// plus greedily selected interpolation indices, with the online phase
// reading only the sampled entries.

#include <vector>

#include "vimor/pod.hpp"

namespace vimor::hyper {

struct EimModel {
  int k = 1;                   // which quantity (1: velocity, 2: contact, 3: gaps)
  Mat modes;                   // p_k x m
  std::vector<Index> indices;  // interpolation set, |I| = m
  Mat interp;                  // modes restricted to the indices, m x m

  Index m() const { return modes.cols(); }
  Index full_dim() const { return modes.rows(); }
};

// POD of the snapshots followed by the standard greedy index selection:
// first index at the peak of the first mode, then each next mode's
// interpolation residual peak. Ties break to the lowest index.
inline EimModel eim_offline(const red::SnapshotSet& snapshots, Index m, int k = 1) {
  const red::PodBasis basis = red::pod(snapshots, red::PodTarget::modes(m));
  if (basis.size() < m)
    throw DimensionError("eim_offline: snapshot rank below requested size");
  const Mat& G = basis.modes;
  const Index p = G.rows();

  EimModel model;
  model.k = k;
  model.modes = G;
  model.indices.reserve(static_cast<std::size_t>(m));

  Index j0 = 0;
  double best = -1.0;
  for (Index i = 0; i < p; ++i)
    if (std::abs(G(i, 0)) > best) {
      best = std::abs(G(i, 0));
      j0 = i;
    }
  model.indices.push_back(j0);

  for (Index mode = 1; mode < m; ++mode) {
    const Index cur = mode;  // current interpolation size
    Mat Gi(cur, cur);
    Vec rhs(cur);
    for (Index a = 0; a < cur; ++a) {
      rhs[a] = G(model.indices[static_cast<std::size_t>(a)], mode);
      for (Index b = 0; b < cur; ++b)
        Gi(a, b) = G(model.indices[static_cast<std::size_t>(a)], b);
    }
    Eigen::FullPivLU<Mat> lu(Gi);
    if (lu.rank() < cur)
      throw ConvergenceError("eim_offline: singular interpolation matrix");
    const Vec coef = lu.solve(rhs);
    const Vec resid = G.col(mode) - G.leftCols(cur) * coef;

    Index jn = -1;
    best = -1.0;
    for (Index i = 0; i < p; ++i) {
      bool taken = false;
      for (Index t : model.indices) taken |= (t == i);
      if (!taken && std::abs(resid[i]) > best) {
        best = std::abs(resid[i]);
        jn = i;
      }
    }
    if (jn < 0) throw ConvergenceError("eim_offline: ran out of indices");
    model.indices.push_back(jn);
  }

  model.interp.resize(m, m);
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b)
      model.interp(a, b) = G(model.indices[static_cast<std::size_t>(a)], b);
  Eigen::FullPivLU<Mat> check(model.interp);
  if (check.rank() < m)
    throw ConvergenceError("eim_offline: singular interpolation matrix");
  return model;
}

// Solves the m x m system G_I c = s_I.
inline Vec eim_coefficients(const EimModel& model, const Vec& sampled) {
  if (sampled.size() != model.m())
    throw DimensionError("eim_coefficients: sampled entries must match the index set");
  return model.interp.partialPivLu().solve(sampled);
}

inline Vec eim_reconstruct(const EimModel& model, const Vec& coefficients) {
  return model.modes * coefficients;
}

inline Vec eim_sample(const EimModel& model, const Vec& full) {
  Vec out(model.m());
  for (Index a = 0; a < model.m(); ++a)
    out[a] = full[model.indices[static_cast<std::size_t>(a)]];
  return out;
}

}  // namespace vimor::hyper
