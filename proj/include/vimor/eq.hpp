#pragma once

// Empirical quadrature: sparse weighted sums approximating the projected
// operators directly in reduced space. Offline, non-negative orthogonal
// matching pursuit on the training Gramian; online, weighted sums over the
// selected entries only.
//
// The Gramians never materialize the dense contribution dictionaries: with
// U(sigma) = B(sigma) V the contact Gramian is the Hadamard product
// (W W') o (sum_sigma U U'), and likewise with the snapshot outer products
// for the velocity and gap quantities.

#include <vector>

#include "vimor/nnls.hpp"

namespace vimor::hyper {

struct EqGramian {
  int k = 1;
  Mat H;             // p x p
  Vec c;             // p
  double pi_norm2 = 0.0;  // accumulated ||Pi(sigma)||^2 over training snapshots
  Index p() const { return H.rows(); }
};

// k = 1: columns of S1 are spontaneous-velocity snapshots; projector V.
inline EqGramian eq_gramian_velocity(const Mat& S1, const Mat& V) {
  if (S1.rows() != V.rows())
    throw DimensionError("eq_gramian_velocity: snapshot/basis mismatch");
  EqGramian g;
  g.k = 1;
  const Mat outer = S1 * S1.transpose();
  g.H = (V * V.transpose()).cwiseProduct(outer);
  g.c = Vec::Zero(S1.rows());
  for (Index j = 0; j < S1.cols(); ++j) {
    const Vec s = S1.col(j);
    const Vec proj = V.transpose() * s;
    g.c += s.cwiseProduct(V * proj);
    g.pi_norm2 += proj.squaredNorm();
  }
  return g;
}

// k = 3: columns of S3 are gap snapshots; projector W.
inline EqGramian eq_gramian_gaps(const Mat& S3, const Mat& W) {
  if (S3.rows() != W.rows())
    throw DimensionError("eq_gramian_gaps: snapshot/cone mismatch");
  EqGramian g;
  g.k = 3;
  const Mat outer = S3 * S3.transpose();
  g.H = (W * W.transpose()).cwiseProduct(outer);
  g.c = Vec::Zero(S3.rows());
  for (Index j = 0; j < S3.cols(); ++j) {
    const Vec s = S3.col(j);
    const Vec proj = W.transpose() * s;
    g.c += s.cwiseProduct(W * proj);
    g.pi_norm2 += proj.squaredNorm();
  }
  return g;
}

// k = 2: candidate index i is a contact row; its contribution to the
// projected operator is W_{i,:}' (b_i V).
inline EqGramian eq_gramian_contact(const std::vector<SpMat>& systems,
                                    const Mat& V, const Mat& W) {
  if (systems.empty()) throw DimensionError("eq_gramian_contact: no snapshots");
  const Index p = W.rows();
  EqGramian g;
  g.k = 2;
  Mat accum = Mat::Zero(p, p);
  g.c = Vec::Zero(p);
  for (const SpMat& B : systems) {
    if (B.rows() != p || B.cols() != V.rows())
      throw DimensionError("eq_gramian_contact: system shape mismatch");
    const Mat U = B * V;                 // p x N
    accum.noalias() += U * U.transpose();
    const Mat T = W.transpose() * U;     // R x N, the exact projection
    const Mat M = W * T;                 // p x N
    g.c += M.cwiseProduct(U).rowwise().sum();
    g.pi_norm2 += T.squaredNorm();
  }
  g.H = (W * W.transpose()).cwiseProduct(accum);
  return g;
}

struct EqModel {
  int k = 1;
  std::vector<Index> indices;
  Vec weights;
  std::vector<double> objective_history;  // training L2 error per iteration
  std::vector<double> gradient_history;   // ||c - H_I w|| per iteration
  bool regularized = false;

  Index m() const { return static_cast<Index>(indices.size()); }
};

// Non-negative orthogonal matching pursuit on (H, c). Weights are
// constrained to be non-negative for the contact quantity (k = 2) and free
// otherwise; the local solve for free weights is the square system on the
// active set, with a 1e-12 ridge if it degenerates.
inline EqModel eq_offline(const EqGramian& gram, Index m_max, double eps_rel) {
  const Index p = gram.p();
  EqModel model;
  model.k = gram.k;
  Vec r = gram.c;
  const double stop = eps_rel * std::max(gram.c.norm(), 1e-300);

  std::vector<bool> in_set(static_cast<std::size_t>(p), false);
  for (Index m = 0; m < std::min(m_max, p); ++m) {
    Index pick = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < p; ++i) {
      if (in_set[static_cast<std::size_t>(i)]) continue;
      const double corr = gram.H.col(i).dot(r);
      const double score = (gram.k == 2) ? corr : std::abs(corr);
      if (score > best) {
        best = score;
        pick = i;
      }
    }
    if (pick < 0) break;
    in_set[static_cast<std::size_t>(pick)] = true;
    model.indices.push_back(pick);
    const Index mm = model.m();

    Mat Hii(mm, mm);
    Vec ci(mm);
    for (Index a = 0; a < mm; ++a) {
      ci[a] = gram.c[model.indices[static_cast<std::size_t>(a)]];
      for (Index b = 0; b < mm; ++b)
        Hii(a, b) = gram.H(model.indices[static_cast<std::size_t>(a)],
                           model.indices[static_cast<std::size_t>(b)]);
    }
    Vec w;
    if (gram.k == 2) {
      w = nnls(Hii, ci).x;
    } else {
      w = Hii.ldlt().solve(ci);
      if (!(w.allFinite()) || (Hii * w - ci).norm() > 1e-8 * std::max(ci.norm(), 1.0)) {
        const Mat ridged = Hii + 1e-12 * Mat::Identity(mm, mm);
        w = ridged.ldlt().solve(ci);
        model.regularized = true;
      }
    }
    model.weights = w;

    r = gram.c;
    for (Index a = 0; a < mm; ++a)
      r -= w[a] * gram.H.col(model.indices[static_cast<std::size_t>(a)]);
    model.gradient_history.push_back(r.norm());
    const double obj2 = gram.pi_norm2 - 2.0 * w.dot(ci) + w.dot(Hii * w);
    model.objective_history.push_back(std::sqrt(std::max(obj2, 0.0)));

    if (r.norm() <= stop) break;
  }
  return model;
}

// Online weighted sums (costs independent of the full dimensions).

inline Vec eq_upsilon(const EqModel& model, const Vec& sampled, const Mat& V) {
  if (sampled.size() != model.m())
    throw DimensionError("eq_upsilon: sampled entry count mismatch");
  Vec out = Vec::Zero(V.cols());
  for (Index a = 0; a < model.m(); ++a)
    out += model.weights[a] * sampled[a] *
           V.row(model.indices[static_cast<std::size_t>(a)]).transpose();
  return out;
}

// sampled_bV holds one row per selected contact row: (b_i V) in R^N.
inline Mat eq_contact(const EqModel& model, const Mat& sampled_bV, const Mat& W) {
  if (sampled_bV.rows() != model.m())
    throw DimensionError("eq_contact: sampled row count mismatch");
  Mat out = Mat::Zero(W.cols(), sampled_bV.cols());
  for (Index a = 0; a < model.m(); ++a)
    out += model.weights[a] *
           W.row(model.indices[static_cast<std::size_t>(a)]).transpose() *
           sampled_bV.row(a);
  return out;
}

inline Vec eq_gaps(const EqModel& model, const Vec& sampled, const Mat& W) {
  if (sampled.size() != model.m())
    throw DimensionError("eq_gaps: sampled entry count mismatch");
  Vec out = Vec::Zero(W.cols());
  for (Index a = 0; a < model.m(); ++a)
    out += model.weights[a] * sampled[a] *
           W.row(model.indices[static_cast<std::size_t>(a)]).transpose();
  return out;
}

}  // namespace vimor::hyper
