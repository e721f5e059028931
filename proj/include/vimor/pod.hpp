#pragma once

// Snapshot containers and the primal compression routines: exact POD by the
// method of snapshots and the randomized range-finder variant.

#include <cstdint>
#include <vector>

#include "vimor/common.hpp"

namespace vimor::red {

struct SigmaLabel {
  int nu = 0;   // time index
  Vec mu;       // parameter entries (exit width followed by speed entries)
};

enum class SnapshotKind : std::uint8_t {
  Velocity = 0,
  Multiplier = 1,
  OperatorComponent = 2,
  Position = 3,
};

struct SnapshotSet {
  Mat S;  // dim x n_snap
  std::vector<SigmaLabel> labels;
  SnapshotKind kind = SnapshotKind::Velocity;

  Index dim() const { return S.rows(); }
  Index count() const { return S.cols(); }

  void validate() const {
    if (static_cast<Index>(labels.size()) != S.cols())
      throw DimensionError("snapshot set: label count does not match columns");
    if (kind == SnapshotKind::Multiplier && S.size() > 0 && S.minCoeff() < -1e-12)
      throw DimensionError("snapshot set: multiplier snapshots must be non-negative");
  }
};

struct PodBasis {
  Mat modes;        // dim x N, orthonormal columns
  Vec eigenvalues;  // full spectrum of S'S, non-increasing
  bool zero_data = false;

  Index size() const { return modes.cols(); }

  // E_k: normalized eigenvalue tail beyond the first k modes.
  double truncation_error(Index k) const {
    const double total = eigenvalues.sum();
    if (total <= 0.0) return 0.0;
    double tail = 0.0;
    for (Index j = k; j < eigenvalues.size(); ++j) tail += eigenvalues[j];
    return tail / total;
  }
};

// Either a fixed mode count or an energy tolerance on E_k.
struct PodTarget {
  Index n_modes = -1;
  double tolerance = -1.0;

  static PodTarget modes(Index n) { return {n, -1.0}; }
  static PodTarget energy(double tol) { return {-1, tol}; }
};

namespace detail {

// Keeps mode order; two modified Gram-Schmidt passes clean up the loss of
// orthogonality that the method of snapshots incurs on small eigenvalues.
inline void reorthonormalize(Mat& V) {
  for (int pass = 0; pass < 2; ++pass)
    for (Index j = 0; j < V.cols(); ++j) {
      for (Index i = 0; i < j; ++i)
        V.col(j) -= V.col(i).dot(V.col(j)) * V.col(i);
      const double n = V.col(j).norm();
      if (n > 0.0) V.col(j) /= n;
    }
}

}  // namespace detail

// Method of snapshots with the cheaper Gram orientation chosen
// automatically. Eigenvalues are those of S'S in non-increasing order.
inline PodBasis pod(const SnapshotSet& set, PodTarget target) {
  set.validate();
  const Mat& S = set.S;
  PodBasis basis;
  if (S.size() == 0 || S.norm() == 0.0) {
    basis.zero_data = true;
    basis.modes.resize(S.rows(), 0);
    basis.eigenvalues.resize(0);
    return basis;
  }

  const bool state_side = S.rows() <= S.cols();
  Mat gram;
  if (state_side)
    gram = S * S.transpose();
  else
    gram = S.transpose() * S;
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  const Index n = gram.rows();
  Vec evals(n);
  Mat evecs(n, n);
  for (Index k = 0; k < n; ++k) {  // descending order
    evals[k] = std::max(eig.eigenvalues()[n - 1 - k], 0.0);
    evecs.col(k) = eig.eigenvectors().col(n - 1 - k);
  }
  basis.eigenvalues = evals;

  const double cutoff = 1e-14 * evals[0];
  Index rank = 0;
  while (rank < n && evals[rank] > cutoff) ++rank;

  Index keep;
  if (target.n_modes >= 0) {
    keep = std::min(target.n_modes, rank);
  } else {
    keep = rank;
    for (Index k = 0; k <= rank; ++k)
      if (basis.truncation_error(k) <= target.tolerance) {
        keep = k;
        break;
      }
    keep = std::max<Index>(keep, 1);
    keep = std::min(keep, rank);
  }

  if (state_side) {
    basis.modes = evecs.leftCols(keep);
  } else {
    basis.modes.resize(S.rows(), keep);
    for (Index k = 0; k < keep; ++k)
      basis.modes.col(k) = S * evecs.col(k) / std::sqrt(evals[k]);
  }
  detail::reorthonormalize(basis.modes);
  return basis;
}

// Timing baseline matching the reference description of exact POD: the Gram
// matrix is always S'S regardless of shape.
inline PodBasis pod_snapshot_gram(const SnapshotSet& set, Index n_modes) {
  set.validate();
  const Mat& S = set.S;
  PodBasis basis;
  if (S.size() == 0 || S.norm() == 0.0) {
    basis.zero_data = true;
    basis.modes.resize(S.rows(), 0);
    return basis;
  }
  const Mat gram = S.transpose() * S;
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  const Index n = gram.rows();
  Vec evals(n);
  Mat evecs(n, n);
  for (Index k = 0; k < n; ++k) {
    evals[k] = std::max(eig.eigenvalues()[n - 1 - k], 0.0);
    evecs.col(k) = eig.eigenvectors().col(n - 1 - k);
  }
  basis.eigenvalues = evals;
  const double cutoff = 1e-14 * evals[0];
  Index rank = 0;
  while (rank < n && evals[rank] > cutoff) ++rank;
  const Index keep = std::min(n_modes, rank);
  basis.modes.resize(S.rows(), keep);
  for (Index k = 0; k < keep; ++k)
    basis.modes.col(k) = S * evecs.col(k) / std::sqrt(evals[k]);
  detail::reorthonormalize(basis.modes);
  return basis;
}

// Randomized range finder (Gaussian sketch, QR, small SVD), no power
// iterations. Deterministic given the seed.
inline PodBasis rpod(const SnapshotSet& set, Index n_modes, Index oversampling,
                     std::uint64_t seed) {
  set.validate();
  const Mat& S = set.S;
  PodBasis basis;
  if (S.size() == 0 || S.norm() == 0.0) {
    basis.zero_data = true;
    basis.modes.resize(S.rows(), 0);
    return basis;
  }
  const Index sketch = n_modes + oversampling;
  if (sketch > std::min(S.rows(), S.cols()))
    throw DimensionError("rpod: sketch size exceeds matrix dimensions");

  Rng rng = Rng::derive(seed, 2);
  const Mat omega = gaussian_matrix(S.cols(), sketch, rng);
  const Mat Y = S * omega;
  Eigen::HouseholderQR<Mat> qr(Y);
  const Mat Q = qr.householderQ() * Mat::Identity(S.rows(), sketch);
  const Mat B = Q.transpose() * S;
  Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU);
  Vec evals(sketch);
  for (Index k = 0; k < sketch; ++k) {
    const double s = svd.singularValues()[k];
    evals[k] = s * s;
  }
  basis.eigenvalues = evals;
  const double cutoff = 1e-14 * std::max(evals[0], 1e-300);
  Index rank = 0;
  while (rank < sketch && evals[rank] > cutoff) ++rank;
  const Index keep = std::min(n_modes, rank);
  basis.modes = Q * svd.matrixU().leftCols(keep);
  return basis;
}

}  // namespace vimor::red
