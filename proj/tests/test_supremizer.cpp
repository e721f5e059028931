#include <catch_amalgamated.hpp>

#include <vector>

#include "vimor/supremizer.hpp"

using namespace vimor;

namespace {

SpMat sparse_from(const Mat& dense) {
  SpMat out(dense.rows(), dense.cols());
  std::vector<Eigen::Triplet<double>> trips;
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0.0) trips.emplace_back(static_cast<int>(i), static_cast<int>(j), dense(i, j));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Mat orthonormal_cols(Index dim, Index n, Rng& rng) {
  const Mat A = gaussian_matrix(dim, n, rng);
  Eigen::HouseholderQR<Mat> qr(A);
  return qr.householderQ() * Mat::Identity(dim, n);
}

}  // namespace

TEST_CASE("pga enrichment", "[supremizer]") {
  Rng rng(31);
  SECTION("candidates already in span add nothing") {
    const Mat V = orthonormal_cols(8, 8, rng);  // full space
    const Mat W = gaussian_matrix(5, 2, rng).cwiseAbs();
    const std::vector<SpMat> sys = {sparse_from(gaussian_matrix(5, 8, rng))};
    const auto enriched = red::pga_enrich(V, W, sys, 1e-8);
    REQUIRE(enriched.n_pga() == 0);
  }
  SECTION("empty base adopts the normalized candidate") {
    const Mat V(6, 0);
    Mat W = Mat::Zero(4, 1);
    W(2, 0) = 1.0;
    const Mat Bd = gaussian_matrix(4, 6, rng);
    const auto enriched = red::pga_enrich(V, W, {sparse_from(Bd)}, 1e-8);
    REQUIRE(enriched.n_pga() == 1);
    const Vec cand = Bd.transpose() * W.col(0);
    const double align = std::abs(enriched.supremizers.col(0).dot(cand / cand.norm()));
    REQUIRE(align == Catch::Approx(1.0).epsilon(1e-12));
  }
  SECTION("after enrichment every candidate projects within delta") {
    const double delta = 1e-8;
    const Mat V = orthonormal_cols(12, 3, rng);
    Mat W = gaussian_matrix(9, 4, rng).cwiseAbs();
    std::vector<SpMat> sys;
    for (int k = 0; k < 5; ++k) sys.push_back(sparse_from(gaussian_matrix(9, 12, rng)));
    const auto enriched = red::pga_enrich(V, W, sys, delta);
    const Mat& Q = enriched.combined;
    REQUIRE((Q.transpose() * Q - Mat::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff() <= 1e-10);
    for (const SpMat& B : sys)
      for (Index r = 0; r < W.cols(); ++r) {
        const Vec v = B.transpose() * W.col(r);
        const double err = (v - Q * (Q.transpose() * v)).norm() / v.norm();
        REQUIRE(err <= delta);
      }
    // Supremizer block orthogonal to the base.
    if (enriched.n_pga() > 0)
      REQUIRE((enriched.base.transpose() * enriched.supremizers).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("infsup estimator", "[supremizer]") {
  Rng rng(32);
  SECTION("orthogonal image gives zero") {
    // B' W lands on coordinates 2..3, V spans coordinates 0..1.
    Mat V = Mat::Zero(4, 2);
    V(0, 0) = 1.0;
    V(1, 1) = 1.0;
    Mat Bd = Mat::Zero(3, 4);
    Bd(0, 2) = 1.0;
    Bd(1, 3) = 1.0;
    const Mat W = Mat::Ones(3, 1);
    REQUIRE(red::infsup(sparse_from(Bd), V, W) <= 1e-12);
  }
  SECTION("single generator closed form") {
    const Mat Bd = gaussian_matrix(5, 7, rng);
    Mat W = Mat::Zero(5, 1);
    W(1, 0) = 2.0;
    W(3, 0) = 1.0;
    const Vec img = Bd.transpose() * W.col(0);
    // V contains the image direction, so the sup is attained on it.
    Mat V = img / img.norm();
    const double expected = img.norm() / W.col(0).norm();
    REQUIRE(red::infsup(sparse_from(Bd), V, W) ==
            Catch::Approx(expected).epsilon(1e-8));
  }
  SECTION("enlarging V does not reduce the estimate") {
    const Mat Bd = gaussian_matrix(6, 8, rng);
    const Mat W = gaussian_matrix(6, 3, rng).cwiseAbs();
    const Mat V2 = orthonormal_cols(8, 2, rng);
    Mat V4(8, 4);
    V4.leftCols(2) = V2;
    // Extend with two more orthonormal directions.
    Mat extra = gaussian_matrix(8, 2, rng);
    for (int pass = 0; pass < 2; ++pass)
      for (Index j = 0; j < 2; ++j) {
        for (Index i = 0; i < 2; ++i) extra.col(j) -= V2.col(i).dot(extra.col(j)) * V2.col(i);
        for (Index i = 0; i < j; ++i) extra.col(j) -= extra.col(i).dot(extra.col(j)) * extra.col(i);
        extra.col(j) /= extra.col(j).norm();
      }
    V4.rightCols(2) = extra;
    const double g2 = red::infsup(sparse_from(Bd), V2, W);
    const double g4 = red::infsup(sparse_from(Bd), V4, W);
    REQUIRE(g4 >= g2 - 1e-9);
  }
  SECTION("empty inputs raise") {
    const Mat Bd = gaussian_matrix(3, 4, rng);
    REQUIRE_THROWS_AS(red::infsup(sparse_from(Bd), Mat(4, 0), Mat::Ones(3, 1)),
                      DimensionError);
  }
}
