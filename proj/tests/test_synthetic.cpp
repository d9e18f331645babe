#include <gtest/gtest.h>

#include "fpclust/clustering.hpp"
#include "fpclust/evaluation.hpp"
#include "fpclust/fpca.hpp"
#include "fpclust/synthetic.hpp"
#include "oracles.hpp"

using namespace fpclust;

TEST(Synthetic, Shapes) {
  PlantedSpec spec;
  const auto f = planted_features(spec);
  EXPECT_EQ(f.A.rows(), 40);
  EXPECT_EQ(f.A.cols(), 200);
  EXPECT_EQ(std::count(f.labels.begin(), f.labels.end(), 1), 20);
  EXPECT_EQ(balanced_labels(7, 3), (std::vector<int>{1, 1, 1, 2, 2, 3, 3}));
}

TEST(Synthetic, CentroidsAreEquidistant) {
  for (int k : {2, 3, 5}) {
    const Eigen::MatrixXd C = simplex_centroids(k, 8, 20.0);
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) EXPECT_NEAR((C.row(a) - C.row(b)).norm(), 20.0, 1e-12);
  }
  const Eigen::MatrixXd Q = spread_isometry(6, 4);
  EXPECT_LE((Q.transpose() * Q - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Synthetic, DeterministicAndSeedSensitive) {
  PlantedSpec a;
  a.seed = 3;
  PlantedSpec b = a;
  b.seed = 4;
  EXPECT_EQ(planted_features(a).A, planted_features(a).A);
  EXPECT_NE(planted_features(a).A, planted_features(b).A);
  ImageSpec ia;
  ia.seed = 3;
  ImageSpec ib = ia;
  ib.seed = 4;
  EXPECT_EQ(planted_images(ia).coefficients, planted_images(ia).coefficients);
  EXPECT_NE(planted_images(ia).dataset.images[0].pixels, planted_images(ib).dataset.images[0].pixels);
}

TEST(Synthetic, InvalidSpecs) {
  PlantedSpec s;
  s.informative = 300;
  EXPECT_THROW(planted_features(s), Error);
  s = PlantedSpec{};
  s.k = 41;
  EXPECT_THROW(planted_features(s), Error);
  ImageSpec i;
  i.K = 4;
  EXPECT_THROW(planted_images(i), Error);
}

TEST(Synthetic, InformativeLeverageMass) {
  PlantedSpec spec;  // m=40, n=200, k=2, informative=4, separation 20, noise 1, seed 0
  const auto f = planted_features(spec);
  const Eigen::VectorXd P = oracle::leverage(oracle::exact_right_vectors(f.A, 2));
  EXPECT_GT(P.head(4).sum(), 0.95);
}

TEST(Synthetic, ImagesLieInUnitIntervalAndBasisSpan) {
  ImageSpec spec;
  const auto g = planted_images(spec);
  ASSERT_EQ(g.dataset.size(), 12u);
  EXPECT_NO_THROW(g.dataset.validate());
  EXPECT_EQ(g.dataset.images[0].id, "img1");
  const CoefficientMatrix C = fit_coefficients(g.dataset, BasisConfig{spec.K});
  // Affine map: every coefficient scales by `scale`, the constant term also shifts by `offset`.
  Eigen::MatrixXd expected = g.coefficients * g.scale;
  expected.col(0).array() += g.offset;
  EXPECT_LE((C.values - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Synthetic, AffineRescalePreservesGeometry) {
  ImageSpec spec;
  spec.seed = 2;
  const auto g = planted_images(spec);
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      const double pix = (g.dataset.images[a].pixels - g.dataset.images[b].pixels).norm();
      const Eigen::MatrixXd raw_a = synthesize_image(g.coefficients.row(a).transpose(), BasisConfig{5}, 32, 32);
      const Eigen::MatrixXd raw_b = synthesize_image(g.coefficients.row(b).transpose(), BasisConfig{5}, 32, 32);
      EXPECT_NEAR(pix, g.scale * (raw_a - raw_b).norm(), 1e-9);
    }
}

TEST(Synthetic, FirstScoreCarriesGroupStructure) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ImageSpec spec;
    spec.seed = seed;
    const auto g = planted_images(spec);
    const FpcaModel m = fit_fpca(fit_coefficients(g.dataset, BasisConfig{spec.K}), 3);
    const Eigen::VectorXd s = transform(m, fit_coefficients(g.dataset, BasisConfig{spec.K})).col(0);
    double between = 0.0;
    for (int grp = 1; grp <= 2; ++grp) {
      double mean = 0.0;
      int n = 0;
      for (int i = 0; i < s.size(); ++i)
        if (g.labels[i] == grp) mean += s(i), ++n;
      mean /= n;
      between += n * mean * mean;  // overall score mean is zero
    }
    EXPECT_GT(between / s.squaredNorm(), 0.9) << seed;
  }
}

TEST(Synthetic, ExhaustiveOptimumRecoversPlantedGroups) {
  PlantedSpec spec;
  spec.m = 12;
  spec.n = 30;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    spec.seed = seed;
    const auto f = planted_features(spec);
    const auto a = exhaustive_kmeans(f.A, 2);
    EXPECT_EQ(align_and_score(f.labels, a).accuracy, 1.0);
  }
}
