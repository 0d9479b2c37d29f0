#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hsic/clustering.hpp"
#include "hsic/error.hpp"
#include "hsic/metrics.hpp"
#include "oracles.hpp"

using namespace hsic;

namespace {

Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& m) { return Eigen::MatrixXd(m); }

Eigen::MatrixXd blobs(int per_blob, double separation, std::uint64_t seed,
                      std::vector<int>* labels = nullptr) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(2, 2 * per_blob);
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < per_blob; ++i) {
      x(0, b * per_blob + i) = b * separation + normal(gen);
      x(1, b * per_blob + i) = normal(gen);
      if (labels) labels->push_back(b);
    }
  return x;
}

AffinityGraph graph_from(const Eigen::MatrixXd& w) {
  AffinityGraph g;
  g.weights = w.sparseView();
  return g;
}

}  // namespace

TEST(KMeans, SeparatesOneDimensionalPairs) {
  Eigen::MatrixXd x(1, 4);
  x << 0, 0.1, 10, 10.1;
  const KMeansResult r = kmeans(x, 2, 0);
  const auto& l = r.partition.labels;
  EXPECT_EQ(l[0], l[1]);
  EXPECT_EQ(l[2], l[3]);
  EXPECT_NE(l[0], l[2]);
}

TEST(KMeans, SingleClusterCentroidIsMean) {
  const Eigen::MatrixXd x = blobs(20, 0.0, 1);
  const KMeansResult r = kmeans(x, 1, 3);
  EXPECT_LE((r.centroids.col(0) - x.rowwise().mean()).norm(), 1e-12);
}

TEST(KMeans, OneClusterPerPointHasZeroInertia) {
  const Eigen::MatrixXd x = blobs(5, 3.0, 2);
  const KMeansResult r = kmeans(x, 10, 4);
  EXPECT_EQ(r.inertia, 0.0);
  EXPECT_EQ(std::set<int>(r.partition.labels.begin(), r.partition.labels.end()).size(), 10u);
}

TEST(KMeans, TooManyClustersOrNonFinite) {
  Eigen::MatrixXd x = blobs(2, 1.0, 3);
  EXPECT_THROW(kmeans(x, 5, 0), ParameterError);
  x(0, 0) = NAN;
  EXPECT_THROW(kmeans(x, 2, 0), DataError);
}

TEST(KMeansProperty, InertiaNonIncreasingAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd x = blobs(50, 2.0, 100 + seed);
    const KMeansResult r = kmeans(x, 4, seed);
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i)
      EXPECT_LE(r.inertia_trace[i], r.inertia_trace[i - 1] + 1e-9);
    for (int l : r.partition.labels) EXPECT_LT(l, 4);
    EXPECT_EQ(kmeans(x, 4, seed).partition.labels, r.partition.labels);
  }
}

TEST(KMeans, RestartsNeverWorsenInertia) {
  const Eigen::MatrixXd x = blobs(40, 1.5, 7);
  const double one = kmeans(x, 5, 11).inertia;
  EXPECT_LE(kmeans(x, 5, 11, {300, 5}).inertia, one);
}

TEST(Affinity, CollinearNearestNeighbours) {
  Eigen::MatrixXd x(1, 3);
  x << 0, 1, 3;
  const Eigen::MatrixXd w = dense(knn_affinity(x, 1).weights);
  Eigen::MatrixXd expected(3, 3);
  expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  EXPECT_EQ(w, expected);
}

TEST(Affinity, SymmetricZeroDiagonal) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd x = blobs(30, 2.0, seed);
    for (AffinityWeight mode : {AffinityWeight::binary, AffinityWeight::gaussian}) {
      const Eigen::MatrixXd w = dense(knn_affinity(x, 4, {mode, 0.7}).weights);
      EXPECT_EQ(w, w.transpose());
      EXPECT_EQ(w.diagonal().cwiseAbs().maxCoeff(), 0.0);
      EXPECT_GE(w.minCoeff(), 0.0);
    }
  }
}

TEST(Affinity, GaussianDuplicatePointHasUnitWeight) {
  Eigen::MatrixXd x(2, 3);
  x << 0, 0, 5, 1, 1, 5;
  const Eigen::MatrixXd w = dense(knn_affinity(x, 1, {AffinityWeight::gaussian, 2.0}).weights);
  EXPECT_EQ(w(0, 1), 1.0);
  EXPECT_NEAR(w(2, 0), std::exp(-(25.0 + 16.0) / 8.0), 1e-15);
}

TEST(Affinity, NeighbourCountOutOfRange) {
  const Eigen::MatrixXd x = blobs(3, 1.0, 1);
  EXPECT_THROW(knn_affinity(x, 0), ParameterError);
  EXPECT_THROW(knn_affinity(x, 6), ParameterError);
  EXPECT_THROW(knn_affinity(x, 2, {AffinityWeight::gaussian, 0.0}), ParameterError);
}

TEST(Laplacian, HandComputedCases) {
  Eigen::MatrixXd w2(2, 2);
  w2 << 0, 1, 1, 0;
  Eigen::MatrixXd l2(2, 2);
  l2 << 1, -1, -1, 1;
  EXPECT_EQ(dense(laplacian(graph_from(w2)).matrix), l2);

  Eigen::MatrixXd path(3, 3);
  path << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  Eigen::MatrixXd lp(3, 3);
  lp << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  const LaplacianMatrix lap = laplacian(graph_from(path));
  EXPECT_EQ(dense(lap.matrix), lp);
  EXPECT_EQ(lap.degrees, Eigen::Vector3d(1, 2, 1));

  EXPECT_EQ(dense(laplacian(graph_from(Eigen::MatrixXd::Zero(4, 4))).matrix),
            Eigen::MatrixXd::Zero(4, 4));
}

TEST(LaplacianProperty, RowSumsVanishAndPsd) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = blobs(40 + 20 * trial, 1.0, 200 + trial);
    const LaplacianMatrix lap =
        laplacian(knn_affinity(x, 3 + trial % 5, {AffinityWeight::gaussian, 1.3}));
    const Eigen::MatrixXd l = dense(lap.matrix);
    EXPECT_LE(l.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(l.colwise().sum().cwiseAbs().maxCoeff(), 1e-9);
    if (l.rows() <= 120)
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l).eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(SpectralEmbed, TwoTrianglesSplitBySign) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(6, 6);
  for (int base : {0, 3})
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) w(base + i, base + j) = 1;
  const SpectralEmbedding e = spectral_embed(laplacian(graph_from(w)), 2);
  ASSERT_EQ(e.vectors.cols(), 1);
  const Eigen::VectorXd v = e.vectors.col(0);
  for (int i = 1; i < 3; ++i) {
    EXPECT_NEAR(v(i), v(0), 1e-9);
    EXPECT_NEAR(v(3 + i), v(3), 1e-9);
  }
  EXPECT_GT(std::abs(v(0) - v(3)), 0.1);
}

TEST(SpectralEmbed, PreconditionsAreParameterErrors) {
  const LaplacianMatrix lap = laplacian(graph_from(Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_THROW(spectral_embed(lap, 1), ParameterError);
  EXPECT_THROW(spectral_embed(lap, 3), ParameterError);
}

TEST(SpectralCluster, RingsRecoveredWhereKMeansFails) {
  const oracle::PointSet rings = oracle::two_rings(100, 31);
  const Partition s = spectral_cluster(rings.points, 2, 1);
  EXPECT_NEAR(adjusted_mutual_information(rings.labels, s.labels), 1.0, 1e-12);
  const Partition k = kmeans(rings.points, 2, 1).partition;
  EXPECT_LT(adjusted_mutual_information(rings.labels, k.labels), 0.5);
}

TEST(SpectralCluster, FarBlobsAgreeWithKMeans) {
  std::vector<int> truth;
  const Eigen::MatrixXd x = blobs(40, 30.0, 8, &truth);
  const Partition s = spectral_cluster(x, 2, 2);
  const Partition k = kmeans(x, 2, 2).partition;
  EXPECT_NEAR(adjusted_mutual_information(s.labels, k.labels), 1.0, 1e-12);
  EXPECT_NEAR(adjusted_mutual_information(truth, s.labels), 1.0, 1e-12);
}

TEST(SpectralCluster, BinaryModeIsScaleInvariant) {
  const oracle::PointSet rings = oracle::two_rings(60, 9);
  const Partition a = spectral_cluster(rings.points, 2, 3);
  const Partition b = spectral_cluster(3.7 * rings.points, 2, 3);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(SpectralCluster, FewerPointsThanClusters) {
  EXPECT_THROW(spectral_cluster(Eigen::MatrixXd::Random(2, 3), 4, 0), ParameterError);
}

TEST(TileReduction, EqualColumnsAndSingletonsAgree) {
  TileCode c;
  c.atom_count = 5;
  c.tile_rows = c.tile_cols = 3;
  c.center = {1, 1};
  c.support = {1, 4};
  c.coefficients = Eigen::MatrixXd(2, 9);
  c.coefficients.row(0).setConstant(0.5);
  c.coefficients.row(1).setConstant(-2.0);
  const std::vector<TileCode> codes{c};
  EXPECT_EQ(reduce_tile_codes(codes, TileReduction::mean).features,
            reduce_tile_codes(codes, TileReduction::center).features);

  TileCode one = c;
  one.tile_rows = one.tile_cols = 1;
  one.coefficients = Eigen::MatrixXd(2, 1);
  one.coefficients << 0.25, 3.0;
  const std::vector<TileCode> singles{one};
  const Eigen::MatrixXd f = reduce_tile_codes(singles, TileReduction::mean).features;
  EXPECT_EQ(f, reduce_tile_codes(singles, TileReduction::center).features);
  EXPECT_EQ(f(1, 0), 0.25);
  EXPECT_EQ(f(4, 0), 3.0);
}

TEST(TileReduction, MeanMatchesDensifyAndAverageAndSortsByCenter) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  std::vector<TileCode> codes;
  for (int t = 0; t < 6; ++t) {
    TileCode c;
    c.atom_count = 7;
    c.tile_rows = 3;
    c.tile_cols = 5;
    c.center = {5 - t, t % 2};
    c.support = {t % 7, (t + 3) % 7};
    c.coefficients = Eigen::MatrixXd(2, 15);
    for (Eigen::Index i = 0; i < c.coefficients.size(); ++i) c.coefficients.data()[i] = normal(gen);
    codes.push_back(c);
  }
  const ReducedCodes mean = reduce_tile_codes(codes, TileReduction::mean);
  const ReducedCodes center = reduce_tile_codes(codes, TileReduction::center);
  for (std::size_t j = 1; j < mean.coords.size(); ++j) EXPECT_LT(mean.coords[j - 1], mean.coords[j]);
  for (const TileCode& c : codes) {
    const auto it = std::find(mean.coords.begin(), mean.coords.end(), c.center);
    const auto col = static_cast<Eigen::Index>(it - mean.coords.begin());
    const Eigen::MatrixXd d = c.dense();
    EXPECT_LE((mean.features.col(col) - d.rowwise().mean()).norm(), 1e-14);
    EXPECT_LE((center.features.col(col) - d.col(c.center_column())).norm(), 0.0);
  }
}

TEST(TileReduction, MissingCenterColumnIsError) {
  TileCode c;
  c.atom_count = 3;
  c.tile_rows = c.tile_cols = 3;
  c.support = {0};
  c.coefficients = Eigen::MatrixXd::Ones(1, 4);
  const std::vector<TileCode> codes{c};
  EXPECT_THROW(reduce_tile_codes(codes, TileReduction::center), DataError);
}
