#include "hsic/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hsic/error.hpp"
#include "hsic/random.hpp"

namespace hsic {
namespace {

using Triplet = Eigen::Triplet<double>;

void check_features(const Eigen::Ref<const Eigen::MatrixXd>& features) {
  if (!features.allFinite()) throw DataError("features contain non-finite values");
}

Eigen::MatrixXd kmeanspp_init(const Eigen::Ref<const Eigen::MatrixXd>& x, int c,
                              Rng& rng) {
  const Eigen::Index n = x.cols();
  Eigen::MatrixXd centers(x.rows(), c);
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centers.col(0) = x.col(first);
  chosen[static_cast<std::size_t>(first)] = 1;
  Eigen::VectorXd d2 = (x.colwise() - x.col(first)).colwise().squaredNorm().transpose();

  for (int k = 1; k < c; ++k) {
    const double total = d2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0)  // rounding at the top end
        for (Eigen::Index i = n - 1; i >= 0; --i)
          if (d2(i) > 0.0) {
            pick = i;
            break;
          }
    }
    if (pick < 0)  // every point coincides with a center
      for (Eigen::Index i = 0; i < n; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
    chosen[static_cast<std::size_t>(pick)] = 1;
    centers.col(k) = x.col(pick);
    d2 = d2.cwiseMin((x.colwise() - x.col(pick)).colwise().squaredNorm().transpose());
  }
  return centers;
}

// Nearest centroid per point; returns the inertia.
double assign(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::MatrixXd& centers,
              std::vector<int>& labels, Eigen::VectorXd& dist) {
  const Eigen::Index n = x.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < centers.cols(); ++k) {
      const double d = (x.col(i) - centers.col(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    dist(i) = best_d;
  }
  return dist.sum();
}

KMeansResult lloyd(const Eigen::Ref<const Eigen::MatrixXd>& x, int c, std::uint64_t seed,
                   int max_iter) {
  const Eigen::Index n = x.cols();
  Rng rng(seed);
  KMeansResult r;
  r.centroids = kmeanspp_init(x, c, rng);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> previous;
  Eigen::VectorXd dist(n);

  for (int it = 0; it < max_iter; ++it) {
    previous = labels;
    r.inertia = assign(x, r.centroids, labels, dist);
    r.inertia_trace.push_back(r.inertia);
    r.iterations = it + 1;
    if (labels == previous) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(x.rows(), c);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(c), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.col(labels[static_cast<std::size_t>(i)]) += x.col(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    std::vector<char> donor(static_cast<std::size_t>(n), 0);
    for (int k = 0; k < c; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) {
        r.centroids.col(k) = sums.col(k) / static_cast<double>(counts[static_cast<std::size_t>(k)]);
        continue;
      }
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!donor[static_cast<std::size_t>(i)] && (far < 0 || dist(i) > dist(far))) far = i;
      donor[static_cast<std::size_t>(far)] = 1;
      r.centroids.col(k) = x.col(far);
    }
  }
  r.partition.labels = std::move(labels);
  r.partition.clusters = c;
  return r;
}

}  // namespace

KMeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& features,
                    int clusters, std::uint64_t seed, const KMeansOptions& options) {
  check_features(features);
  if (clusters < 1) throw ParameterError("cluster count must be >= 1");
  if (clusters > features.cols())
    throw ParameterError("cannot form " + std::to_string(clusters) +
                         " clusters from " + std::to_string(features.cols()) +
                         " points");
  if (options.max_iter < 1 || options.restarts < 1)
    throw ParameterError("kmeans needs max_iter >= 1 and restarts >= 1");

  KMeansResult best;
  for (int r = 0; r < options.restarts; ++r) {
    const std::uint64_t s = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r);
    KMeansResult run = lloyd(features, clusters, s, options.max_iter);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

AffinityGraph knn_affinity(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           int k_nn, const AffinityOptions& options) {
  check_features(features);
  const Eigen::Index n = features.cols();
  if (k_nn < 1 || k_nn >= n)
    throw ParameterError("k_nn " + std::to_string(k_nn) + " outside [1, " +
                         std::to_string(n - 1) + "]");
  if (options.weight == AffinityWeight::gaussian && !(options.sigma > 0.0))
    throw ParameterError("gaussian affinity needs sigma > 0");

  const auto k = static_cast<std::size_t>(k_nn);
  std::vector<std::vector<std::pair<double, Eigen::Index>>> neighbours(
      static_cast<std::size_t>(n));

#pragma omp parallel for schedule(dynamic, 32)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd d2 =
        (features.colwise() - features.col(i)).colwise().squaredNorm().transpose();
    std::vector<std::pair<double, Eigen::Index>> cand;
    cand.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) cand.emplace_back(d2(j), j);
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                      cand.end());
    cand.resize(k);
    neighbours[static_cast<std::size_t>(i)] = std::move(cand);
  }

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * k * 2);
  const double denom = 2.0 * options.sigma * options.sigma;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& [d2, j] : neighbours[static_cast<std::size_t>(i)]) {
      const double w =
          options.weight == AffinityWeight::binary ? 1.0 : std::exp(-d2 / denom);
      triplets.emplace_back(i, j, w);
      triplets.emplace_back(j, i, w);
    }
  }
  AffinityGraph g;
  g.weights.resize(n, n);
  g.weights.setFromTriplets(triplets.begin(), triplets.end(),
                            [](double a, double b) { return std::max(a, b); });
  return g;
}

LaplacianMatrix laplacian(const AffinityGraph& graph) {
  const Eigen::Index n = graph.weights.rows();
  LaplacianMatrix out;
  out.degrees = Eigen::VectorXd::Zero(n);
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(graph.weights.nonZeros() + n));
  for (Eigen::Index k = 0; k < graph.weights.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.weights, k); it; ++it) {
      if (it.row() == it.col()) continue;
      out.degrees(it.row()) += it.value();
      triplets.emplace_back(it.row(), it.col(), -it.value());
    }
  for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, out.degrees(i));
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

SpectralEmbedding spectral_embed(const LaplacianMatrix& lap, int clusters,
                                 const EigenOptions& options) {
  const Eigen::Index n = lap.matrix.rows();
  if (clusters < 2) throw ParameterError("spectral embedding needs >= 2 clusters");
  if (n <= clusters)
    throw ParameterError("spectral embedding needs more than " +
                         std::to_string(clusters) + " vertices, got " +
                         std::to_string(n));
  EigenPairs pairs = smallest_eigenpairs(lap.matrix, clusters, options);
  SpectralEmbedding e;
  e.eigenvalues = std::move(pairs.values);
  e.basis = std::move(pairs.vectors);
  e.vectors = e.basis.rightCols(clusters - 1);
  return e;
}

Partition spectral_cluster(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           int clusters, std::uint64_t seed,
                           const SpectralOptions& options) {
  if (clusters < 2) throw ParameterError("spectral clustering needs >= 2 clusters");
  if (features.cols() < clusters)
    throw ParameterError("cannot form " + std::to_string(clusters) +
                         " clusters from " + std::to_string(features.cols()) +
                         " points");
  const AffinityGraph g = knn_affinity(features, options.k_nn, options.affinity);
  const SpectralEmbedding e = spectral_embed(laplacian(g), clusters, options.eigen);
  return kmeans(e.vectors.transpose(), clusters, seed, options.kmeans).partition;
}

ReducedCodes reduce_tile_codes(std::span<const TileCode> codes,
                               TileReduction strategy) {
  ReducedCodes out;
  if (codes.empty()) return out;
  const int k = codes.front().atom_count;
  std::vector<std::size_t> order(codes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return codes[a].center < codes[b].center;
  });

  out.features.resize(k, static_cast<Eigen::Index>(codes.size()));
  out.coords.reserve(codes.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    const TileCode& code = codes[order[j]];
    const Eigen::Index columns = static_cast<Eigen::Index>(code.tile_rows) * code.tile_cols;
    if (code.atom_count != k) throw DataError("tile codes disagree on the atom count");
    if (code.tile_rows % 2 == 0 || code.tile_cols % 2 == 0 ||
        code.coefficients.cols() != columns ||
        code.coefficients.rows() != static_cast<Eigen::Index>(code.support.size()))
      throw DataError("tile code at (" + std::to_string(code.center.row) + ", " +
                      std::to_string(code.center.col) +
                      ") is missing its center column");
    const auto col = static_cast<Eigen::Index>(j);
    out.features.col(col).setZero();
    for (std::size_t i = 0; i < code.support.size(); ++i) {
      const auto row = code.coefficients.row(static_cast<Eigen::Index>(i));
      out.features(code.support[i], col) =
          strategy == TileReduction::mean ? row.mean() : row(code.center_column());
    }
    out.coords.push_back(code.center);
  }
  return out;
}

}  // namespace hsic
