#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hsic/eigensolver.hpp"
#include "hsic/types.hpp"

namespace hsic {

// All feature matrices hold one sample per column (f x n).

struct Partition {
  std::vector<int> labels;  // values in [0, clusters)
  int clusters = 0;
};

struct KMeansOptions {
  int max_iter = 300;
  int restarts = 1;  // best inertia wins; restart r uses a derived seed
};

struct KMeansResult {
  Partition partition;
  Eigen::MatrixXd centroids;  // f x c
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // after every assignment step
  int iterations = 0;
};

/// k-means++ seeding then Lloyd iterations (Euclidean). Stops when no label
/// changes or after max_iter. An emptied cluster is re-seeded with the point
/// farthest from its centroid. Ties go to the lowest centroid index.
KMeansResult kmeans(const Eigen::Ref<const Eigen::MatrixXd>& features,
                    int clusters, std::uint64_t seed,
                    const KMeansOptions& options = {});

enum class AffinityWeight { binary, gaussian };

struct AffinityOptions {
  AffinityWeight weight = AffinityWeight::binary;
  double sigma = 1.0;  // gaussian: exp(-d^2 / (2 sigma^2))
};

struct AffinityGraph {
  Eigen::SparseMatrix<double> weights;  // symmetric, zero diagonal
  int vertices() const { return static_cast<int>(weights.rows()); }
};

/// k nearest neighbours of each point (self excluded, ties to the lower
/// index), symmetrized with W = max(W, W^T).
AffinityGraph knn_affinity(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           int k_nn, const AffinityOptions& options = {});

struct LaplacianMatrix {
  Eigen::SparseMatrix<double> matrix;  // D - W
  Eigen::VectorXd degrees;
};

/// Unnormalized graph Laplacian: L_ii = d_i = sum_j W_ij, L_ij = -W_ij.
LaplacianMatrix laplacian(const AffinityGraph& graph);

struct SpectralEmbedding {
  Eigen::VectorXd eigenvalues;  // the c smallest, ascending
  Eigen::MatrixXd basis;        // N x c matching eigenvectors
  Eigen::MatrixXd vectors;      // N x (c - 1): basis without its first column
};

/// Embeds the graph with eigenvectors 2..c of the Laplacian. The first
/// (constant on a connected graph) is dropped as ordered by the solver; on a
/// disconnected graph that is an arbitrary null-space direction.
SpectralEmbedding spectral_embed(const LaplacianMatrix& laplacian, int clusters,
                                 const EigenOptions& options = {});

struct SpectralOptions {
  int k_nn = 10;
  AffinityOptions affinity;
  EigenOptions eigen;
  KMeansOptions kmeans;
};

/// knn_affinity -> laplacian -> spectral_embed -> kmeans on embedding rows.
Partition spectral_cluster(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           int clusters, std::uint64_t seed,
                           const SpectralOptions& options = {});

enum class TileReduction { mean, center };

struct ReducedCodes {
  Eigen::MatrixXd features;  // k x N
  std::vector<PixelCoord> coords;
};

/// One dense feature column per tile: the mean over the tile's coefficient
/// columns or the column of its center pixel. Output is sorted by center.
ReducedCodes reduce_tile_codes(std::span<const TileCode> codes,
                               TileReduction strategy);

}  // namespace hsic
