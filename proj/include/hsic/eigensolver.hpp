#pragma once

#include <cstdint>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace hsic {

struct EigenOptions {
  /// Convergence: ||L v - lambda v||_2 <= tolerance * max|L_ij| per pair.
  double tolerance = 1e-6;
  /// Restart cycles allowed before giving up.
  int max_iterations = 5000;
  /// Matrices up to this order are decomposed densely.
  Eigen::Index dense_threshold = 2000;
  std::uint64_t seed = 0;
};

struct EigenPairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // N x count, orthonormal columns
};

/// The `count` smallest eigenpairs of a symmetric positive semidefinite
/// sparse matrix. Each vector is signed so its largest-magnitude entry is
/// positive. Large matrices use a restarted block Krylov method on the
/// shifted operator sigma*I - L (sigma a Gershgorin bound); throws
/// NumericError if that fails to converge.
EigenPairs smallest_eigenpairs(const Eigen::SparseMatrix<double>& matrix,
                               int count, const EigenOptions& options = {});

/// Dense reference path, exposed for testing.
EigenPairs smallest_eigenpairs_dense(const Eigen::SparseMatrix<double>& matrix,
                                     int count);

/// Iterative path regardless of size, exposed for testing.
EigenPairs smallest_eigenpairs_iterative(const Eigen::SparseMatrix<double>& matrix,
                                         int count, const EigenOptions& options = {});

}  // namespace hsic
