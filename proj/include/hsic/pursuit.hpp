#pragma once

#include <Eigen/Core>

#include "hsic/data_io.hpp"
#include "hsic/types.hpp"

namespace hsic {

struct PursuitOptions {
  /// Early stop once ||r||_2 <= relative_tolerance * ||x||_2. A numerical
  /// guard only; the nominal stopping rule is the nonzero count.
  double relative_tolerance = 1e-12;
  /// Throw NumericError if the residual norm ever increases between steps.
  bool check_monotone = false;
};

/// Orthogonal matching pursuit with a fixed nonzero budget.
///
/// Each step picks the unselected atom with the largest |<d_j, r>| (ties go
/// to the lowest index), re-solves least squares of x on the whole support
/// and recomputes the residual. Entries are returned in selection order.
///
/// Throws ParameterError unless 1 <= sparsity <= min(m, k), DataError on a
/// dimension mismatch or non-finite input, and NumericError when the support
/// submatrix is rank deficient.
SparseCode omp(const Dictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& x,
               int sparsity, const PursuitOptions& options = {});

/// omp() applied to every column. Errors carry the failing column index.
SparseCodeMatrix encode_all(const Dictionary& dict,
                            const Eigen::Ref<const Eigen::MatrixXd>& signals,
                            int sparsity, const PursuitOptions& options = {});

inline SparseCodeMatrix encode_all(const Dictionary& dict,
                                   const PixelMatrix& pixels, int sparsity,
                                   const PursuitOptions& options = {}) {
  return encode_all(dict, pixels.values, sparsity, options);
}

/// Simultaneous OMP: one support shared by all columns of `signals`. Atoms
/// are scored by sum_col |<d_j, r_col>| (l1 aggregation) and coefficients are
/// the joint least-squares fit on the support. The result describes a
/// 1 x ncols tile; callers coding a spatial window set the geometry.
TileCode somp(const Dictionary& dict,
              const Eigen::Ref<const Eigen::MatrixXd>& signals, int sparsity,
              const PursuitOptions& options = {});

/// Name of the SOMP score aggregation, recorded in dictionary metadata.
inline constexpr const char* kSompAggregation = "l1";

}  // namespace hsic
