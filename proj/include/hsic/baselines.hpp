#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace hsic {

// Comparison feature extractors. Data matrices hold one sample per column.

struct PcaModel {
  Eigen::VectorXd mean;        // m
  Eigen::MatrixXd components;  // m x c, orthonormal, by descending variance
  Eigen::VectorXd variances;   // c, sample variance (divisor n - 1)
};

/// Top-c principal directions via SVD of the centered data. Each component
/// is signed so that its largest-magnitude entry is positive.
PcaModel pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, int components);

/// c x n scores: components^T (x - mean).
Eigen::MatrixXd pca_transform(const PcaModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& x);

/// m x n reconstruction from scores.
Eigen::MatrixXd pca_inverse_transform(const PcaModel& model,
                                      const Eigen::Ref<const Eigen::MatrixXd>& scores);

struct NmfModel {
  Eigen::MatrixXd w;  // m x c
  Eigen::MatrixXd h;  // c x n
  int iterations = 0;
  double objective = 0.0;         // ||X - W H||_F^2
  std::vector<double> objective_trace;  // initial value, then one per iteration
};

inline constexpr double kNmfFloor = 1e-12;

/// Frobenius NMF with Lee-Seung multiplicative updates. Initial factors are
/// seeded uniform draws scaled by sqrt(mean(X) / c). Negative input is
/// rejected with DataError.
NmfModel nmf_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, int components,
                 int iterations = 200, std::uint64_t seed = 0);

/// Codes for new data with W frozen (H updates only).
Eigen::MatrixXd nmf_transform(const NmfModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& x,
                              int iterations = 200, std::uint64_t seed = 0);

}  // namespace hsic
