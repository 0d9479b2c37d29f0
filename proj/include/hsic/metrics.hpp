#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace hsic {

// Partition comparison scores. Natural logarithms throughout (nats).

struct ContingencyTable {
  Eigen::MatrixXd counts;        // |G_i ∩ L_j|, unused labels dropped
  Eigen::VectorXd row_sums;      // |G_i|
  Eigen::VectorXd col_sums;      // |L_j|
  std::vector<int> row_labels;   // label of each row, ascending
  std::vector<int> col_labels;
  double total = 0.0;            // n
};

/// Throws ParameterError if the lengths differ or are zero.
ContingencyTable contingency(std::span<const int> truth, std::span<const int> predicted);

double mutual_information(const ContingencyTable& table);

/// -sum p log p over the marginal counts; 0 log 0 := 0.
double entropy(const Eigen::Ref<const Eigen::VectorXd>& marginals, double total);
double entropy(std::span<const int> labels);

/// Expected mutual information of two random partitions with the same
/// marginals (hypergeometric permutation model).
double expected_mutual_information(const ContingencyTable& table);

struct AmiReport {
  double ami = 0.0;
  double mi = 0.0;
  double entropy_truth = 0.0;
  double entropy_predicted = 0.0;
  double emi = 0.0;
  std::size_t n = 0;
  int clusters_truth = 0;
  int clusters_predicted = 0;
};

/// AMI = (MI - EMI) / (max(H(G), H(L)) - EMI). When the denominator is at
/// most 1e-12 the score is 1 for identical set partitions and 0 otherwise.
AmiReport ami_report(std::span<const int> truth, std::span<const int> predicted);

inline double adjusted_mutual_information(std::span<const int> truth,
                                          std::span<const int> predicted) {
  return ami_report(truth, predicted).ami;
}

}  // namespace hsic
