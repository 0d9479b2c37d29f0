#include "hsic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "hsic/error.hpp"

namespace hsic {
namespace {

constexpr double kDegenerate = 1e-12;

std::map<int, int> dense_ids(std::span<const int> labels) {
  std::map<int, int> ids;
  for (int v : labels) ids.emplace(v, 0);
  int next = 0;
  for (auto& [label, id] : ids) id = next++;
  return ids;
}

// True when the two labelings induce the same set partition.
bool same_partition(std::span<const int> a, std::span<const int> b) {
  std::map<int, int> forward;
  std::map<int, int> backward;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [f, fnew] = forward.emplace(a[i], b[i]);
    auto [r, rnew] = backward.emplace(b[i], a[i]);
    if (f->second != b[i] || r->second != a[i]) return false;
  }
  return true;
}

}  // namespace

ContingencyTable contingency(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size())
    throw ParameterError("partitions differ in length: " + std::to_string(truth.size()) +
                         " vs " + std::to_string(predicted.size()));
  if (truth.empty()) throw ParameterError("partitions are empty");

  const auto rows = dense_ids(truth);
  const auto cols = dense_ids(predicted);
  ContingencyTable t;
  t.counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                   static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < truth.size(); ++i)
    t.counts(rows.at(truth[i]), cols.at(predicted[i])) += 1.0;
  for (const auto& [label, id] : rows) t.row_labels.push_back(label);
  for (const auto& [label, id] : cols) t.col_labels.push_back(label);
  t.row_sums = t.counts.rowwise().sum();
  t.col_sums = t.counts.colwise().sum().transpose();
  t.total = static_cast<double>(truth.size());
  return t;
}

double mutual_information(const ContingencyTable& t) {
  double mi = 0.0;
  for (Eigen::Index j = 0; j < t.counts.cols(); ++j)
    for (Eigen::Index i = 0; i < t.counts.rows(); ++i) {
      const double nij = t.counts(i, j);
      if (nij <= 0.0) continue;
      mi += nij / t.total * std::log(t.total * nij / (t.row_sums(i) * t.col_sums(j)));
    }
  return std::max(mi, 0.0);
}

double entropy(const Eigen::Ref<const Eigen::VectorXd>& marginals, double total) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < marginals.size(); ++i) {
    if (marginals(i) <= 0.0) continue;
    const double p = marginals(i) / total;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double entropy(std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  std::map<int, double> counts;
  for (int v : labels) counts[v] += 1.0;
  Eigen::VectorXd m(static_cast<Eigen::Index>(counts.size()));
  Eigen::Index i = 0;
  for (const auto& [label, c] : counts) m(i++) = c;
  return entropy(m, static_cast<double>(labels.size()));
}

double expected_mutual_information(const ContingencyTable& t) {
  const auto n = static_cast<long>(t.total);
  std::vector<double> lfact(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) lfact[static_cast<std::size_t>(i)] = std::lgamma(static_cast<double>(i) + 1.0);
  auto lf = [&](long v) { return lfact[static_cast<std::size_t>(v)]; };
  const double dn = static_cast<double>(n);

  double emi = 0.0;
  for (Eigen::Index i = 0; i < t.row_sums.size(); ++i) {
    const auto a = static_cast<long>(t.row_sums(i));
    for (Eigen::Index j = 0; j < t.col_sums.size(); ++j) {
      const auto b = static_cast<long>(t.col_sums(j));
      const double log_outer = lf(a) + lf(b) + lf(n - a) + lf(n - b) - lf(n);
      const long lo = std::max(1L, a + b - n);
      const long hi = std::min(a, b);
      for (long nij = lo; nij <= hi; ++nij) {
        const double log_p = log_outer - lf(nij) - lf(a - nij) - lf(b - nij) -
                             lf(n - a - b + nij);
        const double dij = static_cast<double>(nij);
        emi += dij / dn *
               std::log(dn * dij / (static_cast<double>(a) * static_cast<double>(b))) *
               std::exp(log_p);
      }
    }
  }
  return emi;
}

AmiReport ami_report(std::span<const int> truth, std::span<const int> predicted) {
  const ContingencyTable t = contingency(truth, predicted);
  AmiReport r;
  r.n = truth.size();
  r.clusters_truth = static_cast<int>(t.row_sums.size());
  r.clusters_predicted = static_cast<int>(t.col_sums.size());
  r.mi = mutual_information(t);
  r.entropy_truth = entropy(t.row_sums, t.total);
  r.entropy_predicted = entropy(t.col_sums, t.total);
  r.emi = expected_mutual_information(t);

  const double denom = std::max(r.entropy_truth, r.entropy_predicted) - r.emi;
  if (denom <= kDegenerate) {
    r.ami = same_partition(truth, predicted) ? 1.0 : 0.0;
  } else {
    r.ami = (r.mi - r.emi) / denom;
  }
  return r;
}

}  // namespace hsic
