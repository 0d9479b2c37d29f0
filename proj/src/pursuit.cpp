#include "hsic/pursuit.hpp"

#include <cmath>
#include <exception>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "hsic/error.hpp"

namespace hsic {
namespace {

// Relative pivot size below which the support is considered rank deficient.
constexpr double kRankTolerance = 1e-10;

struct JointFit {
  std::vector<int> support;
  Eigen::MatrixXd coefficients;  // |support| x ncols
  double residual_norm = 0.0;
};

void check_inputs(const Dictionary& dict,
                  const Eigen::Ref<const Eigen::MatrixXd>& signals,
                  int sparsity) {
  const int limit = std::min(dict.signal_dim(), dict.atom_count());
  if (sparsity < 1 || sparsity > limit)
    throw ParameterError("sparsity " + std::to_string(sparsity) +
                         " outside [1, " + std::to_string(limit) + "]");
  if (signals.rows() != dict.signal_dim())
    throw DataError("signal has " + std::to_string(signals.rows()) +
                    " bands but the dictionary expects " +
                    std::to_string(dict.signal_dim()));
  if (!signals.allFinite()) throw DataError("signal contains non-finite values");
}

JointFit greedy_fit(const Dictionary& dict,
                    const Eigen::Ref<const Eigen::MatrixXd>& signals,
                    int sparsity, const PursuitOptions& options) {
  const Eigen::MatrixXd& d = dict.atoms();
  const int k = dict.atom_count();

  JointFit fit;
  Eigen::MatrixXd residual = signals;
  fit.coefficients.resize(0, signals.cols());
  std::vector<char> selected(static_cast<std::size_t>(k), 0);

  const double stop = options.relative_tolerance * signals.norm();
  double previous = residual.norm();

  for (int step = 0; step < sparsity; ++step) {
    if (previous <= stop) break;

    const Eigen::MatrixXd corr = d.transpose() * residual;
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < k; ++j) {
      if (selected[static_cast<std::size_t>(j)]) continue;
      const double score = corr.row(j).cwiseAbs().sum();
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    // Residual orthogonal to every remaining atom: nothing left to gain.
    if (best < 0) break;

    selected[static_cast<std::size_t>(best)] = 1;
    fit.support.push_back(best);

    Eigen::MatrixXd sub(d.rows(), static_cast<Eigen::Index>(fit.support.size()));
    for (std::size_t i = 0; i < fit.support.size(); ++i)
      sub.col(static_cast<Eigen::Index>(i)) = d.col(fit.support[i]);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sub);
    const auto diag = qr.matrixQR().diagonal().cwiseAbs();
    if (diag.minCoeff() <= kRankTolerance * std::max(diag.maxCoeff(), 1e-300))
      throw NumericError("rank-deficient support after selecting atom " +
                         std::to_string(best));
    fit.coefficients = qr.solve(signals);
    residual = signals - sub * fit.coefficients;

    const double norm = residual.norm();
    if (options.check_monotone && norm > previous + 1e-12 * signals.norm())
      throw NumericError("residual norm increased at step " +
                         std::to_string(step));
    previous = norm;
  }
  fit.residual_norm = previous;
  return fit;
}

}  // namespace

Eigen::VectorXd SparseCode::dense() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(atom_count);
  for (const auto& e : entries) out(e.index) = e.value;
  return out;
}

Eigen::MatrixXd SparseCodeMatrix::dense() const {
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(atom_count, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (const auto& e : columns[j].entries)
      out(e.index, static_cast<Eigen::Index>(j)) = e.value;
  return out;
}

Eigen::MatrixXd TileCode::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(atom_count, coefficients.cols());
  for (std::size_t i = 0; i < support.size(); ++i)
    out.row(support[i]) = coefficients.row(static_cast<Eigen::Index>(i));
  return out;
}

SparseCode omp(const Dictionary& dict, const Eigen::Ref<const Eigen::VectorXd>& x,
               int sparsity, const PursuitOptions& options) {
  check_inputs(dict, x, sparsity);
  const JointFit fit = greedy_fit(dict, x, sparsity, options);

  SparseCode code;
  code.atom_count = dict.atom_count();
  code.target_sparsity = sparsity;
  code.residual_norm = fit.residual_norm;
  code.entries.reserve(fit.support.size());
  for (std::size_t i = 0; i < fit.support.size(); ++i)
    code.entries.push_back(
        {fit.support[i], fit.coefficients(static_cast<Eigen::Index>(i), 0)});
  return code;
}

SparseCodeMatrix encode_all(const Dictionary& dict,
                            const Eigen::Ref<const Eigen::MatrixXd>& signals,
                            int sparsity, const PursuitOptions& options) {
  SparseCodeMatrix out;
  out.atom_count = dict.atom_count();
  if (signals.rows() != dict.signal_dim())
    throw DataError("pixels have " + std::to_string(signals.rows()) +
                    " bands but the dictionary expects " +
                    std::to_string(dict.signal_dim()));
  const Eigen::Index n = signals.cols();
  out.columns.resize(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index j = 0; j < n; ++j) {
    try {
      out.columns[static_cast<std::size_t>(j)] =
          omp(dict, signals.col(j), sparsity, options);
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }

  for (Eigen::Index j = 0; j < n; ++j) {
    if (!errors[static_cast<std::size_t>(j)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(j)]);
    } catch (const Error& e) {
      rethrow_with_context(e, "column " + std::to_string(j) + ": ");
    }
  }
  return out;
}

TileCode somp(const Dictionary& dict,
              const Eigen::Ref<const Eigen::MatrixXd>& signals, int sparsity,
              const PursuitOptions& options) {
  if (signals.cols() == 0) throw ParameterError("somp: empty tile");
  check_inputs(dict, signals, sparsity);
  JointFit fit = greedy_fit(dict, signals, sparsity, options);

  TileCode code;
  code.atom_count = dict.atom_count();
  code.tile_rows = 1;
  code.tile_cols = static_cast<int>(signals.cols());
  code.support = std::move(fit.support);
  code.coefficients = std::move(fit.coefficients);
  code.residual_norm = fit.residual_norm;
  return code;
}

}  // namespace hsic
