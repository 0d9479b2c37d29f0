#include "hsic/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "hsic/error.hpp"
#include "hsic/random.hpp"

namespace hsic {
namespace {

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
  }
}

void check_square(const Eigen::SparseMatrix<double>& m, int count) {
  if (m.rows() != m.cols()) throw ParameterError("eigensolver: matrix is not square");
  if (count < 1 || count > m.rows())
    throw ParameterError("eigensolver: requested " + std::to_string(count) +
                         " eigenpairs of a " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.rows()) + " matrix");
}

// Projects `w` off span(basis) twice and normalizes the survivors; columns
// that vanish relative to their input are dropped.
Eigen::MatrixXd orthonormal_extension(const Eigen::MatrixXd& basis,
                                      Eigen::MatrixXd w, double floor) {
  Eigen::MatrixXd kept(w.rows(), 0);
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    Eigen::VectorXd v = w.col(j);
    const double before = v.norm();
    if (!(before > floor)) continue;
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
      if (kept.cols() > 0) v -= kept * (kept.transpose() * v);
    }
    const double after = v.norm();
    if (!(after > 1e-8 * before) || !(after > floor)) continue;
    kept.conservativeResize(Eigen::NoChange, kept.cols() + 1);
    kept.col(kept.cols() - 1) = v / after;
  }
  return kept;
}

void append(Eigen::MatrixXd& m, const Eigen::MatrixXd& cols) {
  const Eigen::Index old = m.cols();
  m.conservativeResize(Eigen::NoChange, old + cols.cols());
  m.rightCols(cols.cols()) = cols;
}

}  // namespace

EigenPairs smallest_eigenpairs_dense(const Eigen::SparseMatrix<double>& matrix,
                                     int count) {
  check_square(matrix, count);
  const Eigen::MatrixXd dense(matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success)
    throw NumericError("dense eigensolver failed to converge");
  EigenPairs out;
  out.values = solver.eigenvalues().head(count);
  out.vectors = solver.eigenvectors().leftCols(count);
  fix_signs(out.vectors);
  return out;
}

EigenPairs smallest_eigenpairs_iterative(const Eigen::SparseMatrix<double>& matrix,
                                         int count, const EigenOptions& options) {
  check_square(matrix, count);
  const Eigen::Index n = matrix.rows();

  // sigma >= lambda_max(L) by Gershgorin, so B = sigma*I - L is PSD and its
  // largest eigenpairs are the smallest of L.
  Eigen::VectorXd row_bound = Eigen::VectorXd::Zero(n);
  double max_entry = 0.0;
  for (Eigen::Index k = 0; k < matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, k); it; ++it) {
      row_bound(it.row()) += std::abs(it.value());
      max_entry = std::max(max_entry, std::abs(it.value()));
    }
  const double sigma = row_bound.size() > 0 ? row_bound.maxCoeff() : 0.0;
  if (sigma == 0.0) {
    EigenPairs out;
    out.values = Eigen::VectorXd::Zero(count);
    out.vectors = Eigen::MatrixXd::Identity(n, count);
    return out;
  }
  const double tol = options.tolerance * max_entry;
  const double floor = 1e-14 * sigma;
  auto apply = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return sigma * x - matrix * x;
  };

  const Eigen::Index block = std::min<Eigen::Index>(n, count + 2);
  const Eigen::Index keep = std::min<Eigen::Index>(n, count + block);
  const Eigen::Index max_basis =
      std::min<Eigen::Index>(n, std::max<Eigen::Index>(6 * block, keep + 40));

  Rng rng(options.seed ^ 0xe16e5017e5ULL);
  Eigen::MatrixXd start(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) start(i, j) = rng.normal();

  Eigen::MatrixXd v = orthonormal_extension(Eigen::MatrixXd(n, 0), start, 0.0);
  Eigen::MatrixXd bv = apply(v);
  Eigen::Index last_start = 0;

  for (int cycle = 0; cycle < options.max_iterations; ++cycle) {
    while (v.cols() < max_basis) {
      Eigen::MatrixXd w = bv.middleCols(last_start, v.cols() - last_start);
      if (v.cols() + w.cols() > max_basis) w.conservativeResize(Eigen::NoChange, max_basis - v.cols());
      const Eigen::MatrixXd fresh = orthonormal_extension(v, std::move(w), floor);
      if (fresh.cols() == 0) break;
      last_start = v.cols();
      append(v, fresh);
      append(bv, apply(fresh));
    }

    Eigen::MatrixXd h = v.transpose() * bv;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(h);
    if (ritz.info() != Eigen::Success)
      throw NumericError("eigensolver: Rayleigh-Ritz step failed");

    const Eigen::Index dim = v.cols();
    const Eigen::Index kept = std::min(keep, dim);
    // Largest Ritz values of B sit at the end of the ascending spectrum.
    const Eigen::MatrixXd s = ritz.eigenvectors().rightCols(kept).rowwise().reverse();
    const Eigen::VectorXd theta = ritz.eigenvalues().tail(kept).reverse();
    Eigen::MatrixXd y = v * s;
    Eigen::MatrixXd by = bv * s;
    const Eigen::MatrixXd resid = by - y * theta.asDiagonal();

    bool converged = true;
    for (Eigen::Index j = 0; j < count; ++j)
      if (resid.col(j).norm() > tol) converged = false;

    if (converged || dim == n) {
      EigenPairs out;
      out.values = (sigma - theta.head(count).array()).matrix();
      out.vectors = y.leftCols(count);
      fix_signs(out.vectors);
      return out;
    }

    // Thick restart: keep the leading Ritz vectors and continue the Krylov
    // expansion from their residual block.
    v = std::move(y);
    bv = std::move(by);
    const Eigen::MatrixXd fresh = orthonormal_extension(
        v, resid.leftCols(std::min(block, kept)), floor);
    if (fresh.cols() == 0) {
      // Residuals vanished in the working precision: accept the Ritz pairs.
      EigenPairs out;
      out.values = (sigma - theta.head(count).array()).matrix();
      out.vectors = v.leftCols(count);
      fix_signs(out.vectors);
      return out;
    }
    last_start = v.cols();
    append(v, fresh);
    append(bv, apply(fresh));
  }
  throw NumericError("eigensolver did not converge within " +
                     std::to_string(options.max_iterations) + " restarts");
}

EigenPairs smallest_eigenpairs(const Eigen::SparseMatrix<double>& matrix,
                               int count, const EigenOptions& options) {
  if (matrix.rows() <= options.dense_threshold)
    return smallest_eigenpairs_dense(matrix, count);
  return smallest_eigenpairs_iterative(matrix, count, options);
}

}  // namespace hsic
