#include "hsic/baselines.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "hsic/error.hpp"
#include "hsic/random.hpp"

namespace hsic {
namespace {

void check_nonnegative(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (!x.allFinite()) throw DataError("NMF input contains non-finite values");
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (x(i, j) < 0.0)
        throw DataError("NMF input has a negative entry at (" +
                        std::to_string(i) + ", " + std::to_string(j) + ")");
}

Eigen::MatrixXd random_factor(Eigen::Index rows, Eigen::Index cols, double scale,
                              Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * rng.uniform();
  return m;
}

void update_h(const Eigen::MatrixXd& w, const Eigen::Ref<const Eigen::MatrixXd>& x,
              Eigen::MatrixXd& h) {
  const Eigen::MatrixXd num = w.transpose() * x;
  const Eigen::MatrixXd den = (w.transpose() * w) * h;
  h = h.cwiseProduct(num).cwiseQuotient(den.cwiseMax(kNmfFloor));
}

void update_w(Eigen::MatrixXd& w, const Eigen::Ref<const Eigen::MatrixXd>& x,
              const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd num = x * h.transpose();
  const Eigen::MatrixXd den = w * (h * h.transpose());
  w = w.cwiseProduct(num).cwiseQuotient(den.cwiseMax(kNmfFloor));
}

double objective(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::MatrixXd& w,
                 const Eigen::MatrixXd& h) {
  return (x - w * h).squaredNorm();
}

}  // namespace

PcaModel pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, int components) {
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  if (components < 1 || components > std::min(m, n))
    throw ParameterError("PCA components " + std::to_string(components) +
                         " outside [1, " + std::to_string(std::min(m, n)) + "]");
  if (!x.allFinite()) throw DataError("PCA input contains non-finite values");

  PcaModel model;
  model.mean = x.rowwise().mean();
  const Eigen::MatrixXd centered = x.colwise() - model.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  model.components = svd.matrixU().leftCols(components);
  const double dof = static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  model.variances = svd.singularValues().head(components).array().square() / dof;

  for (Eigen::Index j = 0; j < model.components.cols(); ++j) {
    Eigen::Index arg = 0;
    model.components.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.components(arg, j) < 0.0) model.components.col(j) *= -1.0;
  }
  return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.rows() != model.mean.size())
    throw DataError("PCA model expects " + std::to_string(model.mean.size()) +
                    " features, got " + std::to_string(x.rows()));
  return model.components.transpose() * (x.colwise() - model.mean);
}

Eigen::MatrixXd pca_inverse_transform(const PcaModel& model,
                                      const Eigen::Ref<const Eigen::MatrixXd>& scores) {
  if (scores.rows() != model.components.cols())
    throw DataError("score dimension does not match the PCA model");
  return (model.components * scores).colwise() + model.mean;
}

NmfModel nmf_fit(const Eigen::Ref<const Eigen::MatrixXd>& x, int components,
                 int iterations, std::uint64_t seed) {
  check_nonnegative(x);
  if (components < 1 || components > std::min(x.rows(), x.cols()))
    throw ParameterError("NMF components " + std::to_string(components) +
                         " outside [1, min(m, n)]");
  if (iterations < 0) throw ParameterError("NMF iterations must be >= 0");

  Rng rng(seed);
  const double scale = std::sqrt(x.mean() / components);
  NmfModel model;
  model.w = random_factor(x.rows(), components, scale, rng);
  model.h = random_factor(components, x.cols(), scale, rng);
  model.objective_trace.push_back(objective(x, model.w, model.h));
  for (int it = 0; it < iterations; ++it) {
    update_h(model.w, x, model.h);
    update_w(model.w, x, model.h);
    model.objective_trace.push_back(objective(x, model.w, model.h));
  }
  model.iterations = iterations;
  model.objective = model.objective_trace.back();
  return model;
}

Eigen::MatrixXd nmf_transform(const NmfModel& model,
                              const Eigen::Ref<const Eigen::MatrixXd>& x,
                              int iterations, std::uint64_t seed) {
  check_nonnegative(x);
  if (x.rows() != model.w.rows())
    throw DataError("NMF model expects " + std::to_string(model.w.rows()) +
                    " features, got " + std::to_string(x.rows()));
  Rng rng(seed);
  const double scale = x.size() > 0 ? std::sqrt(x.mean() / model.w.cols()) : 0.0;
  Eigen::MatrixXd h = random_factor(model.w.cols(), x.cols(), scale, rng);
  for (int it = 0; it < iterations; ++it) update_h(model.w, x, h);
  return h;
}

}  // namespace hsic
