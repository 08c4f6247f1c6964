#include "mctsbp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mctsbp::gp {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

// Pivots smaller than this fraction of the largest diagonal entry count as a
// failed factorization even when LLT reports success.
constexpr double kPivotFloor = 1e-13;

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt, double diag_scale) {
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double pivot = l(i, i);
    if (!std::isfinite(pivot) || pivot * pivot <= kPivotFloor * diag_scale) return false;
  }
  return true;
}

}  // namespace

double matern52_of_distance(double r, double amplitude) {
  const double s = kSqrt5 * r;
  return amplitude * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double Matern52Kernel::operator()(std::span<const double> x, std::span<const double> y) const {
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = (x[i] - y[i]) / lengthscales[i];
    r2 += d * d;
  }
  return matern52_of_distance(std::sqrt(r2), amplitude);
}

double kernel_eval(std::span<const double> x, std::span<const double> y,
                   const Matern52Kernel& kernel) {
  if (x.size() != y.size() || x.size() != kernel.lengthscales.size()) {
    throw std::invalid_argument("kernel: dimension mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::invalid_argument("kernel: non-finite input");
    }
  }
  return kernel(x, y);
}

GPModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
            const Matern52Kernel& kernel, double offset) {
  const auto n = inputs.rows();
  if (n < 1) throw std::invalid_argument("gp fit: need at least one observation");
  if (targets.size() != n) throw std::invalid_argument("gp fit: targets/input count mismatch");
  if (static_cast<std::size_t>(inputs.cols()) != kernel.lengthscales.size()) {
    throw std::invalid_argument("gp fit: input dimension does not match lengthscales");
  }
  if (!(kernel.amplitude > 0.0) || kernel.noise < 0.0) {
    throw std::invalid_argument("gp fit: amplitude must be > 0 and noise >= 0");
  }
  for (double l : kernel.lengthscales) {
    if (!(l > 0.0)) throw std::invalid_argument("gp fit: lengthscales must be > 0");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw std::invalid_argument("gp fit: non-finite data");
  }

  GPModel model;
  model.inputs_ = inputs;
  model.targets_ = targets;
  model.kernel_ = kernel;
  model.offset_ = offset;

  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd xi = inputs.row(i);
    for (Eigen::Index j = 0; j <= i; ++j) {
      Eigen::RowVectorXd xj = inputs.row(j);
      gram(i, j) = gram(j, i) = kernel({xi.data(), static_cast<std::size_t>(xi.size())},
                                       {xj.data(), static_cast<std::size_t>(xj.size())});
    }
    gram(i, i) += kernel.noise;
  }
  const double diag_scale = kernel.amplitude + kernel.noise;

  const double schedule[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  bool ok = false;
  for (double jitter : schedule) {
    Eigen::MatrixXd k = gram;
    k.diagonal().array() += jitter;
    model.chol_.compute(k);
    if (factor_ok(model.chol_, diag_scale)) {
      model.jitter_ = jitter;
      ok = true;
      break;
    }
  }
  if (!ok) {
    throw ConditioningError("gp fit: covariance matrix not positive definite even with 1e-6 jitter");
  }
  model.alpha_ = model.chol_.solve((targets.array() - offset).matrix());
  return model;
}

Posterior GPModel::posterior(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(inputs_.cols())) {
    throw std::invalid_argument("gp posterior: dimension mismatch");
  }
  const auto n = inputs_.rows();
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd xi = inputs_.row(i);
    r(i) = kernel_({xi.data(), static_cast<std::size_t>(xi.size())}, x);
  }
  Posterior out;
  out.mean = offset_ + r.dot(alpha_);
  Eigen::VectorXd v = chol_.matrixL().solve(r);
  out.variance = std::max(0.0, kernel_.amplitude + kernel_.noise - v.squaredNorm());
  return out;
}

double GPModel::log_marginal_likelihood() const {
  const Eigen::VectorXd centered = (targets_.array() - offset_).matrix();
  double log_det = 0.0;
  const auto& l = chol_.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
  return -0.5 * centered.dot(alpha_) - log_det -
         0.5 * static_cast<double>(l.rows()) * std::log(2.0 * std::numbers::pi);
}

Posterior posterior(const GPModel& model, std::span<const double> x) {
  return model.posterior(x);
}

}  // namespace mctsbp::gp
