#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace mctsbp::gp {

// Matern 5/2 covariance on lengthscale-rescaled coordinates:
//   c (1 + sqrt(5) r + 5/3 r^2) exp(-sqrt(5) r),  r = || (x - y) / l ||.
// `noise` is the observation variance tau^2 added to the Gram diagonal.
struct Matern52Kernel {
  double amplitude = 1.0;
  std::vector<double> lengthscales;
  double noise = 0.0;

  double operator()(std::span<const double> x, std::span<const double> y) const;
};

// Throws std::invalid_argument on dimension mismatch or non-finite input.
double kernel_eval(std::span<const double> x, std::span<const double> y,
                   const Matern52Kernel& kernel);

double matern52_of_distance(double r, double amplitude);

class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Exact GP regression model, immutable once fitted. Targets are stored
// relative to `offset`, the prior mean added back to every posterior mean.
class GPModel {
 public:
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Matern52Kernel& kernel() const { return kernel_; }
  double offset() const { return offset_; }
  double jitter() const { return jitter_; }
  // (K + tau^2 I + jitter I)^-1 (t - offset)
  const Eigen::VectorXd& solve_vector() const { return alpha_; }
  int dimension() const { return static_cast<int>(inputs_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(inputs_.rows()); }

  Posterior posterior(std::span<const double> x) const;
  double log_marginal_likelihood() const;

  friend GPModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                     const Matern52Kernel& kernel, double offset);

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Matern52Kernel kernel_;
  double offset_ = 0.0;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

// Factorizes K + tau^2 I, escalating diagonal jitter 1e-10 .. 1e-6 when the
// plain factorization fails. Throws ConditioningError if all attempts fail.
// `inputs` is n x d, one observation per row.
GPModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
            const Matern52Kernel& kernel, double offset = 0.0);

Posterior posterior(const GPModel& model, std::span<const double> x);

}  // namespace mctsbp::gp
