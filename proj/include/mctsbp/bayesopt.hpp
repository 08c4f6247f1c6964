#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mctsbp/gp.hpp"

namespace mctsbp::gp {

enum class AcquisitionKind { kExpectedImprovement, kUpperConfidenceBound };

struct Acquisition {
  AcquisitionKind kind = AcquisitionKind::kExpectedImprovement;
  double kappa = 2.0;
};

std::string to_string(const Acquisition& acquisition);

struct OptimizeConfig {
  std::vector<std::pair<double, double>> bounds;
  int n_init = 8;
  int n_iter = 40;
  int batch = 1;
  Acquisition acquisition;
  int candidate_count = 4096;
  std::uint64_t seed = 0;
  // Observation variance tau^2 of the objective.
  double noise_variance = 0.25 / 400.0;
  // Pick a shared lengthscale factor (times the box width) by marginal
  // likelihood; otherwise the lengthscale equals the box width.
  bool fit_lengthscales = true;

  void validate() const;
  std::size_t dimension() const { return bounds.size(); }
};

// Standard normal density and distribution function.
double normal_pdf(double z);
double normal_cdf(double z);

// E[max(f - f_best, 0)] for f ~ N(mu, sigma^2); sigma = 0 gives max(mu - f_best, 0).
double expected_improvement(double mu, double sigma, double f_best);
double ucb_acquisition(double mu, double sigma, double kappa);
double acquisition_value(const Acquisition& acquisition, const Posterior& post, double f_best);

// Scrambled (randomly shifted) Sobol points in a box.
class QuasiRandom {
 public:
  QuasiRandom(std::vector<std::pair<double, double>> bounds, std::uint64_t seed);
  std::vector<double> next();

 private:
  struct Impl;
  std::vector<std::pair<double, double>> bounds_;
  std::vector<double> shift_;
  std::shared_ptr<Impl> impl_;
};

// Highest-acquisition candidate; ties keep the earliest.
std::size_t maximize_over(const GPModel& model, const std::vector<std::vector<double>>& candidates,
                          const Acquisition& acquisition, double f_best);

// Fits the surrogate used by the loop: targets centered on their mean,
// amplitude equal to their variance, lengthscales from the config.
GPModel fit_surrogate(const std::vector<std::vector<double>>& points,
                      const std::vector<double>& values, const OptimizeConfig& config);

// Next `config.batch` points. Candidates are quasi-random points in the box
// plus perturbations of the best observed points, followed by a compass
// refinement of the winner. Later batch members are chosen after imputing
// the posterior mean at earlier ones (constant liar).
std::vector<std::vector<double>> propose_next(const std::vector<std::vector<double>>& points,
                                              const std::vector<double>& values,
                                              const OptimizeConfig& config,
                                              std::uint64_t round_seed);

struct Evaluation {
  std::vector<double> point;
  double value = 0.0;
  bool failed = false;
};

struct OptimizeResult {
  std::vector<double> best_point;
  double best_value = 0.0;
  std::vector<Evaluation> history;
};

using Objective = std::function<double(const std::vector<double>&)>;
// Evaluates a whole batch; lets callers run evaluations concurrently.
using BatchObjective =
    std::function<std::vector<double>(const std::vector<std::vector<double>>&)>;

// Maximizes `objective` over the box. Non-finite objective values are
// recorded as failures and scored with the worst value observed so far.
OptimizeResult bayesopt_loop(const Objective& objective, const OptimizeConfig& config);
OptimizeResult bayesopt_loop(const BatchObjective& objective, const OptimizeConfig& config);

}  // namespace mctsbp::gp
