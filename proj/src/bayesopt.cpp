#include "mctsbp/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "mctsbp/rng.hpp"

namespace mctsbp::gp {

namespace {

// Shared lengthscale factors (times the box width) tried by marginal likelihood.
constexpr double kLengthscaleGrid[] = {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0};
constexpr int kLocalAnchors = 5;
constexpr int kLocalPerScale = 64;
constexpr double kLocalScales[] = {0.1, 0.03, 0.01};
constexpr int kCompassIterations = 200;

Eigen::MatrixXd as_matrix(const std::vector<std::vector<double>>& points) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()),
                    static_cast<Eigen::Index>(points.empty() ? 0 : points[0].size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points[i][j];
    }
  }
  return m;
}

// Acquisitions score the latent function, so the observation noise is taken
// out of the predictive variance. Otherwise a re-sampled point keeps
// sigma >= tau and its EI never decays.
double score(const GPModel& model, const std::vector<double>& x, const Acquisition& acquisition,
             double f_best) {
  Posterior post = model.posterior(x);
  post.variance = std::max(0.0, post.variance - model.kernel().noise);
  return acquisition_value(acquisition, post, f_best);
}

bool contains(const std::vector<std::vector<double>>& set, const std::vector<double>& x) {
  return std::find(set.begin(), set.end(), x) != set.end();
}

}  // namespace

std::string to_string(const Acquisition& acquisition) {
  if (acquisition.kind == AcquisitionKind::kExpectedImprovement) return "ei";
  std::ostringstream os;
  os << "ucb(" << acquisition.kappa << ")";
  return os.str();
}

void OptimizeConfig::validate() const {
  if (bounds.empty()) throw std::invalid_argument("optimize: bounds must not be empty");
  for (const auto& [lo, hi] : bounds) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
      throw std::invalid_argument("optimize: every bound needs finite lo < hi");
    }
  }
  if (n_init < 2) throw std::invalid_argument("optimize: n_init must be >= 2");
  if (n_iter < n_init) throw std::invalid_argument("optimize: n_iter must be >= n_init");
  if (batch < 1) throw std::invalid_argument("optimize: batch must be >= 1");
  if (candidate_count < 1) throw std::invalid_argument("optimize: candidate_count must be >= 1");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("optimize: noise must be >= 0");
  if (acquisition.kappa < 0.0) throw std::invalid_argument("optimize: kappa must be >= 0");
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mu, double sigma, double f_best) {
  if (sigma <= 0.0) return std::max(mu - f_best, 0.0);
  const double gamma = (mu - f_best) / sigma;
  return std::max(0.0, sigma * (gamma * normal_cdf(gamma) + normal_pdf(gamma)));
}

double ucb_acquisition(double mu, double sigma, double kappa) { return mu + kappa * sigma; }

double acquisition_value(const Acquisition& acquisition, const Posterior& post, double f_best) {
  const double sigma = std::sqrt(post.variance);
  if (acquisition.kind == AcquisitionKind::kExpectedImprovement) {
    return expected_improvement(post.mean, sigma, f_best);
  }
  return ucb_acquisition(post.mean, sigma, acquisition.kappa);
}

struct QuasiRandom::Impl {
  explicit Impl(std::size_t dims) : engine(dims) {}
  boost::random::sobol_engine<std::uint32_t, 32> engine;
};

QuasiRandom::QuasiRandom(std::vector<std::pair<double, double>> bounds, std::uint64_t seed)
    : bounds_(std::move(bounds)), impl_(std::make_shared<Impl>(bounds_.size())) {
  Rng rng(seed);
  for (std::size_t i = 0; i < bounds_.size(); ++i) shift_.push_back(rng.uniform());
}

std::vector<double> QuasiRandom::next() {
  std::vector<double> x(bounds_.size());
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    double u = static_cast<double>(impl_->engine()) * 0x1.0p-32 + shift_[i];
    u -= std::floor(u);
    x[i] = bounds_[i].first + u * (bounds_[i].second - bounds_[i].first);
  }
  return x;
}

std::size_t maximize_over(const GPModel& model, const std::vector<std::vector<double>>& candidates,
                          const Acquisition& acquisition, double f_best) {
  if (candidates.empty()) throw std::invalid_argument("acquisition: no candidates");
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = score(model, candidates[i], acquisition, f_best);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

GPModel fit_surrogate(const std::vector<std::vector<double>>& points,
                      const std::vector<double>& values, const OptimizeConfig& config) {
  const Eigen::MatrixXd x = as_matrix(points);
  const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                              static_cast<Eigen::Index>(values.size()));
  const double mean = t.mean();
  const double var = (t.array() - mean).square().mean();

  Matern52Kernel kernel;
  kernel.amplitude = std::max(var, 1e-6);
  kernel.noise = config.noise_variance;
  auto with_factor = [&](double factor) {
    Matern52Kernel k = kernel;
    k.lengthscales.clear();
    for (const auto& [lo, hi] : config.bounds) k.lengthscales.push_back(factor * (hi - lo));
    return k;
  };
  if (!config.fit_lengthscales) return fit(x, t, with_factor(1.0), mean);

  std::optional<GPModel> best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double factor : kLengthscaleGrid) {
    try {
      GPModel m = fit(x, t, with_factor(factor), mean);
      const double ll = m.log_marginal_likelihood();
      if (ll > best_ll) {
        best_ll = ll;
        best = std::move(m);
      }
    } catch (const ConditioningError&) {
    }
  }
  if (!best) throw ConditioningError("surrogate: no lengthscale gave a usable factorization");
  return *std::move(best);
}

std::vector<std::vector<double>> propose_next(const std::vector<std::vector<double>>& points,
                                              const std::vector<double>& values,
                                              const OptimizeConfig& config,
                                              std::uint64_t round_seed) {
  config.validate();
  if (points.empty() || points.size() != values.size()) {
    throw std::invalid_argument("propose_next: need matching, non-empty observations");
  }
  const std::size_t dims = config.dimension();
  const double f_best = *std::max_element(values.begin(), values.end());

  GPModel model = fit_surrogate(points, values, config);
  const Matern52Kernel kernel = model.kernel();
  const double offset = model.offset();

  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });

  std::vector<std::vector<double>> working_points = points;
  std::vector<double> working_values = values;
  std::vector<std::vector<double>> chosen;

  auto clamp_to_box = [&](std::vector<double>& x) {
    for (std::size_t d = 0; d < dims; ++d) {
      x[d] = std::clamp(x[d], config.bounds[d].first, config.bounds[d].second);
    }
  };

  for (int b = 0; b < config.batch; ++b) {
    const std::uint64_t seed = mix_seed(round_seed, static_cast<std::uint64_t>(b));
    std::vector<std::vector<double>> candidates;
    candidates.reserve(static_cast<std::size_t>(config.candidate_count) + 256);
    QuasiRandom qr(config.bounds, seed);
    for (int i = 0; i < config.candidate_count; ++i) candidates.push_back(qr.next());

    Rng rng(mix_seed(seed, 0x10ca1));
    const auto anchors = std::min<std::size_t>(kLocalAnchors, order.size());
    for (std::size_t a = 0; a < anchors; ++a) {
      for (double scale : kLocalScales) {
        for (int i = 0; i < kLocalPerScale; ++i) {
          std::vector<double> x = points[order[a]];
          for (std::size_t d = 0; d < dims; ++d) {
            x[d] += scale * (config.bounds[d].second - config.bounds[d].first) * rng.normal();
          }
          clamp_to_box(x);
          candidates.push_back(std::move(x));
        }
      }
    }
    std::erase_if(candidates, [&](const auto& x) { return contains(chosen, x); });
    if (candidates.empty()) candidates.push_back(qr.next());

    std::vector<double> x =
        candidates[maximize_over(model, candidates, config.acquisition, f_best)];
    double fx = score(model, x, config.acquisition, f_best);

    // Compass refinement of the winning candidate.
    std::vector<double> step(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      step[d] = 0.05 * (config.bounds[d].second - config.bounds[d].first);
    }
    for (int it = 0; it < kCompassIterations; ++it) {
      bool improved = false;
      for (std::size_t d = 0; d < dims && !improved; ++d) {
        for (double dir : {1.0, -1.0}) {
          std::vector<double> y = x;
          y[d] += dir * step[d];
          clamp_to_box(y);
          if (y == x || contains(chosen, y)) continue;
          const double fy = score(model, y, config.acquisition, f_best);
          if (fy > fx) {
            x = std::move(y);
            fx = fy;
            improved = true;
            break;
          }
        }
      }
      if (!improved) {
        bool tiny = true;
        for (std::size_t d = 0; d < dims; ++d) {
          step[d] *= 0.5;
          tiny = tiny && step[d] < 1e-5 * (config.bounds[d].second - config.bounds[d].first);
        }
        if (tiny) break;
      }
    }
    chosen.push_back(x);

    if (b + 1 < config.batch) {
      working_values.push_back(model.posterior(x).mean);
      working_points.push_back(x);
      const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(
          working_values.data(), static_cast<Eigen::Index>(working_values.size()));
      model = fit(as_matrix(working_points), t, kernel, offset);
    }
  }
  return chosen;
}

OptimizeResult bayesopt_loop(const Objective& objective, const OptimizeConfig& config) {
  return bayesopt_loop(
      BatchObjective([&](const std::vector<std::vector<double>>& batch) {
        std::vector<double> out;
        out.reserve(batch.size());
        for (const auto& x : batch) out.push_back(objective(x));
        return out;
      }),
      config);
}

OptimizeResult bayesopt_loop(const BatchObjective& objective, const OptimizeConfig& config) {
  config.validate();
  OptimizeResult result;
  std::vector<std::vector<double>> points;
  std::vector<double> values;

  auto record = [&](const std::vector<std::vector<double>>& batch) {
    const std::vector<double> raw = objective(batch);
    if (raw.size() != batch.size()) {
      throw std::runtime_error("optimize: objective returned the wrong number of values");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      Evaluation e{batch[i], raw[i], false};
      if (!std::isfinite(raw[i])) {
        e.failed = true;
        e.value = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
      }
      points.push_back(e.point);
      values.push_back(e.value);
      result.history.push_back(std::move(e));
    }
  };

  QuasiRandom init(config.bounds, config.seed);
  std::vector<std::vector<double>> first;
  for (int i = 0; i < config.n_init; ++i) first.push_back(init.next());
  record(first);

  std::uint64_t round = 0;
  while (static_cast<int>(result.history.size()) < config.n_iter) {
    OptimizeConfig round_config = config;
    round_config.batch =
        std::min(config.batch, config.n_iter - static_cast<int>(result.history.size()));
    record(propose_next(points, values, round_config, mix_seed(config.seed, ++round)));
  }

  std::size_t best = 0;
  bool found = false;
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const auto& e = result.history[i];
    if (e.failed) continue;
    if (!found || e.value > result.history[best].value) {
      best = i;
      found = true;
    }
  }
  result.best_point = result.history[best].point;
  result.best_value = result.history[best].value;
  return result;
}

}  // namespace mctsbp::gp
