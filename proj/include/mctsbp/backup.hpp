#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mctsbp/game.hpp"

namespace mctsbp {

// Monotone weight function w(t) = w0 + integral_0^t exp(p(s)) ds where p is
// the piecewise-linear interpolant of m knots spaced N/(m-1) apart on [0, N].
// The integral is evaluated exactly per linear piece and tabulated at
// t = 0..N. Lookups past the horizon clamp to w(N).
class WeightProfile {
 public:
  WeightProfile(std::vector<double> knots, int horizon, double w0);

  const std::vector<double>& knots() const { return knots_; }
  int horizon() const { return horizon_; }
  double w0() const { return table_.front(); }
  double spacing() const { return spacing_; }
  std::span<const double> table() const { return table_; }

  // Interpolated exponent p(s), s clamped to [0, N].
  double exponent(double s) const;
  double at(std::int64_t t) const;

 private:
  std::vector<double> knots_;
  int horizon_;
  double spacing_;
  std::vector<double> table_;
};

// Throws std::invalid_argument on m < 2, N < 1, negative or non-finite w0,
// non-finite knots, knots above 700, or a table that fails to be finite and
// strictly increasing.
WeightProfile build_weight_table(std::vector<double> knots, int horizon, double w0);

// Knots on the line p(s) = log(lambda) s + log(alpha log lambda) with
// lambda = 1 / (1 - alpha) and w0 = alpha, giving w(t) = alpha (1 - alpha)^-t.
// alpha must lie in (0, 1).
WeightProfile erwa_knots(double alpha, int m, int horizon);

enum class FeedbackShape { kGAX, kGAY, kGBX, kGBY };

inline constexpr int kFeedbackSegments = 8;

// Piecewise-constant weight at index t of [0, N]: eight segments of uniform
// width (GA*) or doubling width (GB*), rising from 1 to K across segments
// linearly (G*X) or geometrically (G*Y).
double feedback_weight(FeedbackShape shape, double t, int horizon, double final_ratio);

struct StandardBackup {};
struct ErwaBackup {
  double alpha = 0.01;
};
struct CoulomBackup {
  double x = 2.0;
  int y = 16;
};
struct FeedbackBackup {
  FeedbackShape shape = FeedbackShape::kGBY;
  double final_ratio = 64.0;
  int horizon = 1000;
};
struct MonotoneBackup {
  std::shared_ptr<const WeightProfile> profile;
};
struct SoftmaxBackup {
  std::shared_ptr<const WeightProfile> profile;
};

using BackupStrategy = std::variant<StandardBackup, ErwaBackup, CoulomBackup, FeedbackBackup,
                                    MonotoneBackup, SoftmaxBackup>;

// Checks parameter ranges (alpha in (0,1], x > 0, y >= 1, K > 1, w0 = 1 for
// Monotone and w0 = 0 for Softmax). Throws std::invalid_argument.
void validate(const BackupStrategy& strategy);

// True for strategies that recompute an interior node's value from its
// children (Coulom, Softmax) instead of averaging the node's own returns.
bool recomputes_from_children(const BackupStrategy& strategy);

std::string strategy_name(const BackupStrategy& strategy);
std::string to_string(FeedbackShape shape);
FeedbackShape parse_feedback_shape(const std::string& text);

// Per-node scratch for weighted averages: Q = weighted_sum / weight_sum.
struct BackupAccumulator {
  double weighted_sum = 0.0;
  double weight_sum = 0.0;
};

// `n` is always the node's visit count before the update.
double standard_update(double q, double r, std::int64_t n);
double erwa_update(double q, double r, std::int64_t n, double alpha);
double weighted_update(BackupAccumulator& acc, double r, double weight);
double monotone_update(BackupAccumulator& acc, double r, std::int64_t n,
                       const WeightProfile& profile);
double feedback_update(BackupAccumulator& acc, double r, std::int64_t n,
                       const FeedbackBackup& params);

struct ChildStat {
  double q = 0.0;
  std::int64_t n = 0;
};

// Growth schedule of Coulom's mean-weight parameter M.
double coulom_mean_weight(double x, int y, std::int64_t parent_visits);

// Interpolation between the best child (argmin at MIN nodes) and the
// visit-weighted mean. Children with n = 0 are ignored; throws
// std::invalid_argument when none is visited.
double coulom_parent_update(std::span<const ChildStat> children, PlayerRole parent_role, double x,
                            int y, std::int64_t parent_visits);

// sum_j a_j Q_j / sum_j a_j with a_j = N_j exp(+-Q_j w) (minus at MIN nodes),
// evaluated with the largest exponent factored out.
double softmax_weighted_mean(std::span<const ChildStat> children, PlayerRole parent_role,
                             double w);
double softmax_parent_update(std::span<const ChildStat> children, PlayerRole parent_role,
                             const WeightProfile& profile, std::int64_t parent_visits);

}  // namespace mctsbp
