#include "mctsbp/backup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mctsbp {

namespace {

constexpr double kFlatSlope = 1e-12;
constexpr double kMaxKnot = 700.0;

// integral of exp(a + slope * (s - s1)) over [s1, s2] where a = p(s1).
double segment_integral(double p1, double slope, double length) {
  if (std::abs(slope) > kFlatSlope) {
    return std::exp(p1) * std::expm1(slope * length) / slope;
  }
  return length * std::exp(p1);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

WeightProfile::WeightProfile(std::vector<double> knots, int horizon, double w0)
    : knots_(std::move(knots)), horizon_(horizon) {
  if (knots_.size() < 2) throw std::invalid_argument("weight profile: need at least 2 knots");
  if (horizon_ < 1) throw std::invalid_argument("weight profile: horizon must be >= 1");
  if (!std::isfinite(w0) || w0 < 0.0) {
    throw std::invalid_argument("weight profile: w0 must be finite and non-negative");
  }
  for (double k : knots_) {
    if (!std::isfinite(k)) throw std::invalid_argument("weight profile: non-finite knot");
    if (k > kMaxKnot) throw std::invalid_argument("weight profile: knot above 700 overflows");
  }
  spacing_ = static_cast<double>(horizon_) / static_cast<double>(knots_.size() - 1);

  // Each entry is the value at the start of its linear piece plus the closed
  // form integral from there, so rounding does not accumulate along t.
  table_.resize(static_cast<std::size_t>(horizon_) + 1);
  table_[0] = w0;
  const std::size_t pieces = knots_.size() - 1;
  auto piece_start = [&](std::size_t k) { return static_cast<double>(k) * spacing_; };
  auto slope_of = [&](std::size_t k) { return (knots_[k + 1] - knots_[k]) / spacing_; };
  double start_value = w0;
  std::size_t piece = 0;
  for (int t = 1; t <= horizon_; ++t) {
    const double s = t;
    while (piece + 1 < pieces && s > piece_start(piece + 1)) {
      start_value += segment_integral(knots_[piece], slope_of(piece), spacing_);
      ++piece;
    }
    table_[static_cast<std::size_t>(t)] =
        start_value + segment_integral(knots_[piece], slope_of(piece), s - piece_start(piece));
  }
  for (std::size_t t = 0; t < table_.size(); ++t) {
    if (!std::isfinite(table_[t])) throw std::invalid_argument("weight profile: table overflow");
    if (t > 0 && !(table_[t] > table_[t - 1])) {
      throw std::invalid_argument("weight profile: table is not strictly increasing at t=" +
                                  std::to_string(t) + " (increment underflow)");
    }
  }
}

double WeightProfile::exponent(double s) const {
  s = std::clamp(s, 0.0, static_cast<double>(horizon_));
  const std::size_t pieces = knots_.size() - 1;
  auto piece = std::min(pieces - 1, static_cast<std::size_t>(s / spacing_));
  double frac = s / spacing_ - static_cast<double>(piece);
  return knots_[piece] + frac * (knots_[piece + 1] - knots_[piece]);
}

double WeightProfile::at(std::int64_t t) const {
  if (t <= 0) return table_.front();
  if (t >= horizon_) return table_.back();
  return table_[static_cast<std::size_t>(t)];
}

WeightProfile build_weight_table(std::vector<double> knots, int horizon, double w0) {
  return WeightProfile(std::move(knots), horizon, w0);
}

WeightProfile erwa_knots(double alpha, int m, int horizon) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("erwa_knots: alpha must lie in (0, 1); alpha = 1 is plain Q = r");
  }
  if (m < 2 || horizon < 1) throw std::invalid_argument("erwa_knots: need m >= 2, N >= 1");
  const double log_lambda = -std::log1p(-alpha);
  const double spacing = static_cast<double>(horizon) / (m - 1);
  std::vector<double> knots(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    knots[static_cast<std::size_t>(i)] = log_lambda * (i * spacing) + std::log(alpha * log_lambda);
  }
  return WeightProfile(std::move(knots), horizon, alpha);
}

double feedback_weight(FeedbackShape shape, double t, int horizon, double final_ratio) {
  const double n = horizon;
  int segment = 0;
  if (t >= n) {
    segment = kFeedbackSegments - 1;
  } else if (t > 0) {
    if (shape == FeedbackShape::kGAX || shape == FeedbackShape::kGAY) {
      segment = static_cast<int>(std::floor(t * kFeedbackSegments / n));
    } else {
      // Boundary j sits at N (2^j - 1) / (2^8 - 1).
      const double units = t * ((1 << kFeedbackSegments) - 1) / n;
      segment = static_cast<int>(std::floor(std::log2(units + 1.0)));
    }
    segment = std::clamp(segment, 0, kFeedbackSegments - 1);
  }
  const double frac = static_cast<double>(segment) / (kFeedbackSegments - 1);
  if (shape == FeedbackShape::kGAX || shape == FeedbackShape::kGBX) {
    return 1.0 + frac * (final_ratio - 1.0);
  }
  return std::pow(final_ratio, frac);
}

void validate(const BackupStrategy& strategy) {
  std::visit(Overloaded{
                 [](const StandardBackup&) {},
                 [](const ErwaBackup& s) {
                   if (!(s.alpha > 0.0 && s.alpha <= 1.0)) {
                     throw std::invalid_argument("erwa: alpha must lie in (0, 1]");
                   }
                 },
                 [](const CoulomBackup& s) {
                   if (!(s.x > 0.0)) throw std::invalid_argument("coulom: x must be > 0");
                   if (s.y < 1) throw std::invalid_argument("coulom: y must be >= 1");
                 },
                 [](const FeedbackBackup& s) {
                   if (!(s.final_ratio > 1.0)) {
                     throw std::invalid_argument("feedback: final ratio K must be > 1");
                   }
                   if (s.horizon < 1) throw std::invalid_argument("feedback: horizon must be >= 1");
                 },
                 [](const MonotoneBackup& s) {
                   if (!s.profile) throw std::invalid_argument("monotone: missing weight profile");
                   if (s.profile->w0() != 1.0) {
                     throw std::invalid_argument("monotone: weight profile must have w0 = 1");
                   }
                 },
                 [](const SoftmaxBackup& s) {
                   if (!s.profile) throw std::invalid_argument("softmax: missing weight profile");
                   if (s.profile->w0() != 0.0) {
                     throw std::invalid_argument("softmax: weight profile must have w0 = 0");
                   }
                 },
             },
             strategy);
}

bool recomputes_from_children(const BackupStrategy& strategy) {
  return std::holds_alternative<CoulomBackup>(strategy) ||
         std::holds_alternative<SoftmaxBackup>(strategy);
}

std::string to_string(FeedbackShape shape) {
  switch (shape) {
    case FeedbackShape::kGAX: return "GAX";
    case FeedbackShape::kGAY: return "GAY";
    case FeedbackShape::kGBX: return "GBX";
    case FeedbackShape::kGBY: return "GBY";
  }
  return "?";
}

FeedbackShape parse_feedback_shape(const std::string& text) {
  if (text == "GAX") return FeedbackShape::kGAX;
  if (text == "GAY") return FeedbackShape::kGAY;
  if (text == "GBX") return FeedbackShape::kGBX;
  if (text == "GBY") return FeedbackShape::kGBY;
  throw std::invalid_argument("unknown feedback profile '" + text + "' (GAX, GAY, GBX, GBY)");
}

std::string strategy_name(const BackupStrategy& strategy) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const StandardBackup&) { os << "standard"; },
                 [&](const ErwaBackup& s) { os << "erwa(" << s.alpha << ")"; },
                 [&](const CoulomBackup& s) { os << "coulom(" << s.x << "," << s.y << ")"; },
                 [&](const FeedbackBackup& s) {
                   os << to_string(s.shape) << "(K=" << s.final_ratio << ")";
                 },
                 [&](const MonotoneBackup&) { os << "monotone"; },
                 [&](const SoftmaxBackup&) { os << "softmax"; },
             },
             strategy);
  return os.str();
}

double standard_update(double q, double r, std::int64_t n) {
  if (n <= 0) return r;
  return q + (r - q) / static_cast<double>(n + 1);
}

double erwa_update(double q, double r, std::int64_t n, double alpha) {
  if (n <= 0) return r;
  return q + alpha * (r - q);
}

double weighted_update(BackupAccumulator& acc, double r, double weight) {
  acc.weighted_sum += weight * r;
  acc.weight_sum += weight;
  return acc.weighted_sum / acc.weight_sum;
}

double monotone_update(BackupAccumulator& acc, double r, std::int64_t n,
                       const WeightProfile& profile) {
  return weighted_update(acc, r, profile.at(n));
}

double feedback_update(BackupAccumulator& acc, double r, std::int64_t n,
                       const FeedbackBackup& params) {
  return weighted_update(
      acc, r,
      feedback_weight(params.shape, static_cast<double>(n), params.horizon, params.final_ratio));
}

double coulom_mean_weight(double x, int y, std::int64_t parent_visits) {
  if (parent_visits < y) return x;
  return x * (1.0 + std::log2(static_cast<double>(parent_visits) / y));
}

double coulom_parent_update(std::span<const ChildStat> children, PlayerRole parent_role, double x,
                            int y, std::int64_t parent_visits) {
  const ChildStat* best = nullptr;
  double weighted = 0.0;
  double visits = 0.0;
  for (const auto& c : children) {
    if (c.n < 1) continue;
    weighted += static_cast<double>(c.n) * c.q;
    visits += static_cast<double>(c.n);
    if (best == nullptr ||
        (parent_role == PlayerRole::kMax ? c.q > best->q : c.q < best->q)) {
      best = &c;
    }
  }
  if (best == nullptr) throw std::invalid_argument("coulom: no visited children");
  const double mean = weighted / visits;
  const double m = coulom_mean_weight(x, y, parent_visits);
  const double nb = static_cast<double>(best->n);
  const double lambda = nb / (nb + m);
  return lambda * best->q + (1.0 - lambda) * mean;
}

double softmax_weighted_mean(std::span<const ChildStat> children, PlayerRole parent_role,
                             double w) {
  const double sign = parent_role == PlayerRole::kMax ? 1.0 : -1.0;
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& c : children) {
    if (c.n >= 1) top = std::max(top, sign * c.q * w);
  }
  if (!std::isfinite(top)) throw std::invalid_argument("softmax: no visited children");
  double num = 0.0;
  double den = 0.0;
  for (const auto& c : children) {
    if (c.n < 1) continue;
    const double a = static_cast<double>(c.n) * std::exp(sign * c.q * w - top);
    num += a * c.q;
    den += a;
  }
  return num / den;
}

double softmax_parent_update(std::span<const ChildStat> children, PlayerRole parent_role,
                             const WeightProfile& profile, std::int64_t parent_visits) {
  return softmax_weighted_mean(children, parent_role, profile.at(parent_visits));
}

}  // namespace mctsbp
