#pragma once

// Reference implementations used to check the library. They share no code
// with it and favour obviousness over speed.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// Piecewise-linear interpolation of knots spread evenly over [0, horizon].
inline double lerp_knots(const std::vector<double>& knots, double horizon, double s) {
  const double h = horizon / static_cast<double>(knots.size() - 1);
  std::size_t k = static_cast<std::size_t>(s / h);
  if (k >= knots.size() - 1) k = knots.size() - 2;
  const double u = (s - static_cast<double>(k) * h) / h;
  return knots[k] * (1.0 - u) + knots[k + 1] * u;
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m));
  const double frm = f(0.5 * (m + b));
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson(f, a, b, fa, fm, fb, whole, eps, 60);
}

// w0 + integral_0^t exp(p(s)) ds, integrated piece by piece so the kinks of
// p sit on interval ends.
inline double weight_by_quadrature(const std::vector<double>& knots, int horizon, double w0,
                                   double t) {
  auto f = [&](double s) { return std::exp(lerp_knots(knots, horizon, s)); };
  const double h = static_cast<double>(horizon) / static_cast<double>(knots.size() - 1);
  double integral = 0.0;
  double lo = 0.0;
  while (lo < t) {
    const double hi = std::min(t, (std::floor(lo / h + 1e-9) + 1.0) * h);
    integral += adaptive_simpson(f, lo, hi, 1e-14 * std::max(1.0, f(hi) * (hi - lo)));
    lo = hi;
  }
  return w0 + integral;
}

// Matern 5/2 written out term by term.
inline double matern(const std::vector<double>& a, const std::vector<double>& b, double c,
                     const std::vector<double>& l) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]) / (l[i] * l[i]);
  const double r = std::sqrt(sq);
  const double s5 = std::sqrt(5.0) * r;
  return c * (1.0 + s5 + 5.0 * r * r / 3.0) * std::exp(-s5);
}

// Gauss-Jordan inverse with partial pivoting; also returns log |det|.
inline Matrix invert(Matrix a, double& log_det) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  log_det = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(inv[col], inv[piv]);
    const double p = a[col][col];
    log_det += std::log(std::abs(p));
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= p;
      inv[col][j] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

struct GpPrediction {
  double mean;
  double variance;  // includes the observation noise
};

// Posterior of a zero-mean-plus-offset GP via an explicit inverse.
inline GpPrediction gp_predict(const Matrix& x, const std::vector<double>& t, double c,
                               const std::vector<double>& l, double noise, double offset,
                               const std::vector<double>& at) {
  const std::size_t n = x.size();
  Matrix k(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i][j] = matern(x[i], x[j], c, l) + (i == j ? noise : 0.0);
  }
  double log_det = 0.0;
  const Matrix inv = invert(k, log_det);
  std::vector<double> ks(n);
  for (std::size_t i = 0; i < n; ++i) ks[i] = matern(at, x[i], c, l);
  GpPrediction out{offset, c + noise};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.mean += ks[i] * inv[i][j] * (t[j] - offset);
      out.variance -= ks[i] * inv[i][j] * ks[j];
    }
  }
  return out;
}

}  // namespace oracle
