#pragma once

// Brute-force reference computations. Nothing here calls into the library's
// loss, penalty, bound or solver code.

#include <ipub/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using ipub::Index;
using ipub::Loss;
using Mat = ipub::Matrix<double>;
using Vec = ipub::Vector<double>;

inline double loss(Loss l, double y, double v) {
  switch (l) {
    case Loss::squared: return (y - v) * (y - v);
    case Loss::hinge: return std::max(0.0, 1.0 - y * v);
    case Loss::logistic: {
      const double m = y * v;
      // log(1 + e^-m) without overflow
      return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
    }
  }
  return 0.0;
}

/// sup_u (-alpha u - loss(y, u)) by dense grid over [lo, hi].
inline double conjugate_by_grid(Loss l, double y, double alpha, double lo = -50.0, double hi = 50.0,
                                int points = 2000001) {
  double best = -std::numeric_limits<double>::infinity();
  const double h = (hi - lo) / (points - 1);
  for (int k = 0; k < points; ++k) {
    const double u = lo + h * k;
    best = std::max(best, -alpha * u - loss(l, y, u));
  }
  return best;
}

inline double penalty(const ipub::Penalty<double>& p, const Vec& w) {
  double s = 0.0;
  for (Index j = 0; j < w.size(); ++j) {
    s += 0.5 * p.lambda * w(j) * w(j);
    if (p.kind == ipub::PenaltyKind::elastic_net) s += p.kappa * std::abs(w(j));
  }
  return s;
}

/// sup_w (s w - rho_j(w)) for one coordinate, by grid over [lo, hi].
inline double penalty_conjugate_by_grid(const ipub::Penalty<double>& p, double s, double lo = -50.0,
                                        double hi = 50.0, int points = 2000001) {
  double best = -std::numeric_limits<double>::infinity();
  const double h = (hi - lo) / (points - 1);
  for (int k = 0; k < points; ++k) {
    const double w = lo + h * k;
    double r = 0.5 * p.lambda * w * w;
    if (p.kind == ipub::PenaltyKind::elastic_net) r += p.kappa * std::abs(w);
    best = std::max(best, s * w - r);
  }
  return best;
}

inline double primal(Loss l, const ipub::Penalty<double>& p, const Mat& X, const Vec& y, const Vec& w) {
  double s = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    double v = 0.0;
    for (Index j = 0; j < X.cols(); ++j) v += X(i, j) * w(j);
    s += loss(l, y(i), v);
  }
  return s / static_cast<double>(X.rows()) + penalty(p, w);
}

/// Closed-form conjugates written out separately from the library, used only
/// to evaluate the dual on many corner matrices.
inline double loss_conjugate_formula(Loss l, double y, double a) {
  switch (l) {
    case Loss::squared: return a * (a - 4.0 * y) / 4.0;
    case Loss::hinge: return -a / y;
    case Loss::logistic: {
      const double t = a / y;
      if (t <= 0.0 || t >= 1.0) return 0.0;
      return (1.0 - t) * std::log(1.0 - t) + t * std::log(t);
    }
  }
  return 0.0;
}

inline double penalty_conjugate_formula(const ipub::Penalty<double>& p, double s) {
  const double k = p.kind == ipub::PenaltyKind::elastic_net ? p.kappa : 0.0;
  const double t = std::max(std::abs(s) - k, 0.0);
  return t * t / (2.0 * p.lambda);
}

inline double dual(Loss l, const ipub::Penalty<double>& p, const Mat& X, const Vec& y, const Vec& a) {
  const double n = static_cast<double>(X.rows());
  double s = 0.0;
  for (Index i = 0; i < X.rows(); ++i) s -= loss_conjugate_formula(l, y(i), a(i)) / n;
  for (Index j = 0; j < X.cols(); ++j) {
    double c = 0.0;
    for (Index i = 0; i < X.rows(); ++i) c += a(i) * X(i, j);
    s -= penalty_conjugate_formula(p, c / n);
  }
  return s;
}

/// Calls f on every corner matrix of the box (missing = lower < upper).
inline void for_each_corner(const Mat& lo, const Mat& hi, const std::function<void(const Mat&)>& f) {
  std::vector<std::pair<Index, Index>> cells;
  for (Index i = 0; i < lo.rows(); ++i)
    for (Index j = 0; j < lo.cols(); ++j)
      if (lo(i, j) < hi(i, j)) cells.push_back({i, j});
  Mat x = lo;
  const std::uint64_t total = std::uint64_t{1} << cells.size();
  for (std::uint64_t m = 0; m < total; ++m) {
    for (std::size_t k = 0; k < cells.size(); ++k)
      x(cells[k].first, cells[k].second) = (m >> k) & 1u ? hi(cells[k].first, cells[k].second)
                                                            : lo(cells[k].first, cells[k].second);
    f(x);
  }
}

/// Central difference of a scalar function of a vector, coordinate j.
inline double central_difference(const std::function<double(const Vec&)>& f, Vec w, Index j, double h) {
  const double w0 = w(j);
  w(j) = w0 + h;
  const double fp = f(w);
  w(j) = w0 - h;
  const double fm = f(w);
  return (fp - fm) / (2.0 * h);
}

/// Type-7 quantile written from the definition: x_(floor(h)) plus the
/// fractional part of h = (N - 1) p times the gap to the next order statistic.
inline double type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const double f = std::floor(h);
  const auto k = static_cast<std::size_t>(f);
  if (k + 1 >= v.size()) return v.back();
  return v[k] + (h - f) * (v[k + 1] - v[k]);
}

}  // namespace oracle
