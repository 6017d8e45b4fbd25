#pragma once

#include <ipub/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

namespace ipub {

/// Raised when an enclosure cannot be formed, e.g. division by an interval
/// that contains zero.
class EnclosureError : public Error {
 public:
  using Error::Error;
};

/// Outward padding applied to every non-thin interval result, scaled by the
/// endpoint magnitude when it exceeds one. This stands in for directed
/// rounding; it is not a certified enclosure of floating-point error.
inline constexpr double kOutwardEps = 1e-12;

template <class Scalar>
struct Interval {
  Scalar lo{0};
  Scalar hi{0};

  Interval() = default;
  Interval(Scalar v) : lo(v), hi(v) {}  // NOLINT: implicit point interval
  Interval(Scalar l, Scalar h) : lo(l), hi(h) {
    if (!(l <= h)) throw EnclosureError("interval with lo > hi or NaN endpoint");
  }

  static Interval whole() {
    return Interval(-std::numeric_limits<Scalar>::infinity(), std::numeric_limits<Scalar>::infinity());
  }

  bool thin() const { return lo == hi; }
  Scalar width() const { return hi - lo; }
  Scalar mid() const { return lo == hi ? lo : lo + (hi - lo) / Scalar(2); }
  Scalar mag() const { return std::max(std::abs(lo), std::abs(hi)); }
  bool contains(Scalar v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool contains_zero() const { return lo <= Scalar(0) && Scalar(0) <= hi; }

  bool operator==(const Interval&) const = default;
};

namespace detail {

template <class Scalar>
Scalar pad_down(Scalar v) {
  return v - Scalar(kOutwardEps) * std::max(Scalar(1), std::abs(v));
}
template <class Scalar>
Scalar pad_up(Scalar v) {
  return v + Scalar(kOutwardEps) * std::max(Scalar(1), std::abs(v));
}

// Thin inputs yield the plain floating-point result, unpadded.
template <class Scalar>
Interval<Scalar> outward(Scalar lo, Scalar hi, bool thin_inputs) {
  if (thin_inputs) return {std::min(lo, hi), std::max(lo, hi)};
  return {pad_down(lo), pad_up(hi)};
}

}  // namespace detail

template <class Scalar>
Interval<Scalar> operator+(const Interval<Scalar>& a, const Interval<Scalar>& b) {
  return detail::outward(a.lo + b.lo, a.hi + b.hi, a.thin() && b.thin());
}

template <class Scalar>
Interval<Scalar> operator-(const Interval<Scalar>& a) {
  return {-a.hi, -a.lo};
}

template <class Scalar>
Interval<Scalar> operator-(const Interval<Scalar>& a, const Interval<Scalar>& b) {
  return detail::outward(a.lo - b.hi, a.hi - b.lo, a.thin() && b.thin());
}

template <class Scalar>
Interval<Scalar> operator*(const Interval<Scalar>& a, const Interval<Scalar>& b) {
  if (a.thin() && b.thin()) {
    const Scalar p = a.lo * b.lo;
    return {p, p};
  }
  const Scalar p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return detail::outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}), false);
}

template <class Scalar>
Interval<Scalar> recip(const Interval<Scalar>& a) {
  if (a.contains_zero()) throw EnclosureError("reciprocal of an interval containing zero");
  return detail::outward(Scalar(1) / a.hi, Scalar(1) / a.lo, a.thin());
}

template <class Scalar>
Interval<Scalar> operator/(const Interval<Scalar>& a, const Interval<Scalar>& b) {
  if (b.contains_zero()) throw EnclosureError("division by an interval containing zero");
  if (a.thin() && b.thin()) {
    const Scalar q = a.lo / b.lo;
    return {q, q};
  }
  const Scalar p1 = a.lo / b.lo, p2 = a.lo / b.hi, p3 = a.hi / b.lo, p4 = a.hi / b.hi;
  return detail::outward(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}), false);
}

template <class Scalar>
Interval<Scalar> operator+(const Interval<Scalar>& a, Scalar b) { return a + Interval<Scalar>(b); }
template <class Scalar>
Interval<Scalar> operator+(Scalar a, const Interval<Scalar>& b) { return Interval<Scalar>(a) + b; }
template <class Scalar>
Interval<Scalar> operator-(const Interval<Scalar>& a, Scalar b) { return a - Interval<Scalar>(b); }
template <class Scalar>
Interval<Scalar> operator-(Scalar a, const Interval<Scalar>& b) { return Interval<Scalar>(a) - b; }
template <class Scalar>
Interval<Scalar> operator*(const Interval<Scalar>& a, Scalar b) { return a * Interval<Scalar>(b); }
template <class Scalar>
Interval<Scalar> operator*(Scalar a, const Interval<Scalar>& b) { return Interval<Scalar>(a) * b; }
template <class Scalar>
Interval<Scalar> operator/(const Interval<Scalar>& a, Scalar b) { return a / Interval<Scalar>(b); }

template <class Scalar>
Interval<Scalar>& operator+=(Interval<Scalar>& a, const Interval<Scalar>& b) { return a = a + b; }
template <class Scalar>
Interval<Scalar>& operator-=(Interval<Scalar>& a, const Interval<Scalar>& b) { return a = a - b; }

template <class Scalar>
Interval<Scalar> neg(const Interval<Scalar>& a) { return -a; }

template <class Scalar>
Interval<Scalar> sqr(const Interval<Scalar>& a) {
  if (a.thin()) return Interval<Scalar>(a.lo * a.lo);
  const Scalar l2 = a.lo * a.lo, h2 = a.hi * a.hi;
  if (a.contains_zero()) return detail::outward(Scalar(0), std::max(l2, h2), false);
  return detail::outward(std::min(l2, h2), std::max(l2, h2), false);
}

template <class Scalar>
Interval<Scalar> exp_iv(const Interval<Scalar>& a) {
  using std::exp;
  if (a.thin()) return Interval<Scalar>(exp(a.lo));
  Interval<Scalar> r = detail::outward(exp(a.lo), exp(a.hi), false);
  r.lo = std::max(r.lo, Scalar(0));
  return r;
}

/// sigma(t) = 1 / (1 + exp(-t)), increasing.
template <class Scalar>
Scalar sigmoid(Scalar t) {
  using std::exp;
  if (t >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-t));
  const Scalar e = exp(t);
  return e / (Scalar(1) + e);
}

template <class Scalar>
Interval<Scalar> sigmoid_iv(const Interval<Scalar>& a) {
  if (a.thin()) return Interval<Scalar>(sigmoid(a.lo));
  Interval<Scalar> r = detail::outward(sigmoid(a.lo), sigmoid(a.hi), false);
  r.lo = std::max(r.lo, Scalar(0));
  r.hi = std::min(r.hi, Scalar(1));
  return r;
}

template <class Scalar>
std::optional<Interval<Scalar>> intersect(const Interval<Scalar>& a, const Interval<Scalar>& b) {
  const Scalar lo = std::max(a.lo, b.lo), hi = std::min(a.hi, b.hi);
  if (lo > hi) return std::nullopt;
  return Interval<Scalar>(lo, hi);
}

template <class Scalar>
Interval<Scalar> hull(const Interval<Scalar>& a, const Interval<Scalar>& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

template <class Scalar>
std::ostream& operator<<(std::ostream& os, const Interval<Scalar>& a) {
  return os << '[' << a.lo << ", " << a.hi << ']';
}

/// Enclosure of a box in R^d: one interval per coordinate.
template <class Scalar>
using IntervalBox = Vector<Interval<Scalar>>;

template <class Scalar>
using IntervalMat = Matrix<Interval<Scalar>>;

template <class Derived>
auto box_midpoint(const Eigen::MatrixBase<Derived>& box) {
  using Scalar = decltype(box(0).lo);
  Vector<Scalar> m(box.size());
  for (Index j = 0; j < box.size(); ++j) m(j) = box(j).mid();
  return m;
}

template <class Scalar>
IntervalBox<Scalar> point_box(const Vector<Scalar>& v) {
  IntervalBox<Scalar> b(v.size());
  for (Index j = 0; j < v.size(); ++j) b(j) = Interval<Scalar>(v(j));
  return b;
}

template <class Scalar>
bool box_contains(const IntervalBox<Scalar>& box, const Vector<Scalar>& v) {
  for (Index j = 0; j < box.size(); ++j)
    if (!box(j).contains(v(j))) return false;
  return true;
}

template <class Scalar>
Scalar max_width(const IntervalBox<Scalar>& box) {
  Scalar w(0);
  for (Index j = 0; j < box.size(); ++j) w = std::max(w, box(j).width());
  return w;
}

/// Interval dot product sum_j a_j * b_j.
template <class DerivedA, class DerivedB>
auto dot(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using IntervalT = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw DimensionError("interval dot: length mismatch");
  IntervalT acc{};
  for (Index j = 0; j < a.size(); ++j) acc += IntervalT(a(j)) * IntervalT(b(j));
  return acc;
}

}  // namespace ipub

namespace Eigen {

template <class Scalar>
struct NumTraits<ipub::Interval<Scalar>> : GenericNumTraits<ipub::Interval<Scalar>> {
  using Real = ipub::Interval<Scalar>;
  using NonInteger = ipub::Interval<Scalar>;
  using Nested = ipub::Interval<Scalar>;
  using Literal = ipub::Interval<Scalar>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 6,
    MulCost = 12
  };
};

}  // namespace Eigen
