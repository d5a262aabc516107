#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maxslope/error.hpp"

namespace maxslope {

// Exponent of an l^p norm. The endpoints p = 1 and p = infinity are kept as
// distinct kinds so that the sign/selector formulas stay exact.
class PNorm {
 public:
  enum class Kind { one, finite, infinity };

  static PNorm one() { return PNorm(Kind::one, 1.0); }
  static PNorm infinity() { return PNorm(Kind::infinity, std::numeric_limits<double>::infinity()); }

  // Accepts any p in [1, inf]; 1 and +inf map onto the exact kinds.
  static PNorm of(double p) {
    if (std::isnan(p) || p < 1.0) throw InvalidArgument("norm exponent must lie in [1, inf]");
    if (p == 1.0) return one();
    if (std::isinf(p)) return infinity();
    return PNorm(Kind::finite, p);
  }

  Kind kind() const { return kind_; }
  bool is_one() const { return kind_ == Kind::one; }
  bool is_infinity() const { return kind_ == Kind::infinity; }
  double exponent() const { return p_; }

  friend bool operator==(const PNorm&, const PNorm&) = default;

  std::string to_string() const {
    switch (kind_) {
      case Kind::one: return "1";
      case Kind::infinity: return "inf";
      case Kind::finite: break;
    }
    return std::to_string(p_);
  }

 private:
  PNorm(Kind k, double p) : kind_(k), p_(p) {}

  Kind kind_;
  double p_;
};

// Finite-dimensional real vector with finite entries. Primal points and dual
// elements share this representation.
class Point {
 public:
  Point() = default;
  Point(std::initializer_list<double> values) : coords_(values) { validate(); }
  explicit Point(std::vector<double> values) : coords_(std::move(values)) { validate(); }

  static Point zeros(std::size_t dim) { return Point(std::vector<double>(dim, 0.0)); }

  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }

  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }

  auto begin() const { return coords_.begin(); }
  auto end() const { return coords_.end(); }
  auto begin() { return coords_.begin(); }
  auto end() { return coords_.end(); }

  std::span<const double> values() const { return coords_; }
  const std::vector<double>& vector() const { return coords_; }

  bool is_finite() const {
    return std::all_of(coords_.begin(), coords_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  void validate() const {
    if (!is_finite()) throw InvalidArgument("point has non-finite coordinates");
  }

  std::vector<double> coords_;
};

inline void require_same_dim(const Point& a, const Point& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
}

inline Point operator+(const Point& a, const Point& b) {
  require_same_dim(a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return Point(std::move(out));
}

inline Point operator-(const Point& a, const Point& b) {
  require_same_dim(a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return Point(std::move(out));
}

inline Point operator*(double s, const Point& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return Point(std::move(out));
}

inline Point operator-(const Point& a) { return -1.0 * a; }

inline double dot(const Point& a, const Point& b) {
  require_same_dim(a, b);
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Componentwise sign with sign(0) = 0.
inline Point sign(const Point& a) {
  std::vector<double> out(a.size());
  std::transform(a.begin(), a.end(), out.begin(), [](double v) { return sign(v); });
  return Point(std::move(out));
}

inline double norm(const Point& x, PNorm p) {
  double largest = 0.0;
  for (double v : x) largest = std::max(largest, std::abs(v));
  switch (p.kind()) {
    case PNorm::Kind::infinity:
      return largest;
    case PNorm::Kind::one: {
      double s = 0.0;
      for (double v : x) s += std::abs(v);
      return s;
    }
    case PNorm::Kind::finite:
      break;
  }
  if (largest == 0.0) return 0.0;
  // Scale by the largest magnitude to keep the power sum in range.
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v) / largest, p.exponent());
  return largest * std::pow(s, 1.0 / p.exponent());
}

inline PNorm dual_exponent(PNorm p) {
  switch (p.kind()) {
    case PNorm::Kind::one: return PNorm::infinity();
    case PNorm::Kind::infinity: return PNorm::one();
    case PNorm::Kind::finite: break;
  }
  return PNorm::of(p.exponent() / (p.exponent() - 1.0));
}

// A maximizer of <xi, v> over the closed unit p-ball, i.e. an element of the
// subdifferential of the dual norm at xi. Returns 0 for xi = 0.
//  p = inf: sign(xi), with 0 in flat coordinates.
//  p = 1:   mass split uniformly over the max-magnitude coordinates.
//  else:    sign(xi) * (|xi| / ||xi||_q)^(q-1).
inline Point dual_argmax(const Point& xi, PNorm p) {
  std::vector<double> out(xi.size(), 0.0);
  switch (p.kind()) {
    case PNorm::Kind::infinity:
      return sign(xi);
    case PNorm::Kind::one: {
      const double top = norm(xi, PNorm::infinity());
      if (top == 0.0) return Point(std::move(out));
      const auto ties = std::count_if(xi.begin(), xi.end(), [&](double v) { return std::abs(v) == top; });
      const double mass = 1.0 / static_cast<double>(ties);
      for (std::size_t i = 0; i < xi.size(); ++i) {
        if (std::abs(xi[i]) == top) out[i] = sign(xi[i]) * mass;
      }
      return Point(std::move(out));
    }
    case PNorm::Kind::finite:
      break;
  }
  const double q = dual_exponent(p).exponent();
  const double scale = norm(xi, PNorm::of(q));
  if (scale == 0.0) return Point(std::move(out));
  for (std::size_t i = 0; i < xi.size(); ++i) {
    out[i] = sign(xi[i]) * std::pow(std::abs(xi[i]) / scale, q - 1.0);
  }
  return Point(std::move(out));
}

// Axis-aligned box [lower_i, upper_i] per coordinate.
struct IntervalBox {
  Point lower;
  Point upper;

  std::size_t size() const { return lower.size(); }

  bool contains(const Point& x) const {
    require_same_dim(x, lower);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < lower[i] || x[i] > upper[i]) return false;
    }
    return true;
  }

  Point midpoint() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = lower[i] + 0.5 * (upper[i] - lower[i]);
    return Point(std::move(out));
  }

  Point clamp(const Point& x) const {
    require_same_dim(x, lower);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], lower[i], upper[i]);
    return Point(std::move(out));
  }
};

// Closed l-infinity ball {x : |x_i - center_i| <= radius for all i}.
struct BoxConstraint {
  Point center;
  double radius = 0.0;

  BoxConstraint() = default;
  BoxConstraint(Point c, double r) : center(std::move(c)), radius(r) {
    if (!(radius >= 0.0) || std::isinf(radius)) throw InvalidArgument("box radius must be finite and >= 0");
  }

  bool contains(const Point& x) const {
    require_same_dim(x, center);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - center[i]) > radius) return false;
    }
    return true;
  }

  // Face coordinates c_i -/+ r, pulled inward by an ulp where rounding would
  // otherwise place them outside the membership test |x_i - c_i| <= r.
  IntervalBox intervals() const {
    std::vector<double> lo(center.size()), hi(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
      const double c = center[i];
      double l = c - radius;
      double h = c + radius;
      while (std::abs(l - c) > radius) l = std::nextafter(l, c);
      while (std::abs(h - c) > radius) h = std::nextafter(h, c);
      lo[i] = l;
      hi[i] = h;
    }
    return {Point(std::move(lo)), Point(std::move(hi))};
  }
};

// Componentwise projection onto the box; the result always passes contains().
inline Point clip(const Point& x, const BoxConstraint& box) { return box.intervals().clamp(x); }

inline IntervalBox box_intersect(const IntervalBox& a, const IntervalBox& b) {
  require_same_dim(a.lower, b.lower);
  std::vector<double> lo(a.size()), hi(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo[i] = std::max(a.lower[i], b.lower[i]);
    hi[i] = std::min(a.upper[i], b.upper[i]);
    if (lo[i] > hi[i]) {
      throw EmptyIntersection("boxes do not intersect in coordinate " + std::to_string(i));
    }
  }
  return {Point(std::move(lo)), Point(std::move(hi))};
}

struct LinearMinimum {
  Point argmin;
  double value;
};

// Exact minimizer of x -> <xi, x> over a box: lower face where xi_i > 0, upper
// face where xi_i < 0, midpoint where xi_i == 0.
inline LinearMinimum linear_min_over_box(const Point& xi, const IntervalBox& box) {
  require_same_dim(xi, box.lower);
  std::vector<double> out(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (xi[i] > 0.0) {
      out[i] = box.lower[i];
    } else if (xi[i] < 0.0) {
      out[i] = box.upper[i];
    } else {
      out[i] = box.lower[i] + 0.5 * (box.upper[i] - box.lower[i]);
    }
  }
  Point x(std::move(out));
  const double value = dot(xi, x);
  return {std::move(x), value};
}

inline LinearMinimum linear_min_over_box(const Point& xi, const BoxConstraint& box) {
  return linear_min_over_box(xi, box.intervals());
}

}  // namespace maxslope
