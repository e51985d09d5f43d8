#ifndef ZBS_KNOTS_HPP
#define ZBS_KNOTS_HPP

#include "zbs/error.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace zbs {

// Domain [lo, hi], strictly increasing interior knots and a spline degree for
// one axis.
template <typename Scalar>
struct KnotConfig {
  Scalar lo = 0;
  Scalar hi = 1;
  std::vector<Scalar> interior;
  int degree = 0;

  int num_interior() const { return static_cast<int>(interior.size()); }
  // Dimension of the B-spline space, g + k + 1.
  int num_bsplines() const { return num_interior() + degree + 1; }
  // Dimension of the zero-integral subspace, g + k.
  int num_zb() const { return num_interior() + degree; }

  // Equispaced interior knots.
  static KnotConfig uniform(Scalar lo, Scalar hi, int num_interior, int degree) {
    KnotConfig cfg;
    cfg.lo = lo;
    cfg.hi = hi;
    cfg.degree = degree;
    for (int i = 1; i <= num_interior; ++i)
      cfg.interior.push_back(lo + (hi - lo) * Scalar(i) / Scalar(num_interior + 1));
    return cfg;
  }

  void validate() const {
    if (!(lo < hi)) throw InputError("knot configuration: domain must satisfy lo < hi");
    if (degree < 0) throw InputError("knot configuration: degree must be non-negative");
    Scalar prev = lo;
    for (std::size_t i = 0; i < interior.size(); ++i) {
      const Scalar v = interior[i];
      if (!(v > lo && v < hi)) {
        std::ostringstream os;
        os << "knot configuration: interior knot " << i << " = " << v
           << " lies outside the open domain (" << lo << ", " << hi << ")";
        throw InputError(os.str());
      }
      if (!(v > prev)) {
        std::ostringstream os;
        os << "knot configuration: interior knots must be strictly increasing (index " << i
           << ")";
        throw InputError(os.str());
      }
      prev = v;
    }
  }

  friend bool operator==(const KnotConfig&, const KnotConfig&) = default;
};

// Knot sequence with degree+1 coincident copies of each domain endpoint:
// values[s] holds the knot with index s - degree, so the sequence runs
// over indices -k ... g+k+1.
template <typename Scalar>
class ExtendedKnots {
 public:
  ExtendedKnots() = default;
  ExtendedKnots(std::vector<Scalar> values, int degree)
      : values_(std::move(values)), degree_(degree) {}

  const std::vector<Scalar>& values() const { return values_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(values_.size()); }
  Scalar operator[](int s) const { return values_[static_cast<std::size_t>(s)]; }
  // Knot by extended index (-k ... g+k+1).
  Scalar knot(int i) const { return (*this)[i + degree_]; }

  Scalar lo() const { return values_.front(); }
  Scalar hi() const { return values_.back(); }
  int num_interior() const { return size() - 2 * degree_ - 2; }
  int num_bsplines() const { return num_interior() + degree_ + 1; }
  int num_zb() const { return num_interior() + degree_; }

  // Distinct breakpoints lo = x_0 < ... < x_{g+1} = hi.
  std::vector<Scalar> breakpoints() const {
    std::vector<Scalar> out(values_.begin() + degree_, values_.end() - degree_);
    return out;
  }

  // Storage index s of the span [values[s], values[s+1]) containing x. The last
  // span is closed on the right and interior knots belong to the span on their
  // right. Requires lo <= x <= hi.
  int span(Scalar x) const {
    const int first = degree_;
    const int last = num_interior() + degree_;
    if (x >= values_[static_cast<std::size_t>(last)]) return last;
    auto it = std::upper_bound(values_.begin() + first, values_.begin() + last + 1, x);
    return static_cast<int>(it - values_.begin()) - 1;
  }

  // The same breakpoints with p fewer coincident boundary knots at each end;
  // this is the knot sequence of the degree-(k-p) basis that carries p-th
  // derivatives.
  ExtendedKnots reduced(int p) const {
    std::vector<Scalar> v(values_.begin() + p, values_.end() - p);
    return ExtendedKnots(std::move(v), degree_ - p);
  }

  bool contains(Scalar x) const { return x >= lo() && x <= hi(); }

  friend bool operator==(const ExtendedKnots&, const ExtendedKnots&) = default;

 private:
  std::vector<Scalar> values_;
  int degree_ = 0;
};

template <typename Scalar>
ExtendedKnots<Scalar> extend_knots(const KnotConfig<Scalar>& cfg) {
  cfg.validate();
  std::vector<Scalar> v;
  v.reserve(cfg.interior.size() + 2 * static_cast<std::size_t>(cfg.degree) + 2);
  v.insert(v.end(), static_cast<std::size_t>(cfg.degree) + 1, cfg.lo);
  v.insert(v.end(), cfg.interior.begin(), cfg.interior.end());
  v.insert(v.end(), static_cast<std::size_t>(cfg.degree) + 1, cfg.hi);
  return ExtendedKnots<Scalar>(std::move(v), cfg.degree);
}

}  // namespace zbs

#endif  // ZBS_KNOTS_HPP
