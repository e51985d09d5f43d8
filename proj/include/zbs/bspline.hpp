#ifndef ZBS_BSPLINE_HPP
#define ZBS_BSPLINE_HPP

#include "zbs/error.hpp"
#include "zbs/knots.hpp"
#include "zbs/quadrature.hpp"

#include <Eigen/Dense>

#include <sstream>
#include <vector>

namespace zbs {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Mat<double>;
using VectorXd = Vec<double>;

namespace detail {

// The degree+1 B-splines that can be non-zero at x, B_{s-k} ... B_s in storage
// order, where s is the span of x (Cox-de Boor, triangular scheme).
template <typename Scalar>
void nonzero_basis(const ExtendedKnots<Scalar>& t, int s, Scalar x, Scalar* out) {
  const int k = t.degree();
  Scalar left[32], right[32];
  out[0] = 1;
  for (int j = 1; j <= k; ++j) {
    left[j] = x - t[s + 1 - j];
    right[j] = t[s + j] - x;
    Scalar saved = 0;
    for (int r = 0; r < j; ++r) {
      const Scalar tmp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

template <typename Scalar>
void check_in_domain(const ExtendedKnots<Scalar>& t, Scalar x) {
  if (!t.contains(x)) {
    std::ostringstream os;
    os << "evaluation point " << x << " lies outside the domain [" << t.lo() << ", " << t.hi()
       << "]";
    throw InputError(os.str());
  }
}

}  // namespace detail

// Collocation matrix of the g+k+1 B-splines of degree k: row r holds
// B_{-k}(x_r) ... B_g(x_r).
template <typename Scalar, typename Points>
Mat<Scalar> eval_bspline_basis(const ExtendedKnots<Scalar>& t, const Points& points) {
  const int k = t.degree();
  if (k > 30) throw InputError("B-spline degree above 30 is not supported");
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Mat<Scalar> out = Mat<Scalar>::Zero(n, t.num_bsplines());
  Scalar row[32];
  for (Eigen::Index r = 0; r < n; ++r) {
    const Scalar x = points[r];
    detail::check_in_domain(t, x);
    const int s = t.span(x);
    detail::nonzero_basis(t, s, x, row);
    for (int j = 0; j <= k; ++j) out(r, s - k + j) = row[j];
  }
  return out;
}

// Maps B-spline coefficients of a degree-k spline to the coefficients of its
// p-th derivative in the degree-(k-p) basis on knots t.reduced(p). Rows are
// (g+k+1-p), columns (g+k+1). Built as D^p L^p ... D^1 L^1 where L^j takes
// forward differences and D^j = (k+1-j) diag(1 / knot spans).
template <typename Scalar>
Mat<Scalar> derivative_transform(const ExtendedKnots<Scalar>& t, int p) {
  const int k = t.degree();
  const int n = t.num_bsplines();
  if (p < 0 || p > k) {
    std::ostringstream os;
    os << "derivative order " << p << " exceeds spline degree " << k;
    throw InputError(os.str());
  }
  Mat<Scalar> S = Mat<Scalar>::Identity(n, n);
  for (int j = 1; j <= p; ++j) {
    const int rows = n - j;
    Mat<Scalar> DL = Mat<Scalar>::Zero(rows, rows + 1);
    for (int a = 0; a < rows; ++a) {
      const Scalar span = t[a + k + 1] - t[a + j];
      const Scalar scale = Scalar(k + 1 - j) / span;
      DL(a, a) = -scale;
      DL(a, a + 1) = scale;
    }
    S = (DL * S).eval();
  }
  return S;
}

// Gram matrix of the degree-(k-p) B-splines on t.reduced(p):
// m_ij = integral of B_i B_j over [lo, hi]. Exact by per-span Gauss-Legendre.
template <typename Scalar>
Mat<Scalar> gram_matrix(const ExtendedKnots<Scalar>& t, int p) {
  if (p < 0 || p > t.degree()) {
    std::ostringstream os;
    os << "Gram matrix: derivative order " << p << " exceeds spline degree " << t.degree();
    throw InputError(os.str());
  }
  const ExtendedKnots<Scalar> r = t.reduced(p);
  const int d = r.degree();
  const int n = r.num_bsplines();
  const GaussLegendre<Scalar> rule(gauss_nodes_for_product(d));
  Mat<Scalar> M = Mat<Scalar>::Zero(n, n);
  Scalar row[32];
  for (int s = d; s <= d + r.num_interior(); ++s) {
    const Scalar lo = r[s], hi = r[s + 1];
    const Scalar half = (hi - lo) / 2, mid = (hi + lo) / 2;
    for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
      const Scalar x = mid + half * rule.nodes(q);
      const Scalar w = half * rule.weights(q);
      detail::nonzero_basis(r, s, x, row);
      for (int a = 0; a <= d; ++a)
        for (int b = 0; b <= d; ++b) M(s - d + a, s - d + b) += w * row[a] * row[b];
    }
  }
  return M;
}

// Integrals of the degree-k B-splines over [lo, hi]; each equals
// (t_{i+k+1} - t_i) / (k+1).
template <typename Scalar>
Vec<Scalar> bspline_integrals(const ExtendedKnots<Scalar>& t) {
  const int k = t.degree();
  Vec<Scalar> out(t.num_bsplines());
  for (int i = 0; i < t.num_bsplines(); ++i) out(i) = (t[i + k + 1] - t[i]) / Scalar(k + 1);
  return out;
}

// Composite Gauss-Legendre rule over the knot spans of t with a fixed number of
// nodes per span. Exact for piecewise polynomials of degree 2*nodes-1.
template <typename Scalar>
struct SpanRule {
  Vec<Scalar> nodes;
  Vec<Scalar> weights;

  Scalar integrate(const Vec<Scalar>& values) const { return weights.dot(values); }
};

template <typename Scalar>
SpanRule<Scalar> span_rule(const ExtendedKnots<Scalar>& t, int nodes_per_span) {
  const std::vector<Scalar> bp = t.breakpoints();
  const GaussLegendre<Scalar> rule(nodes_per_span);
  const int spans = static_cast<int>(bp.size()) - 1;
  SpanRule<Scalar> out;
  out.nodes.resize(spans * nodes_per_span);
  out.weights.resize(spans * nodes_per_span);
  for (int s = 0; s < spans; ++s) {
    const Scalar half = (bp[s + 1] - bp[s]) / 2, mid = (bp[s + 1] + bp[s]) / 2;
    for (int q = 0; q < nodes_per_span; ++q) {
      out.nodes(s * nodes_per_span + q) = mid + half * rule.nodes(q);
      out.weights(s * nodes_per_span + q) = half * rule.weights(q);
    }
  }
  return out;
}

}  // namespace zbs

#endif  // ZBS_BSPLINE_HPP
