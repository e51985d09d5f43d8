#ifndef ZBS_ZB_BASIS_HPP
#define ZBS_ZB_BASIS_HPP

#include "zbs/bspline.hpp"

namespace zbs {

// (t+s) x (t+s+1) forward-difference matrix: 1 on the diagonal, -1 on the
// superdiagonal.
template <typename Scalar = double>
Mat<Scalar> difference_matrix(int t, int s) {
  const int rows = t + s;
  if (rows < 1) throw InputError("difference matrix needs t + s >= 1");
  Mat<Scalar> K = Mat<Scalar>::Zero(rows, rows + 1);
  for (int i = 0; i < rows; ++i) {
    K(i, i) = 1;
    K(i, i + 1) = -1;
  }
  return K;
}

// Diagonal (k+1) / (lambda_{i+k+1} - lambda_i), i = -k ... g.
template <typename Scalar>
Eigen::DiagonalMatrix<Scalar, Eigen::Dynamic> scale_matrix(const ExtendedKnots<Scalar>& t) {
  const int k = t.degree();
  Vec<Scalar> d(t.num_bsplines());
  for (int i = 0; i < t.num_bsplines(); ++i) {
    const Scalar span = t[i + k + 1] - t[i];
    if (!(span > 0)) throw InputError("scale matrix: zero knot difference");
    d(i) = Scalar(k + 1) / span;
  }
  return d.asDiagonal();
}

// K D: maps B-spline values to ZB-spline values, (g+k) x (g+k+1).
template <typename Scalar>
Mat<Scalar> zb_from_bspline(const ExtendedKnots<Scalar>& t) {
  return difference_matrix<Scalar>(t.num_interior(), t.degree()) * scale_matrix(t);
}

// Collocation matrix of the g+k ZB-splines Z_{-k} ... Z_{g-1}; every column
// integrates to zero over the domain.
template <typename Scalar, typename Points>
Mat<Scalar> eval_zb_basis(const ExtendedKnots<Scalar>& t, const Points& points) {
  return eval_bspline_basis(t, points) * zb_from_bspline(t).transpose();
}

// T = [K D ; 1^T]. T times the B-spline vector gives (Z(x)^T, 1)^T.
template <typename Scalar>
Mat<Scalar> zb_transform(const ExtendedKnots<Scalar>& t) {
  const int n = t.num_bsplines();
  Mat<Scalar> T(n, n);
  if (n > 1) T.topRows(n - 1) = zb_from_bspline(t);
  T.row(n - 1).setOnes();
  return T;
}

// Support [lambda_i, lambda_{i+k+2}] of the ZB-spline with storage index i.
template <typename Scalar>
std::pair<Scalar, Scalar> zb_support(const ExtendedKnots<Scalar>& t, int i) {
  return {t[i], t[i + t.degree() + 2]};
}

}  // namespace zbs

#endif  // ZBS_ZB_BASIS_HPP
