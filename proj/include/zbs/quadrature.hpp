#ifndef ZBS_QUADRATURE_HPP
#define ZBS_QUADRATURE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace zbs {

// Gauss-Legendre rule on [-1, 1].
template <typename Scalar>
struct GaussLegendre {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    if (n < 1) throw std::invalid_argument("GaussLegendre: need at least one node");
    const Scalar pi = std::numbers::pi_v<Scalar>;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      // Newton iteration on P_n from the Chebyshev-like initial guess.
      Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
      Scalar dp = 1;
      for (int it = 0; it < 100; ++it) {
        Scalar p0 = 1, p1 = x;
        for (int j = 2; j <= n; ++j) {
          const Scalar p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / Scalar(j);
          p0 = p1;
          p1 = p2;
        }
        dp = Scalar(n) * (x * p1 - p0) / (x * x - 1);
        const Scalar dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) <= 4 * std::numeric_limits<Scalar>::epsilon()) break;
      }
      // Recompute the derivative at the converged node for the weight.
      Scalar p0 = 1, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const Scalar p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / Scalar(j);
        p0 = p1;
        p1 = p2;
      }
      dp = Scalar(n) * (x * p1 - p0) / (x * x - 1);
      const Scalar w = 2 / ((1 - x * x) * dp * dp);
      nodes(i) = -x;
      nodes(n - 1 - i) = x;
      weights(i) = w;
      weights(n - 1 - i) = w;
    }
    if (n % 2 == 1) nodes(n / 2) = 0;
  }

  // Integral of f over [lo, hi].
  template <typename F>
  Scalar integrate(F&& f, Scalar lo, Scalar hi) const {
    const Scalar half = (hi - lo) / 2, mid = (hi + lo) / 2;
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) sum += weights(i) * f(mid + half * nodes(i));
    return half * sum;
  }
};

// Number of nodes that integrates a polynomial of the given degree exactly.
inline int gauss_nodes_for_degree(int degree) { return degree / 2 + 1; }

// Node count for products of two degree-d pieces.
inline int gauss_nodes_for_product(int d) { return (2 * d + 2) / 2 + 1; }

}  // namespace zbs

#endif  // ZBS_QUADRATURE_HPP
