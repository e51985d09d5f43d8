#ifndef ZBS_DECOMPOSITION_HPP
#define ZBS_DECOMPOSITION_HPP

#include "zbs/smoother.hpp"

#include <algorithm>

namespace zbs {

struct PartNorms {
  double interactive = 0;
  double independent = 0;
  // From the B-spline form of the whole spline, not from the two parts.
  double total = 0;
};

// Interactive part (Z block) and independent part (v, u) of a ZB spline with
// their L2 norms. The split is a partition of the coefficients.
struct DecompositionResult {
  MatrixXd interactive;
  VectorXd marginal_x;
  VectorXd marginal_y;
  double norm_int = 0;
  double norm_ind = 0;
  double norm_total = 0;
  // ||s_int||^2 / ||s||^2, 0 for the zero spline.
  double dependence_ratio = 0;

  ZBCoeffs interactive_coeffs() const;
  ZBCoeffs independent_coeffs() const;
  ZBCoeffs recompose() const { return {interactive, marginal_x, marginal_y}; }
};

DecompositionResult decompose(const TensorBasisSpec& spec, const ZBCoeffs& c);

PartNorms part_norms(const TensorBasisSpec& spec, const ZBCoeffs& c);

// Q = (V K D_x)^T + U K D_y, the B-spline coefficients of the independent part.
MatrixXd independent_bcoeffs(const TensorBasisSpec& spec, const ZBCoeffs& c);

// Clr marginals sum_i v_i Z_i(x) and sum_j u_j Z_j(y).
VectorXd eval_marginal_x(const TensorBasisSpec& spec, const ZBCoeffs& c, const VectorXd& x);
VectorXd eval_marginal_y(const TensorBasisSpec& spec, const ZBCoeffs& c, const VectorXd& y);

struct MarginalReport {
  // max |quadrature marginal - coefficient marginal| over the test abscissae.
  double max_gap_x = 0;
  double max_gap_y = 0;
  double max_gap() const { return std::max(max_gap_x, max_gap_y); }
};

// Averages the full surface over y (resp. x) by quadrature and compares with
// the coefficient-level clr marginals at `points` equispaced abscissae.
MarginalReport marginal_check(const TensorBasisSpec& spec, const ZBCoeffs& c, int points = 200);

// Quadrature of s_ind * s_int over the domain.
double orthogonality_check(const TensorBasisSpec& spec, const ZBCoeffs& c);

// Contract bound for orthogonality_check.
inline double orthogonality_tolerance(const PartNorms& n) {
  return 1e-9 * (n.interactive * n.independent + 1.0);
}

// Integral over the domain of a ZB spline evaluated by tensor Gauss-Legendre.
double integrate_spline(const TensorBasisSpec& spec, const ZBCoeffs& c);

}  // namespace zbs

#endif  // ZBS_DECOMPOSITION_HPP
