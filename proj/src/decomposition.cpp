#include "zbs/decomposition.hpp"

#include <cmath>

namespace zbs {

namespace {

// Tensor rule that is exact for products of two splines of the given degrees.
std::pair<SpanRule<double>, SpanRule<double>> product_rules(const TensorBasisSpec& spec) {
  return {span_rule(spec.x_knots(), gauss_nodes_for_product(spec.x.degree)),
          span_rule(spec.y_knots(), gauss_nodes_for_product(spec.y.degree))};
}

double integrate_grid(const SpanRule<double>& rx, const SpanRule<double>& ry, const MatrixXd& g) {
  return rx.weights.dot(g * ry.weights);
}

}  // namespace

ZBCoeffs DecompositionResult::interactive_coeffs() const {
  return {interactive, VectorXd::Zero(marginal_x.size()), VectorXd::Zero(marginal_y.size())};
}

ZBCoeffs DecompositionResult::independent_coeffs() const {
  return {MatrixXd::Zero(interactive.rows(), interactive.cols()), marginal_x, marginal_y};
}

MatrixXd independent_bcoeffs(const TensorBasisSpec& spec, const ZBCoeffs& c) {
  c.check_shape(spec);
  const MatrixXd KDx = zb_from_bspline(spec.x_knots());
  const MatrixXd KDy = zb_from_bspline(spec.y_knots());
  const MatrixXd V = VectorXd::Ones(KDy.cols()) * c.v.transpose();
  const MatrixXd U = VectorXd::Ones(KDx.cols()) * c.u.transpose();
  return (V * KDx).transpose() + U * KDy;
}

PartNorms part_norms(const TensorBasisSpec& spec, const ZBCoeffs& c) {
  spec.validate();
  c.check_shape(spec);
  const ExtendedKnotsd tx = spec.x_knots(), ty = spec.y_knots();
  const MatrixXd Mx = gram_matrix(tx, 0), My = gram_matrix(ty, 0);
  const MatrixXd KDx = zb_from_bspline(tx), KDy = zb_from_bspline(ty);
  // cs(Z)^T (Ny (x) Nx) cs(Z) = tr(Z^T Nx Z Ny).
  const MatrixXd Nx = KDx * Mx * KDx.transpose();
  const MatrixXd Ny = KDy * My * KDy.transpose();
  const double int2 = (c.Z.transpose() * Nx * c.Z * Ny).trace();
  const MatrixXd Q = independent_bcoeffs(spec, c);
  const double ind2 = (Q.transpose() * Mx * Q * My).trace();
  const MatrixXd B = zb_to_b(spec, c).B;
  const double tot2 = (B.transpose() * Mx * B * My).trace();
  return {std::sqrt(std::max(int2, 0.0)), std::sqrt(std::max(ind2, 0.0)),
          std::sqrt(std::max(tot2, 0.0))};
}

DecompositionResult decompose(const TensorBasisSpec& spec, const ZBCoeffs& c) {
  DecompositionResult r;
  r.interactive = c.Z;
  r.marginal_x = c.v;
  r.marginal_y = c.u;
  const PartNorms n = part_norms(spec, c);
  r.norm_int = n.interactive;
  r.norm_ind = n.independent;
  r.norm_total = n.total;
  r.dependence_ratio = n.total > 0 ? (n.interactive * n.interactive) / (n.total * n.total) : 0.0;
  return r;
}

VectorXd eval_marginal_x(const TensorBasisSpec& spec, const ZBCoeffs& c, const VectorXd& x) {
  c.check_shape(spec);
  return eval_zb_basis(spec.x_knots(), x) * c.v;
}

VectorXd eval_marginal_y(const TensorBasisSpec& spec, const ZBCoeffs& c, const VectorXd& y) {
  c.check_shape(spec);
  return eval_zb_basis(spec.y_knots(), y) * c.u;
}

MarginalReport marginal_check(const TensorBasisSpec& spec, const ZBCoeffs& c, int points) {
  spec.validate();
  c.check_shape(spec);
  const auto [rx, ry] = product_rules(spec);
  const VectorXd xs = VectorXd::LinSpaced(points, spec.x.lo, spec.x.hi);
  const VectorXd ys = VectorXd::LinSpaced(points, spec.y.lo, spec.y.hi);
  // Rows: test abscissae in x, columns: quadrature nodes in y.
  const MatrixXd sx = eval_spline(spec, c, xs, ry.nodes);
  const VectorXd quad_x = sx * ry.weights / (spec.y.hi - spec.y.lo);
  const MatrixXd sy = eval_spline(spec, c, rx.nodes, ys);
  const VectorXd quad_y = sy.transpose() * rx.weights / (spec.x.hi - spec.x.lo);
  MarginalReport r;
  r.max_gap_x = (quad_x - eval_marginal_x(spec, c, xs)).cwiseAbs().maxCoeff();
  r.max_gap_y = (quad_y - eval_marginal_y(spec, c, ys)).cwiseAbs().maxCoeff();
  return r;
}

double orthogonality_check(const TensorBasisSpec& spec, const ZBCoeffs& c) {
  spec.validate();
  c.check_shape(spec);
  const auto [rx, ry] = product_rules(spec);
  const DecompositionResult parts{c.Z, c.v, c.u};
  const MatrixXd s_int = eval_spline(spec, parts.interactive_coeffs(), rx.nodes, ry.nodes);
  const MatrixXd s_ind = eval_spline(spec, parts.independent_coeffs(), rx.nodes, ry.nodes);
  return integrate_grid(rx, ry, s_int.cwiseProduct(s_ind));
}

double integrate_spline(const TensorBasisSpec& spec, const ZBCoeffs& c) {
  spec.validate();
  const SpanRule<double> rx = span_rule(spec.x_knots(), gauss_nodes_for_degree(spec.x.degree));
  const SpanRule<double> ry = span_rule(spec.y_knots(), gauss_nodes_for_degree(spec.y.degree));
  return integrate_grid(rx, ry, eval_spline(spec, c, rx.nodes, ry.nodes));
}

}  // namespace zbs
