#ifndef ZBS_SMOOTHER_HPP
#define ZBS_SMOOTHER_HPP

#include "zbs/bspline.hpp"
#include "zbs/knots.hpp"
#include "zbs/zb_basis.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace zbs {

using KnotConfigd = KnotConfig<double>;
using ExtendedKnotsd = ExtendedKnots<double>;

// Tensor-product spline space on [a,b] x [c,d]: degree k with knots on x,
// degree l with knots on y.
struct TensorBasisSpec {
  KnotConfigd x;
  KnotConfigd y;

  void validate() const {
    x.validate();
    y.validate();
  }
  ExtendedKnotsd x_knots() const { return extend_knots(x); }
  ExtendedKnotsd y_knots() const { return extend_knots(y); }

  // (g+k)(h+l) + (g+k) + (h+l) = (g+k+1)(h+l+1) - 1.
  int dimension() const { return x.num_bsplines() * y.num_bsplines() - 1; }
  int interactive_dimension() const { return x.num_zb() * y.num_zb(); }

  double area() const { return (x.hi - x.lo) * (y.hi - y.lo); }

  friend bool operator==(const TensorBasisSpec&, const TensorBasisSpec&) = default;
};

// ZB-spline coefficients: Z is (g+k) x (h+l), v has g+k entries (x-marginal),
// u has h+l entries (y-marginal).
struct ZBCoeffs {
  MatrixXd Z;
  VectorXd v;
  VectorXd u;

  static ZBCoeffs zeros(const TensorBasisSpec& spec) {
    const int gx = spec.x.num_zb(), hy = spec.y.num_zb();
    return {MatrixXd::Zero(gx, hy), VectorXd::Zero(gx), VectorXd::Zero(hy)};
  }

  // R = [[Z, v], [u^T, 0]].
  MatrixXd packed() const;
  static ZBCoeffs from_packed(const MatrixXd& R);

  // w = (cs(Z); v; u).
  VectorXd stacked() const;
  static ZBCoeffs from_stacked(const VectorXd& w, int gx, int hy);

  void check_shape(const TensorBasisSpec& spec) const;
};

// Ordinary tensor B-spline coefficients, (g+k+1) x (h+l+1).
struct BCoeffs {
  MatrixXd B;
};

struct PenaltyConfig {
  int p = 1;
  int q = 1;
  double rho = 1e-3;
  // Adds a p-th (q-th) derivative penalty on the x (y) clr marginal.
  bool marginal_penalty = false;

  void validate(const TensorBasisSpec& spec) const;
};

struct FitResult {
  ZBCoeffs coeffs;
  double rho = 0;
  double gcv = 0;
  double hat_trace = 0;
  double rss = 0;
  int n_obs = 0;
  // ||G w - g|| / ||g||.
  double normal_residual = 0;
  // Diagonal jitter was added because G was numerically singular.
  bool jittered = false;
  // Fitted values at the data grid, m x n.
  MatrixXd fitted;
};

// Kronecker design matrices: Z = Zy (x) Zx, Zx = 1_n (x) Zx, Zy = Zy (x) 1_m.
struct Design {
  MatrixXd Z;
  MatrixXd Zx;
  MatrixXd Zy;

  // [Z  Zx  Zy].
  MatrixXd full() const;
};

struct SwReport {
  bool x_pass = true;
  bool y_pass = true;
  // Storage indices of ZB-splines whose support holds no data abscissa.
  std::vector<int> x_empty;
  std::vector<int> y_empty;

  bool pass() const { return x_pass && y_pass; }
  std::string describe() const;
};

struct GcvPoint {
  double rho = 0;
  double gcv = 0;
  double hat_trace = 0;
  double rss = 0;
  bool ok = true;
};

struct GcvScan {
  std::vector<GcvPoint> curve;
  double best_rho = 0;
  double best_gcv = 0;
};

Design assemble_design(const TensorBasisSpec& spec, const VectorXd& x, const VectorXd& y);

// Univariate penalty factor K D S^T M S D K^T for one axis and derivative
// order p.
MatrixXd axis_penalty(const ExtendedKnotsd& t, int p);

// (g+k)(h+l) square penalty N = K D S^T M S D K^T in Kronecker form.
MatrixXd assemble_penalty(const TensorBasisSpec& spec, int p, int q);

SwReport validate_sw(const TensorBasisSpec& spec, const VectorXd& x, const VectorXd& y);

// Holds everything about a smoothing problem that does not depend on rho, so
// that scans over rho reuse one design.
class SmoothingProblem {
 public:
  SmoothingProblem(TensorBasisSpec spec, VectorXd x, VectorXd y, MatrixXd F, int p, int q,
                   bool marginal_penalty = false);

  FitResult fit(double rho) const;
  GcvPoint gcv(double rho) const;
  GcvScan gcv_scan(const std::vector<double>& rho_grid, bool parallel = false) const;

  // H(rho) = X G^{-1} X^T, materialized; only for m n <= 4096.
  MatrixXd hat_matrix(double rho) const;

  // J(w) = ||cs(F) - X w||^2 + rho w^T P w.
  double objective(const ZBCoeffs& c, double rho) const;
  double penalty(const ZBCoeffs& c) const;

  const TensorBasisSpec& spec() const { return spec_; }
  const Design& design() const { return design_; }
  const MatrixXd& system_matrix_base() const { return XtX_; }
  const MatrixXd& penalty_matrix() const { return P_; }
  const VectorXd& rhs() const { return Xtf_; }
  int n_obs() const { return static_cast<int>(f_.size()); }

 private:
  struct Solve;
  Solve solve(double rho) const;

  TensorBasisSpec spec_;
  VectorXd x_, y_;
  MatrixXd F_;
  VectorXd f_;
  int p_, q_;
  Design design_;
  MatrixXd X_;
  MatrixXd XtX_;
  VectorXd Xtf_;
  MatrixXd P_;
};

FitResult fit(const TensorBasisSpec& spec, const MatrixXd& F, const VectorXd& x,
              const VectorXd& y, const PenaltyConfig& pen);

GcvPoint hat_and_gcv(const TensorBasisSpec& spec, const MatrixXd& F, const VectorXd& x,
                     const VectorXd& y, const PenaltyConfig& pen);

GcvScan gcv_scan(const TensorBasisSpec& spec, const MatrixXd& F, const VectorXd& x,
                 const VectorXd& y, int p, int q, const std::vector<double>& rho_grid);

// Argmin of a (rho, gcv) curve; ties go to the smaller rho. Failed points are
// skipped; throws when none succeeded.
GcvScan select_rho(std::vector<GcvPoint> curve);

// Pointwise mean of several curves over a common grid.
std::vector<GcvPoint> mean_gcv_curve(const std::vector<std::vector<GcvPoint>>& curves);

std::vector<double> log_grid(double lo, double hi, int count);
std::vector<double> default_rho_grid();

BCoeffs zb_to_b(const TensorBasisSpec& spec, const ZBCoeffs& c);

MatrixXd eval_spline(const TensorBasisSpec& spec, const ZBCoeffs& c, const VectorXd& x,
                     const VectorXd& y);
MatrixXd eval_spline(const TensorBasisSpec& spec, const BCoeffs& c, const VectorXd& x,
                     const VectorXd& y);

// Mixed partial derivative of order (p, q) of the interactive part.
MatrixXd eval_derivative(const TensorBasisSpec& spec, const ZBCoeffs& c, int p, int q,
                         const VectorXd& x, const VectorXd& y);

}  // namespace zbs

#endif  // ZBS_SMOOTHER_HPP
