#include "zbs/smoother.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace zbs {

MatrixXd ZBCoeffs::packed() const {
  const Eigen::Index gx = Z.rows(), hy = Z.cols();
  MatrixXd R = MatrixXd::Zero(gx + 1, hy + 1);
  R.topLeftCorner(gx, hy) = Z;
  R.topRightCorner(gx, 1) = v;
  R.bottomLeftCorner(1, hy) = u.transpose();
  return R;
}

ZBCoeffs ZBCoeffs::from_packed(const MatrixXd& R) {
  if (R.rows() < 2 || R.cols() < 2) throw InputError("packed ZB coefficients need at least 2x2");
  if (R(R.rows() - 1, R.cols() - 1) != 0.0)
    throw InputError("packed ZB coefficients must have 0 in the bottom-right corner");
  const Eigen::Index gx = R.rows() - 1, hy = R.cols() - 1;
  return {R.topLeftCorner(gx, hy), R.topRightCorner(gx, 1),
          R.bottomLeftCorner(1, hy).transpose()};
}

VectorXd ZBCoeffs::stacked() const {
  VectorXd w(Z.size() + v.size() + u.size());
  w << Z.reshaped(), v, u;
  return w;
}

ZBCoeffs ZBCoeffs::from_stacked(const VectorXd& w, int gx, int hy) {
  if (w.size() != gx * hy + gx + hy) throw InputError("stacked coefficient length mismatch");
  ZBCoeffs c;
  c.Z = w.head(gx * hy).reshaped(gx, hy);
  c.v = w.segment(gx * hy, gx);
  c.u = w.tail(hy);
  return c;
}

void ZBCoeffs::check_shape(const TensorBasisSpec& spec) const {
  const int gx = spec.x.num_zb(), hy = spec.y.num_zb();
  if (Z.rows() != gx || Z.cols() != hy || v.size() != gx || u.size() != hy) {
    std::ostringstream os;
    os << "ZB coefficients have shape Z " << Z.rows() << "x" << Z.cols() << ", v " << v.size()
       << ", u " << u.size() << " but the basis needs Z " << gx << "x" << hy;
    throw InputError(os.str());
  }
}

void PenaltyConfig::validate(const TensorBasisSpec& spec) const {
  if (p < 0 || p > spec.x.degree - 1) {
    std::ostringstream os;
    os << "penalty order p = " << p << " must lie in [0, k-1] with k = " << spec.x.degree;
    throw InputError(os.str());
  }
  if (q < 0 || q > spec.y.degree - 1) {
    std::ostringstream os;
    os << "penalty order q = " << q << " must lie in [0, l-1] with l = " << spec.y.degree;
    throw InputError(os.str());
  }
  if (!(rho > 0) || !std::isfinite(rho)) throw InputError("smoothing parameter rho must be > 0");
}

MatrixXd Design::full() const {
  MatrixXd X(Z.rows(), Z.cols() + Zx.cols() + Zy.cols());
  X << Z, Zx, Zy;
  return X;
}

std::string SwReport::describe() const {
  std::ostringstream os;
  auto list = [&](const char* axis, bool ok, const std::vector<int>& empty) {
    os << axis << ": " << (ok ? "pass" : "FAIL");
    if (!ok) {
      os << " (empty supports:";
      for (int i : empty) os << ' ' << i;
      os << ')';
    }
  };
  list("x", x_pass, x_empty);
  os << "; ";
  list("y", y_pass, y_empty);
  return os.str();
}

namespace {

void check_points(const ExtendedKnotsd& t, const VectorXd& pts, const char* axis) {
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    if (!t.contains(pts(i))) {
      std::ostringstream os;
      os << axis << " abscissa " << pts(i) << " (index " << i << ") lies outside ["
         << t.lo() << ", " << t.hi() << "]";
      throw InputError(os.str());
    }
  }
}

std::vector<int> empty_supports(const ExtendedKnotsd& t, const VectorXd& pts) {
  std::vector<int> empty;
  for (int i = 0; i < t.num_zb(); ++i) {
    const auto [lo, hi] = zb_support(t, i);
    bool hit = false;
    for (Eigen::Index r = 0; r < pts.size() && !hit; ++r) {
      const double p = pts(r);
      hit = (p > lo && p < hi) || (p == lo && lo == t.lo()) || (p == hi && hi == t.hi());
    }
    if (!hit) empty.push_back(i);
  }
  return empty;
}

int column_rank(const MatrixXd& A) {
  if (A.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  return static_cast<int>(qr.rank());
}

}  // namespace

Design assemble_design(const TensorBasisSpec& spec, const VectorXd& x, const VectorXd& y) {
  spec.validate();
  const ExtendedKnotsd tx = spec.x_knots(), ty = spec.y_knots();
  check_points(tx, x, "x");
  check_points(ty, y, "y");
  const MatrixXd Zx = eval_zb_basis(tx, x);
  const MatrixXd Zy = eval_zb_basis(ty, y);
  const VectorXd ones_m = VectorXd::Ones(x.size()), ones_n = VectorXd::Ones(y.size());
  Design d;
  d.Z = Eigen::kroneckerProduct(Zy, Zx);
  d.Zx = Eigen::kroneckerProduct(ones_n, Zx);
  d.Zy = Eigen::kroneckerProduct(Zy, ones_m);
  return d;
}

MatrixXd axis_penalty(const ExtendedKnotsd& t, int p) {
  const MatrixXd KD = zb_from_bspline(t);
  const MatrixXd S = derivative_transform(t, p);
  const MatrixXd M = gram_matrix(t, p);
  const MatrixXd A = S * KD.transpose();
  return A.transpose() * M * A;
}

MatrixXd assemble_penalty(const TensorBasisSpec& spec, int p, int q) {
  spec.validate();
  const MatrixXd Px = axis_penalty(spec.x_knots(), p);
  const MatrixXd Py = axis_penalty(spec.y_knots(), q);
  return Eigen::kroneckerProduct(Py, Px);
}

SwReport validate_sw(const TensorBasisSpec& spec, const VectorXd& x, const VectorXd& y) {
  SwReport r;
  r.x_empty = empty_supports(spec.x_knots(), x);
  r.y_empty = empty_supports(spec.y_knots(), y);
  r.x_pass = r.x_empty.empty();
  r.y_pass = r.y_empty.empty();
  return r;
}

struct SmoothingProblem::Solve {
  VectorXd w;
  Eigen::LDLT<MatrixXd> ldlt;
  bool jittered = false;
};

SmoothingProblem::SmoothingProblem(TensorBasisSpec spec, VectorXd x, VectorXd y, MatrixXd F,
                                   int p, int q, bool marginal_penalty)
    : spec_(std::move(spec)), x_(std::move(x)), y_(std::move(y)), F_(std::move(F)), p_(p),
      q_(q) {
  spec_.validate();
  PenaltyConfig{p_, q_, 1.0, marginal_penalty}.validate(spec_);
  if (F_.rows() != x_.size() || F_.cols() != y_.size()) {
    std::ostringstream os;
    os << "data matrix is " << F_.rows() << "x" << F_.cols() << " but there are " << x_.size()
       << " x and " << y_.size() << " y abscissae";
    throw InputError(os.str());
  }
  if (!F_.allFinite()) throw InputError("data matrix contains non-finite values");

  const long mn = static_cast<long>(x_.size()) * static_cast<long>(y_.size());
  if (mn <= spec_.dimension()) {
    std::ostringstream os;
    os << "smoothing condition violated: m*n = " << mn
       << " must exceed the spline space dimension " << spec_.dimension();
    throw SmoothingConditionError(os.str());
  }

  design_ = assemble_design(spec_, x_, y_);

  const SwReport sw = validate_sw(spec_, x_, y_);
  if (!sw.x_pass)
    throw RankDeficiencyError("Schoenberg-Whitney condition fails on the x axis: " + sw.describe(),
                              "x");
  if (!sw.y_pass)
    throw RankDeficiencyError("Schoenberg-Whitney condition fails on the y axis: " + sw.describe(),
                              "y");

  const ExtendedKnotsd tx = spec_.x_knots(), ty = spec_.y_knots();
  if (column_rank(eval_zb_basis(tx, x_)) < spec_.x.num_zb())
    throw RankDeficiencyError("ZB collocation matrix on the x axis is rank deficient", "x");
  if (column_rank(eval_zb_basis(ty, y_)) < spec_.y.num_zb())
    throw RankDeficiencyError("ZB collocation matrix on the y axis is rank deficient", "y");

  f_ = F_.reshaped();
  X_ = design_.full();
  XtX_ = X_.transpose() * X_;
  Xtf_ = X_.transpose() * f_;

  const int gx = spec_.x.num_zb(), hy = spec_.y.num_zb(), ni = gx * hy;
  P_ = MatrixXd::Zero(X_.cols(), X_.cols());
  P_.topLeftCorner(ni, ni) = assemble_penalty(spec_, p_, q_);
  if (marginal_penalty) {
    P_.block(ni, ni, gx, gx) = (spec_.y.hi - spec_.y.lo) * axis_penalty(tx, p_);
    P_.block(ni + gx, ni + gx, hy, hy) = (spec_.x.hi - spec_.x.lo) * axis_penalty(ty, q_);
  }
}

SmoothingProblem::Solve SmoothingProblem::solve(double rho) const {
  if (!(rho > 0) || !std::isfinite(rho)) throw InputError("smoothing parameter rho must be > 0");
  MatrixXd G = XtX_ + rho * P_;
  Solve s;
  auto factor_ok = [](const Eigen::LDLT<MatrixXd>& f) {
    return f.info() == Eigen::Success && f.isPositive() && f.vectorD().minCoeff() > 0 &&
           f.rcond() >= 1e-12;
  };
  s.ldlt.compute(G);
  if (!factor_ok(s.ldlt)) {
    const double jitter = 1e-10 * G.trace() / static_cast<double>(G.rows());
    G.diagonal().array() += jitter;
    s.ldlt.compute(G);
    s.jittered = true;
    if (s.ldlt.info() != Eigen::Success || !s.ldlt.isPositive() ||
        s.ldlt.vectorD().minCoeff() <= 0) {
      // Full column rank of both axes was checked at construction, so this is
      // a numerical failure of the coupled system.
      const std::string axis =
          column_rank(design_.Zx) < spec_.x.num_zb()   ? "x"
          : column_rank(design_.Zy) < spec_.y.num_zb() ? "y"
                                                       : "xy";
      throw RankDeficiencyError("system matrix G(rho) is not positive definite (axis " + axis + ")",
                                axis);
    }
  }
  s.w = s.ldlt.solve(Xtf_);
  return s;
}

FitResult SmoothingProblem::fit(double rho) const {
  const Solve s = solve(rho);
  FitResult r;
  r.rho = rho;
  r.jittered = s.jittered;
  r.coeffs = ZBCoeffs::from_stacked(s.w, spec_.x.num_zb(), spec_.y.num_zb());
  const VectorXd fitted = X_ * s.w;
  r.fitted = fitted.reshaped(F_.rows(), F_.cols());
  r.rss = (f_ - fitted).squaredNorm();
  r.n_obs = n_obs();
  r.hat_trace = s.ldlt.solve(XtX_).trace();
  const double nm = static_cast<double>(r.n_obs);
  const double denom = 1.0 - r.hat_trace / nm;
  r.gcv = (r.rss / nm) / (denom * denom);
  const MatrixXd G = XtX_ + rho * P_;
  const double gnorm = Xtf_.norm();
  r.normal_residual = gnorm > 0 ? (G * s.w - Xtf_).norm() / gnorm : (G * s.w).norm();
  return r;
}

GcvPoint SmoothingProblem::gcv(double rho) const {
  const FitResult r = fit(rho);
  return {rho, r.gcv, r.hat_trace, r.rss, true};
}

GcvScan SmoothingProblem::gcv_scan(const std::vector<double>& rho_grid, bool parallel) const {
  if (rho_grid.empty()) throw InputError("rho grid is empty");
  for (double rho : rho_grid)
    if (!(rho > 0) || !std::isfinite(rho)) throw InputError("rho grid values must be positive");
  auto eval = [this](double rho) {
    try {
      return gcv(rho);
    } catch (const RankDeficiencyError&) {
      return GcvPoint{rho, std::numeric_limits<double>::quiet_NaN(), 0, 0, false};
    }
  };
  std::vector<GcvPoint> curve(rho_grid.size());
  if (parallel) {
    std::vector<std::future<GcvPoint>> jobs;
    for (double rho : rho_grid) jobs.push_back(std::async(std::launch::async, eval, rho));
    for (std::size_t i = 0; i < jobs.size(); ++i) curve[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < rho_grid.size(); ++i) curve[i] = eval(rho_grid[i]);
  }
  return select_rho(std::move(curve));
}

MatrixXd SmoothingProblem::hat_matrix(double rho) const {
  if (n_obs() > 4096) throw InputError("hat matrix is only materialized for m*n <= 4096");
  const Solve s = solve(rho);
  return X_ * s.ldlt.solve(X_.transpose());
}

double SmoothingProblem::objective(const ZBCoeffs& c, double rho) const {
  const VectorXd w = c.stacked();
  return (f_ - X_ * w).squaredNorm() + rho * w.dot(P_ * w);
}

double SmoothingProblem::penalty(const ZBCoeffs& c) const {
  const VectorXd w = c.stacked();
  return w.dot(P_ * w);
}

FitResult fit(const TensorBasisSpec& spec, const MatrixXd& F, const VectorXd& x,
              const VectorXd& y, const PenaltyConfig& pen) {
  pen.validate(spec);
  return SmoothingProblem(spec, x, y, F, pen.p, pen.q, pen.marginal_penalty).fit(pen.rho);
}

GcvPoint hat_and_gcv(const TensorBasisSpec& spec, const MatrixXd& F, const VectorXd& x,
                     const VectorXd& y, const PenaltyConfig& pen) {
  pen.validate(spec);
  return SmoothingProblem(spec, x, y, F, pen.p, pen.q, pen.marginal_penalty).gcv(pen.rho);
}

GcvScan gcv_scan(const TensorBasisSpec& spec, const MatrixXd& F, const VectorXd& x,
                 const VectorXd& y, int p, int q, const std::vector<double>& rho_grid) {
  return SmoothingProblem(spec, x, y, F, p, q).gcv_scan(rho_grid);
}

GcvScan select_rho(std::vector<GcvPoint> curve) {
  GcvScan out;
  out.curve = std::move(curve);
  bool found = false;
  for (const GcvPoint& pt : out.curve) {
    if (!pt.ok || !std::isfinite(pt.gcv)) continue;
    if (!found || pt.gcv < out.best_gcv || (pt.gcv == out.best_gcv && pt.rho < out.best_rho)) {
      out.best_rho = pt.rho;
      out.best_gcv = pt.gcv;
      found = true;
    }
  }
  if (!found) throw Error("GCV scan: every fit on the rho grid failed");
  return out;
}

std::vector<GcvPoint> mean_gcv_curve(const std::vector<std::vector<GcvPoint>>& curves) {
  if (curves.empty()) throw InputError("mean GCV curve needs at least one curve");
  std::vector<GcvPoint> mean = curves.front();
  for (GcvPoint& pt : mean) pt = {pt.rho, 0, 0, 0, true};
  for (const auto& c : curves) {
    if (c.size() != mean.size()) throw InputError("GCV curves use different rho grids");
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i].rho != mean[i].rho) throw InputError("GCV curves use different rho grids");
      mean[i].ok = mean[i].ok && c[i].ok;
      mean[i].gcv += c[i].gcv;
      mean[i].hat_trace += c[i].hat_trace;
      mean[i].rss += c[i].rss;
    }
  }
  const double n = static_cast<double>(curves.size());
  for (GcvPoint& pt : mean) {
    pt.gcv /= n;
    pt.hat_trace /= n;
    pt.rss /= n;
  }
  return mean;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0) || !(hi >= lo) || count < 1) throw InputError("invalid log grid");
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i)
    g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  return g;
}

std::vector<double> default_rho_grid() { return log_grid(1e-6, 1e1, 25); }

BCoeffs zb_to_b(const TensorBasisSpec& spec, const ZBCoeffs& c) {
  spec.validate();
  c.check_shape(spec);
  const MatrixXd KDx = zb_from_bspline(spec.x_knots());
  const MatrixXd KDy = zb_from_bspline(spec.y_knots());
  const Eigen::Index nx = KDx.cols(), ny = KDy.cols();
  // V = e_{h+l+1} (x) v^T, U = e_{g+k+1} (x) u^T.
  const MatrixXd V = VectorXd::Ones(ny) * c.v.transpose();
  const MatrixXd U = VectorXd::Ones(nx) * c.u.transpose();
  return {KDx.transpose() * c.Z * KDy + (V * KDx).transpose() + U * KDy};
}

MatrixXd eval_spline(const TensorBasisSpec& spec, const ZBCoeffs& c, const VectorXd& x,
                     const VectorXd& y) {
  spec.validate();
  c.check_shape(spec);
  const MatrixXd Zx = eval_zb_basis(spec.x_knots(), x);
  const MatrixXd Zy = eval_zb_basis(spec.y_knots(), y);
  MatrixXd s = Zx * c.Z * Zy.transpose();
  s.colwise() += Zx * c.v;
  s.rowwise() += (Zy * c.u).transpose();
  return s;
}

MatrixXd eval_spline(const TensorBasisSpec& spec, const BCoeffs& c, const VectorXd& x,
                     const VectorXd& y) {
  spec.validate();
  if (c.B.rows() != spec.x.num_bsplines() || c.B.cols() != spec.y.num_bsplines())
    throw InputError("B-spline coefficient matrix does not match the basis");
  return eval_bspline_basis(spec.x_knots(), x) * c.B *
         eval_bspline_basis(spec.y_knots(), y).transpose();
}

MatrixXd eval_derivative(const TensorBasisSpec& spec, const ZBCoeffs& c, int p, int q,
                         const VectorXd& x, const VectorXd& y) {
  spec.validate();
  c.check_shape(spec);
  PenaltyConfig{p, q, 1.0, false}.validate(spec);
  const ExtendedKnotsd tx = spec.x_knots(), ty = spec.y_knots();
  const MatrixXd Ax = derivative_transform(tx, p) * zb_from_bspline(tx).transpose();
  const MatrixXd Ay = derivative_transform(ty, q) * zb_from_bspline(ty).transpose();
  return eval_bspline_basis(tx.reduced(p), x) * Ax * c.Z * Ay.transpose() *
         eval_bspline_basis(ty.reduced(q), y).transpose();
}

}  // namespace zbs
