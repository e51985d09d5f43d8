#include "zbs/clr.hpp"

#include "zbs/error.hpp"

#include <cmath>
#include <sstream>

namespace zbs {

namespace {

void require_grid(const VectorXd& x, const VectorXd& y, const MatrixXd& v, const char* what) {
  if (x.size() < 2 || y.size() < 2) {
    std::ostringstream os;
    os << what << ": grid needs at least two points per axis";
    throw InputError(os.str());
  }
  if (v.rows() != x.size() || v.cols() != y.size()) {
    std::ostringstream os;
    os << what << ": values are " << v.rows() << "x" << v.cols() << " but grid is " << x.size()
       << "x" << y.size();
    throw InputError(os.str());
  }
}

void require_positive(const MatrixXd& v, const char* what) {
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      if (!(v(i, j) > 0) || !std::isfinite(v(i, j))) {
        std::ostringstream os;
        os << what << ": non-positive value " << v(i, j) << " at (" << i << ", " << j << ")";
        throw InputError(os.str());
      }
}

void require_same_mesh(const DensityGrid& f, const DensityGrid& g, const char* what) {
  if (f.x.size() != g.x.size() || f.y.size() != g.y.size() || f.x != g.x || f.y != g.y) {
    std::ostringstream os;
    os << what << ": densities live on different meshes";
    throw InputError(os.str());
  }
}

VectorXd trapezoid_weights(const VectorXd& x) {
  const Eigen::Index n = x.size();
  VectorXd w = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double h = (x(i + 1) - x(i)) / 2;
    w(i) += h;
    w(i + 1) += h;
  }
  return w;
}

}  // namespace

void HistogramGrid::validate() const {
  if (x_mid.size() < 1 || y_mid.size() < 1) throw InputError("histogram: empty grid");
  if (freq.rows() != x_mid.size() || freq.cols() != y_mid.size())
    throw InputError("histogram: frequency matrix does not match the midpoints");
  auto check_axis = [](const VectorXd& mid, double width, const char* axis) {
    const double tol = 1e-12 * std::max(1.0, mid.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 1; i < mid.size(); ++i) {
      const double step = mid(i) - mid(i - 1);
      if (!(step > 0)) throw InputError(std::string("histogram: ") + axis + " midpoints not increasing");
      if (std::abs(step - width) > tol)
        throw InputError(std::string("histogram: ") + axis + " midpoints are not equispaced");
    }
  };
  check_axis(x_mid, x_width, "x");
  check_axis(y_mid, y_width, "y");
  if ((freq.array() < 0).any() || !freq.allFinite())
    throw InputError("histogram: frequencies must be finite and non-negative");
}

double trapezoid(const VectorXd& x, const VectorXd& values) {
  return trapezoid_weights(x).dot(values);
}

double trapezoid(const VectorXd& x, const VectorXd& y, const MatrixXd& values) {
  return trapezoid_weights(x).dot(values * trapezoid_weights(y));
}

ClrField discrete_clr(const HistogramGrid& h) {
  if (h.freq.rows() != h.x_mid.size() || h.freq.cols() != h.y_mid.size())
    throw InputError("discrete clr: frequency matrix does not match the midpoints");
  require_positive(h.freq, "discrete clr");
  MatrixXd logs = h.freq.array().log().matrix();
  logs.array() -= logs.mean();
  return {h.x_mid, h.y_mid, logs};
}

DensityGrid inv_clr(const VectorXd& x, const VectorXd& y, const MatrixXd& values) {
  require_grid(x, y, values, "inverse clr");
  if (!values.allFinite()) throw InputError("inverse clr: non-finite values");
  DensityGrid d{x, y, (values.array() - values.maxCoeff()).exp().matrix()};
  return normalize(std::move(d));
}

Density1D inv_clr(const VectorXd& grid, const VectorXd& values) {
  if (grid.size() < 2 || grid.size() != values.size())
    throw InputError("inverse clr: 1-D grid mismatch");
  VectorXd e = (values.array() - values.maxCoeff()).exp().matrix();
  e /= trapezoid(grid, e);
  return {grid, e};
}

DensityGrid normalize(DensityGrid d) {
  require_grid(d.x, d.y, d.values, "normalize");
  const double total = trapezoid(d.x, d.y, d.values);
  if (!(total > 0) || !std::isfinite(total)) throw Error("normalize: integral is not positive");
  d.values /= total;
  return d;
}

ClrField clr_of_density(const DensityGrid& d) {
  require_grid(d.x, d.y, d.values, "clr");
  require_positive(d.values, "clr");
  MatrixXd logs = d.values.array().log().matrix();
  logs.array() -= logs.mean();
  return {d.x, d.y, logs};
}

VectorXd clr_of_density(const Density1D& d) {
  require_positive(d.values, "clr");
  VectorXd logs = d.values.array().log().matrix();
  logs.array() -= logs.mean();
  return logs;
}

DensityGrid perturb(const DensityGrid& f, const DensityGrid& g) {
  require_same_mesh(f, g, "perturb");
  require_positive(f.values, "perturb");
  require_positive(g.values, "perturb");
  const MatrixXd logs = f.values.array().log() + g.values.array().log();
  return inv_clr(f.x, f.y, logs);
}

DensityGrid power(double alpha, const DensityGrid& f) {
  require_positive(f.values, "power");
  const MatrixXd logs = alpha * f.values.array().log();
  return inv_clr(f.x, f.y, logs);
}

GeometricMarginals geometric_marginals(const DensityGrid& d) {
  require_grid(d.x, d.y, d.values, "geometric marginals");
  require_positive(d.values, "geometric marginals");
  const MatrixXd logs = d.values.array().log().matrix();

  GeometricMarginals out;
  // Route 1: exp of the mean log over the other variable.
  VectorXd gx = logs.rowwise().mean().array().exp().matrix();
  VectorXd gy = logs.colwise().mean().transpose().array().exp().matrix();
  out.x = {d.x, gx / trapezoid(d.x, gx)};
  out.y = {d.y, gy / trapezoid(d.y, gy)};

  // Route 2: average the clr over the other variable, then invert.
  const ClrField c = clr_of_density(d);
  const Density1D rx = inv_clr(d.x, VectorXd(c.values.rowwise().mean()));
  const Density1D ry = inv_clr(d.y, VectorXd(c.values.colwise().mean().transpose()));
  const double gap_x = ((rx.values - out.x.values).array() / out.x.values.array()).abs().maxCoeff();
  const double gap_y = ((ry.values - out.y.values).array() / out.y.values.array()).abs().maxCoeff();
  out.route_gap = std::max(gap_x, gap_y);
  return out;
}

double ise(const DensityGrid& f, const DensityGrid& g) {
  require_same_mesh(f, g, "ise");
  const ClrField cf = clr_of_density(f), cg = clr_of_density(g);
  const MatrixXd diff = cf.values - cg.values;
  return trapezoid(f.x, f.y, diff.cwiseAbs2());
}

}  // namespace zbs
