#ifndef ZBS_CLR_HPP
#define ZBS_CLR_HPP

#include "zbs/bspline.hpp"

#include <utility>

namespace zbs {

// Histogram over equispaced classes; freq(i, j) belongs to (x_mid[i], y_mid[j]).
struct HistogramGrid {
  VectorXd x_mid;
  VectorXd y_mid;
  MatrixXd freq;
  double x_width = 0;
  double y_width = 0;

  int m() const { return static_cast<int>(x_mid.size()); }
  int n() const { return static_cast<int>(y_mid.size()); }
  bool all_positive() const { return (freq.array() > 0).all(); }
  // Shape, monotone equispaced midpoints and non-negative counts.
  void validate() const;
};

// Discrete clr values with zero arithmetic mean.
struct ClrField {
  VectorXd x;
  VectorXd y;
  MatrixXd values;
};

// Positive density values on a rectilinear grid, unit trapezoid integral.
struct DensityGrid {
  VectorXd x;
  VectorXd y;
  MatrixXd values;
};

struct Density1D {
  VectorXd grid;
  VectorXd values;
};

// Composite trapezoid rules.
double trapezoid(const VectorXd& x, const VectorXd& values);
double trapezoid(const VectorXd& x, const VectorXd& y, const MatrixXd& values);

// log(freq) minus the mean of the m*n logs.
ClrField discrete_clr(const HistogramGrid& h);

// exp of the values, rescaled to a unit trapezoid integral over the grid.
DensityGrid inv_clr(const VectorXd& x, const VectorXd& y, const MatrixXd& values);
inline DensityGrid inv_clr(const ClrField& c) { return inv_clr(c.x, c.y, c.values); }
Density1D inv_clr(const VectorXd& grid, const VectorXd& values);

// log of the density minus its grid mean.
ClrField clr_of_density(const DensityGrid& d);
VectorXd clr_of_density(const Density1D& d);

// f (+) g = f g and alpha (.) f = f^alpha, both renormalized.
DensityGrid perturb(const DensityGrid& f, const DensityGrid& g);
DensityGrid power(double alpha, const DensityGrid& f);

// Rescales to a unit trapezoid integral.
DensityGrid normalize(DensityGrid d);

struct GeometricMarginals {
  Density1D x;
  Density1D y;
  // max relative gap between exp-mean-log and clr-average-then-inverse routes.
  double route_gap = 0;
};

// exp of the mean log over the other variable, normalized on each axis.
GeometricMarginals geometric_marginals(const DensityGrid& d);

// Squared L2 distance of the clr transforms, trapezoid over the common grid.
double ise(const DensityGrid& f, const DensityGrid& g);

}  // namespace zbs

#endif  // ZBS_CLR_HPP
