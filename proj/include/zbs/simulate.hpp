#ifndef ZBS_SIMULATE_HPP
#define ZBS_SIMULATE_HPP

#include "zbs/ingest.hpp"
#include "zbs/smoother.hpp"

#include <cstdint>
#include <vector>

namespace zbs {

struct BetaParams {
  double alpha0 = 3;
  double alpha1 = 3;
  double alpha2 = 3;

  void validate() const;
};

// Bivariate beta density on (0, 1)^2.
double beta_density(const BetaParams& p, double x, double y);

// Density on a grid, values(i, j) = f(x_i, y_j).
MatrixXd beta_density_grid(const BetaParams& p, const VectorXd& x, const VectorXd& y);

// Maximum over the centres of a grid x grid lattice, inflated by 1%.
double estimate_envelope(const BetaParams& p, int grid = 512);

// Seed of stream `index` derived from a master seed (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct AcceptRejectResult {
  SampleSet samples;
  long long proposals = 0;
  double acceptance_rate = 0;
  // Largest f / M seen over all proposals.
  double max_ratio = 0;
};

// Uniform proposals on the unit square, accepted iff U <= f / M, until `count`
// points are accepted.
AcceptRejectResult accept_reject(const BetaParams& p, int count, double M, std::uint64_t seed);

struct SweepConfig {
  BetaParams beta;
  double M = 4.1;
  int count = 3000;
  int replicates = 20;
  std::uint64_t seed = 1;
  int k = 2, l = 2;
  int p = 1, q = 1;
  double rho = 1e-3;
  int g = 3, h = 3;
  int m = 10, n = 10;
  int ise_grid = 101;
  Neighborhood neighborhood = Neighborhood::Eight;
  bool parallel = false;

  TensorBasisSpec spec(int gx, int hy) const;
};

// Sample of replicate r, reproducible in isolation.
SampleSet replicate_sample(const SweepConfig& cfg, int r);

// Histogram on [0, 1]^2, imputed, then discrete clr.
ClrField histogram_clr(const SampleSet& s, int m, int n, Neighborhood nb = Neighborhood::Eight);

// ISE between the true density and inv_clr of a fitted spline on a cell-centred
// grid x grid lattice over [0, 1]^2.
double spline_ise(const BetaParams& beta, const TensorBasisSpec& spec, const ZBCoeffs& c,
                  int grid = 101);

struct Quartiles {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  int count = 0;
};

// Linear-interpolation quartiles of the finite entries.
Quartiles quartiles(const VectorXd& values);

struct SweepTable {
  std::vector<int> params;
  std::vector<bool> feasible;
  // replicates x params; NaN for infeasible columns and failed fits.
  MatrixXd ise;
  std::vector<Quartiles> summary;
};

// Bins m = n = each entry of bin_counts, knots fixed at cfg.g, cfg.h.
SweepTable run_bin_sweep(const SweepConfig& cfg, const std::vector<int>& bin_counts);
// Interior knots g = h = each entry of knot_counts, bins fixed at cfg.m, cfg.n.
SweepTable run_knot_sweep(const SweepConfig& cfg, const std::vector<int>& knot_counts);

}  // namespace zbs

#endif  // ZBS_SIMULATE_HPP
