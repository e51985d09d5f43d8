#include "zbs/simulate.hpp"

#include "zbs/error.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

namespace zbs {

namespace {

double uniform01(std::mt19937_64& gen) {
  // Open interval (0, 1), 53 bits.
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

double log_beta_norm(const BetaParams& p) {
  return std::lgamma(p.alpha0) + std::lgamma(p.alpha1) + std::lgamma(p.alpha2) -
         std::lgamma(p.alpha0 + p.alpha1 + p.alpha2);
}

double density_unchecked(const BetaParams& p, double lb, double x, double y) {
  const double s = p.alpha0 + p.alpha1 + p.alpha2;
  const double l = (p.alpha1 - 1) * std::log(x) + (p.alpha0 + p.alpha2 - 1) * std::log1p(-x) +
                   (p.alpha2 - 1) * std::log(y) + (p.alpha0 + p.alpha1 - 1) * std::log1p(-y) -
                   s * std::log1p(-x * y) - lb;
  return std::exp(l);
}

VectorXd cell_centres(int n) {
  return VectorXd::LinSpaced(n, 0.5 / n, 1.0 - 0.5 / n);
}

enum class Sweep { Bins, Knots };

SweepTable run_sweep(const SweepConfig& cfg, const std::vector<int>& values, Sweep kind) {
  if (cfg.replicates < 1) throw InputError("sweep needs at least one replicate");
  if (values.empty()) throw InputError("sweep needs at least one parameter value");
  cfg.beta.validate();

  SweepTable t;
  t.params = values;
  const int P = static_cast<int>(values.size());
  for (int v : values) {
    const int m = kind == Sweep::Bins ? v : cfg.m;
    const int n = kind == Sweep::Bins ? v : cfg.n;
    const int g = kind == Sweep::Knots ? v : cfg.g;
    const int h = kind == Sweep::Knots ? v : cfg.h;
    bool ok = m >= 2 && n >= 2 && g >= 0 && h >= 0;
    if (ok) ok = m * n > cfg.spec(g, h).dimension();
    t.feasible.push_back(ok);
  }

  auto replicate = [&](int r) {
    VectorXd row = VectorXd::Constant(P, std::numeric_limits<double>::quiet_NaN());
    const SampleSet s = replicate_sample(cfg, r);
    for (int c = 0; c < P; ++c) {
      if (!t.feasible[c]) continue;
      const int v = values[c];
      const int m = kind == Sweep::Bins ? v : cfg.m;
      const int n = kind == Sweep::Bins ? v : cfg.n;
      const TensorBasisSpec spec =
          kind == Sweep::Knots ? cfg.spec(v, v) : cfg.spec(cfg.g, cfg.h);
      try {
        const ClrField f = histogram_clr(s, m, n, cfg.neighborhood);
        const SmoothingProblem prob(spec, f.x, f.y, f.values, cfg.p, cfg.q);
        row(c) = spline_ise(cfg.beta, spec, prob.fit(cfg.rho).coeffs, cfg.ise_grid);
      } catch (const Error&) {
        // NaN marks a failed fit.
      }
    }
    return row;
  };

  t.ise.resize(cfg.replicates, P);
  if (cfg.parallel) {
    std::vector<std::future<VectorXd>> jobs;
    for (int r = 0; r < cfg.replicates; ++r)
      jobs.push_back(std::async(std::launch::async, replicate, r));
    for (int r = 0; r < cfg.replicates; ++r) t.ise.row(r) = jobs[r].get().transpose();
  } else {
    for (int r = 0; r < cfg.replicates; ++r) t.ise.row(r) = replicate(r).transpose();
  }
  for (int c = 0; c < P; ++c) t.summary.push_back(quartiles(t.ise.col(c)));
  return t;
}

}  // namespace

void BetaParams::validate() const {
  if (!(alpha0 > 0) || !(alpha1 > 0) || !(alpha2 > 0) || !std::isfinite(alpha0 + alpha1 + alpha2))
    throw InputError("beta parameters must be finite and strictly positive");
}

double beta_density(const BetaParams& p, double x, double y) {
  p.validate();
  if (!(x > 0 && x < 1 && y > 0 && y < 1)) {
    std::ostringstream os;
    os << "beta density: point (" << x << ", " << y << ") lies outside (0, 1)^2";
    throw InputError(os.str());
  }
  return density_unchecked(p, log_beta_norm(p), x, y);
}

MatrixXd beta_density_grid(const BetaParams& p, const VectorXd& x, const VectorXd& y) {
  MatrixXd out(x.size(), y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j)
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i, j) = beta_density(p, x(i), y(j));
  return out;
}

double estimate_envelope(const BetaParams& p, int grid) {
  if (grid < 2) throw InputError("envelope grid needs at least 2 points per axis");
  const VectorXd c = cell_centres(grid);
  return 1.01 * beta_density_grid(p, c, c).maxCoeff();
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

AcceptRejectResult accept_reject(const BetaParams& p, int count, double M, std::uint64_t seed) {
  p.validate();
  if (count < 0) throw InputError("accept-reject: count must be non-negative");
  if (!(M > 0) || !std::isfinite(M)) throw InputError("accept-reject: M must be positive");
  const double lb = log_beta_norm(p);
  std::mt19937_64 gen(seed);
  AcceptRejectResult out;
  std::vector<double> xs, ys;
  xs.reserve(count);
  ys.reserve(count);
  while (static_cast<int>(xs.size()) < count) {
    const double x = uniform01(gen), y = uniform01(gen), u = uniform01(gen);
    ++out.proposals;
    const double ratio = density_unchecked(p, lb, x, y) / M;
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (ratio > 1) {
      std::ostringstream os;
      os.precision(17);
      os << "accept-reject: envelope M = " << M << " is below f(" << x << ", " << y
         << ") = " << ratio * M;
      throw EnvelopeError(os.str());
    }
    if (u <= ratio) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  out.samples.x = Eigen::Map<const VectorXd>(xs.data(), count);
  out.samples.y = Eigen::Map<const VectorXd>(ys.data(), count);
  out.samples.range = Domain{0, 1, 0, 1};
  out.acceptance_rate = out.proposals ? double(count) / double(out.proposals) : 0.0;
  return out;
}

TensorBasisSpec SweepConfig::spec(int gx, int hy) const {
  return {KnotConfigd::uniform(0, 1, gx, k), KnotConfigd::uniform(0, 1, hy, l)};
}

SampleSet replicate_sample(const SweepConfig& cfg, int r) {
  return accept_reject(cfg.beta, cfg.count, cfg.M, derive_seed(cfg.seed, r)).samples;
}

ClrField histogram_clr(const SampleSet& s, int m, int n, Neighborhood nb) {
  SampleSet unit = s;
  if (!unit.range) unit.range = Domain{0, 1, 0, 1};
  const HistogramResult h = build_histogram(unit, m, n);
  return discrete_clr(impute_zeros(h.grid, nb));
}

double spline_ise(const BetaParams& beta, const TensorBasisSpec& spec, const ZBCoeffs& c,
                  int grid) {
  const VectorXd xs = cell_centres(grid);
  const DensityGrid truth{xs, xs, beta_density_grid(beta, xs, xs)};
  const DensityGrid est = inv_clr(xs, xs, eval_spline(spec, c, xs, xs));
  return ise(normalize(truth), est);
}

Quartiles quartiles(const VectorXd& values) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (std::isfinite(values(i))) v.push_back(values(i));
  Quartiles q;
  q.count = static_cast<int>(v.size());
  if (v.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    q.min = q.q1 = q.median = q.q3 = q.max = nan;
    return q;
  }
  std::sort(v.begin(), v.end());
  auto at = [&](double prob) {
    const double pos = prob * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
  };
  q.min = v.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = v.back();
  return q;
}

SweepTable run_bin_sweep(const SweepConfig& cfg, const std::vector<int>& bin_counts) {
  return run_sweep(cfg, bin_counts, Sweep::Bins);
}

SweepTable run_knot_sweep(const SweepConfig& cfg, const std::vector<int>& knot_counts) {
  return run_sweep(cfg, knot_counts, Sweep::Knots);
}

}  // namespace zbs
