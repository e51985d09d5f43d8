#include "oracles.hpp"

#include "zbs/decomposition.hpp"
#include "zbs/smoother.hpp"

#include <doctest.h>

#include <random>

using namespace zbs;

namespace {

TensorBasisSpec section6_spec() {
  return {KnotConfigd::uniform(0, 1, 3, 2), KnotConfigd::uniform(0, 1, 3, 2)};
}

VectorXd midpoints(double lo, double hi, int m) {
  VectorXd x(m);
  for (int i = 0; i < m; ++i) x(i) = lo + (hi - lo) * (i + 0.5) / m;
  return x;
}

std::vector<TensorBasisSpec> spec_matrix(std::mt19937_64& rng) {
  std::vector<TensorBasisSpec> out;
  for (int k : {1, 2, 3})
    for (int g : {0, 1, 3}) {
      const int l = 1 + (k + g) % 3, h = (g + 2) % 4;
      out.push_back({oracle::random_config(rng, -0.4, 1.3, g, k),
                     oracle::random_config(rng, 1.0, 2.5, h, l)});
    }
  return out;
}

// Smooth, non-polynomial clr-like data on a grid.
MatrixXd wavy(const VectorXd& x, const VectorXd& y) {
  MatrixXd F(x.size(), y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = 0; j < y.size(); ++j)
      F(i, j) = std::sin(3 * x(i)) * std::cos(2 * y(j)) + x(i) * x(i) - 0.5 * y(j);
  F.array() -= F.mean();
  return F;
}

}  // namespace

TEST_CASE("design shapes and Kronecker layout on the default simulation space") {
  const TensorBasisSpec s = section6_spec();
  const VectorXd x = midpoints(0, 1, 10), y = midpoints(0, 1, 10);
  const Design d = assemble_design(s, x, y);
  CHECK(d.Z.rows() == 100);
  CHECK(d.Z.cols() == 25);
  CHECK(d.Zx.rows() == 100);
  CHECK(d.Zx.cols() == 5);
  CHECK(d.Zy.rows() == 100);
  CHECK(d.Zy.cols() == 5);
  CHECK(s.dimension() == 35);

  std::mt19937_64 rng(1);
  const ZBCoeffs c = oracle::random_coeffs(rng, s);
  const MatrixXd Bx = eval_zb_basis(s.x_knots(), x), By = eval_zb_basis(s.y_knots(), y);
  const VectorXd zc = d.Z * c.Z.reshaped();
  double worst = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      worst = std::max(worst, std::abs(zc(i + 10 * j) - (Bx.row(i) * c.Z * By.row(j).transpose())(0)));
  CHECK(worst < 1e-13);
  CHECK(Eigen::ColPivHouseholderQR<MatrixXd>(d.full()).rank() == 35);
}

TEST_CASE("penalty is PSD and vanishes on low-degree interactive parts") {
  std::mt19937_64 rng(2);
  for (const TensorBasisSpec& s : spec_matrix(rng))
    for (int p = 0; p < s.x.degree; ++p)
      for (int q = 0; q < s.y.degree; ++q) {
        const MatrixXd N = assemble_penalty(s, p, q);
        CHECK(N.rows() == s.interactive_dimension());
        CHECK((N - N.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * N.cwiseAbs().maxCoeff());
        const double emin = Eigen::SelfAdjointEigenSolver<MatrixXd>(N).eigenvalues().minCoeff();
        CHECK(emin >= -1e-10 * std::max(1.0, N.cwiseAbs().maxCoeff()));
      }

  // a(x) b(y) with a linear and centred, p = 2: second x-derivative is zero.
  const TensorBasisSpec s{KnotConfigd{0, 1, {0.3, 0.55, 0.8}, 3}, KnotConfigd::uniform(0, 2, 2, 2)};
  const ExtendedKnotsd tx = s.x_knots();
  const VectorXd xs = VectorXd::LinSpaced(40, 0, 1);
  const VectorXd a = eval_zb_basis(tx, xs).colPivHouseholderQr().solve((xs.array() - 0.5).matrix());
  CHECK((eval_zb_basis(tx, xs) * a - (xs.array() - 0.5).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  std::normal_distribution<double> nd(0, 1);
  VectorXd b(s.y.num_zb());
  for (double& v : b) v = nd(rng);
  const MatrixXd Z = a * b.transpose();
  const double form = Z.reshaped().dot(assemble_penalty(s, 2, 1) * Z.reshaped());
  CHECK(std::abs(form) < 1e-10 * assemble_penalty(s, 2, 1).norm());
}

TEST_CASE("penalty quadratic form equals the integral of the squared mixed derivative") {
  std::mt19937_64 rng(4);
  const std::vector<std::pair<TensorBasisSpec, std::pair<int, int>>> cases = {
      {section6_spec(), {1, 1}},
      {{oracle::random_config(rng, 0, 2, 2, 3), oracle::random_config(rng, -1, 1, 3, 3)}, {2, 2}},
      {{oracle::random_config(rng, 0, 2, 1, 3), oracle::random_config(rng, -1, 1, 2, 2)}, {2, 1}},
      {{oracle::random_config(rng, 0, 1, 4, 2), oracle::random_config(rng, 0, 1, 0, 1)}, {1, 0}},
  };
  for (const auto& [s, pq] : cases) {
    const auto [p, q] = pq;
    const ExtendedKnotsd tx = s.x_knots(), ty = s.y_knots();
    const std::vector<double> bx = oracle::breakpoints(s.x), by = oracle::breakpoints(s.y);
    const MatrixXd N = assemble_penalty(s, p, q);
    for (int rep = 0; rep < 2; ++rep) {
      const ZBCoeffs c = oracle::random_coeffs(rng, s);
      const double form = c.Z.reshaped().dot(N * c.Z.reshaped());
      const double ref = oracle::integrate2(
          [&](double x, double y) {
            const double d = (oracle::zb_derivative_fd(tx, bx, p, x) * c.Z *
                              oracle::zb_derivative_fd(ty, by, q, y).transpose())(0);
            return d * d;
          },
          bx, by);
      CHECK(std::abs(form - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST_CASE("zero data gives the zero fit") {
  const TensorBasisSpec s = section6_spec();
  const FitResult r = fit(s, MatrixXd::Zero(10, 10), midpoints(0, 1, 10), midpoints(0, 1, 10),
                          PenaltyConfig{1, 1, 1e-3});
  CHECK(r.coeffs.Z.cwiseAbs().maxCoeff() == 0);
  CHECK(r.coeffs.v.cwiseAbs().maxCoeff() == 0);
  CHECK(r.coeffs.u.cwiseAbs().maxCoeff() == 0);
  CHECK(r.rss == 0);
  CHECK(r.n_obs == 100);
}

TEST_CASE("noiseless data is recovered at negligible penalty") {
  std::mt19937_64 rng(6);
  for (const TensorBasisSpec& s : spec_matrix(rng)) {
    const int dim = s.dimension();
    const int m = static_cast<int>(std::ceil(std::sqrt(4.0 * dim))) + 1;
    const VectorXd x = midpoints(s.x.lo, s.x.hi, m), y = midpoints(s.y.lo, s.y.hi, m + 1);
    REQUIRE(static_cast<long>(m) * (m + 1) >= 4L * dim);
    const ZBCoeffs truth = oracle::random_coeffs(rng, s);
    const MatrixXd F = eval_spline(s, truth, x, y);
    const FitResult r = fit(s, F, x, y, PenaltyConfig{std::min(1, s.x.degree - 1), 0, 1e-12});
    CHECK((r.coeffs.stacked() - truth.stacked()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(r.normal_residual < 1e-10);
  }
}

TEST_CASE("solution minimizes the penalized objective") {
  const TensorBasisSpec s = section6_spec();
  const VectorXd x = midpoints(0, 1, 10), y = midpoints(0, 1, 10);
  const SmoothingProblem prob(s, x, y, wavy(x, y), 1, 1);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0, 0.05);
  for (double rho : {1e-5, 1e-3, 1e-1}) {
    const FitResult r = prob.fit(rho);
    CHECK(r.normal_residual < 1e-10);
    const double j0 = prob.objective(r.coeffs, rho);
    const VectorXd w = r.coeffs.stacked();
    for (int t = 0; t < 20; ++t) {
      VectorXd d(w.size());
      for (double& v : d) v = nd(rng);
      CHECK(j0 <= prob.objective(ZBCoeffs::from_stacked(w + d, 5, 5), rho));
    }
  }
}

TEST_CASE("penalty decreases, rss and trace move monotonically along rho") {
  std::mt19937_64 rng(9);
  for (const TensorBasisSpec& s : {section6_spec(), spec_matrix(rng)[4]}) {
    const VectorXd x = midpoints(s.x.lo, s.x.hi, 14), y = midpoints(s.y.lo, s.y.hi, 12);
    const SmoothingProblem prob(s, x, y, wavy(x, y), std::min(1, s.x.degree - 1),
                                std::min(1, s.y.degree - 1));
    double last_pen = INFINITY, last_rss = -1, last_tr = INFINITY;
    for (double rho : log_grid(1e-6, 1e1, 25)) {
      const FitResult r = prob.fit(rho);
      const double pen = prob.penalty(r.coeffs);
      CHECK(pen <= last_pen * (1 + 1e-9) + 1e-14);
      CHECK(r.rss >= last_rss * (1 - 1e-9) - 1e-14);
      CHECK(r.hat_trace <= last_tr + 1e-9);
      last_pen = pen;
      last_rss = r.rss;
      last_tr = r.hat_trace;
    }
    CHECK(prob.fit(1e6).coeffs.Z.cwiseAbs().maxCoeff() < prob.fit(1e-6).coeffs.Z.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("GCV formula, hat matrix trace and fitted values agree") {
  const TensorBasisSpec s = section6_spec();
  const VectorXd x = midpoints(0, 1, 10), y = midpoints(0, 1, 12);
  const MatrixXd F = wavy(x, y);
  const SmoothingProblem prob(s, x, y, F, 1, 1);
  for (double rho : {1e-4, 1e-2, 1.0}) {
    const FitResult r = prob.fit(rho);
    const double nm = 120;
    CHECK(r.gcv == doctest::Approx((r.rss / nm) / std::pow(1 - r.hat_trace / nm, 2)).epsilon(1e-12));
    const MatrixXd H = prob.hat_matrix(rho);
    CHECK(H.trace() == doctest::Approx(r.hat_trace).epsilon(1e-10));
    CHECK((H * F.reshaped() - r.fitted.reshaped()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(r.rss == doctest::Approx((F - r.fitted).squaredNorm()).epsilon(1e-10));
    const GcvPoint g = hat_and_gcv(s, F, x, y, PenaltyConfig{1, 1, rho});
    CHECK(g.gcv == doctest::Approx(r.gcv).epsilon(1e-12));
  }
}

TEST_CASE("GCV scan: single element, ties, parallel and mean curves") {
  const TensorBasisSpec s = section6_spec();
  const VectorXd x = midpoints(0, 1, 10), y = midpoints(0, 1, 10);
  const SmoothingProblem prob(s, x, y, wavy(x, y), 1, 1);
  CHECK(prob.gcv_scan({0.02}).best_rho == 0.02);

  const std::vector<double> grid = log_grid(1e-6, 1e1, 25);
  const GcvScan serial = prob.gcv_scan(grid, false), par = prob.gcv_scan(grid, true);
  CHECK(serial.best_rho == par.best_rho);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(serial.curve[i].gcv == par.curve[i].gcv);
  CHECK(gcv_scan(s, wavy(x, y), x, y, 1, 1, grid).best_rho == serial.best_rho);

  const GcvScan tie = select_rho({{1e-2, 3.0}, {1e-3, 1.0}, {1e-4, 1.0}, {1e-5, 2.0}});
  CHECK(tie.best_rho == 1e-4);
  CHECK(select_rho({{1e-3, 1.0, 0, 0, false}, {1e-2, 5.0}}).best_rho == 1e-2);
  CHECK_THROWS_AS(select_rho({{1e-3, 1.0, 0, 0, false}}), Error);

  const auto mean = mean_gcv_curve({{{1, 2}, {2, 4}}, {{1, 4}, {2, 0}}});
  CHECK(mean[0].gcv == 3);
  CHECK(mean[1].gcv == 2);
  CHECK_THROWS_AS(mean_gcv_curve({{{1, 2}}, {{2, 2}}}), InputError);

  const std::vector<double> lg = log_grid(1e-5, 1e-1, 9);
  CHECK(lg.size() == 9);
  CHECK(lg[4] == doctest::Approx(1e-3));
  CHECK(default_rho_grid().size() == 25);
}

TEST_CASE("Schoenberg-Whitney diagnostics and errors") {
  const TensorBasisSpec s = section6_spec();
  CHECK(validate_sw(s, midpoints(0, 1, 10), midpoints(0, 1, 10)).pass());

  const VectorXd clustered = VectorXd::LinSpaced(12, 0.01, 0.2);
  const SwReport bad = validate_sw(s, clustered, midpoints(0, 1, 10));
  CHECK_FALSE(bad.x_pass);
  CHECK(bad.y_pass);
  CHECK_FALSE(bad.x_empty.empty());
  CHECK(bad.describe().find("x") != std::string::npos);
  try {
    SmoothingProblem(s, clustered, midpoints(0, 1, 10), MatrixXd::Zero(12, 10), 1, 1);
    FAIL("expected a rank deficiency error");
  } catch (const RankDeficiencyError& e) {
    CHECK(e.axis() == "x");
  }

  const TensorBasisSpec one{KnotConfigd{0, 1, {}, 1}, KnotConfigd{0, 1, {}, 1}};
  CHECK(validate_sw(one, VectorXd::Constant(1, 0.7), VectorXd::Constant(1, 0.2)).pass());

  CHECK_THROWS_AS(fit(s, MatrixXd::Zero(5, 7), midpoints(0, 1, 5), midpoints(0, 1, 7),
                      PenaltyConfig{1, 1, 1e-3}),
                  SmoothingConditionError);
  CHECK_THROWS_AS(fit(s, MatrixXd::Zero(10, 10), midpoints(0, 1, 10), midpoints(0, 1, 10),
                      PenaltyConfig{2, 1, 1e-3}),
                  InputError);
  CHECK_THROWS_AS(fit(s, MatrixXd::Zero(10, 10), midpoints(0, 1, 10), midpoints(0, 1, 10),
                      PenaltyConfig{1, 1, 0.0}),
                  InputError);
  CHECK_THROWS_AS(fit(s, MatrixXd::Zero(10, 9), midpoints(0, 1, 10), midpoints(0, 1, 10),
                      PenaltyConfig{1, 1, 1e-3}),
                  InputError);
}

TEST_CASE("smoothing condition rejects m n equal to the dimension") {
  const TensorBasisSpec s{KnotConfigd::uniform(0, 1, 1, 1), KnotConfigd::uniform(0, 1, 1, 1)};
  REQUIRE(s.dimension() == 8);
  CHECK_THROWS_AS(SmoothingProblem(s, midpoints(0, 1, 2), midpoints(0, 1, 4), MatrixXd::Zero(2, 4), 0, 0),
                  SmoothingConditionError);
  CHECK_NOTHROW(SmoothingProblem(s, midpoints(0, 1, 3), midpoints(0, 1, 3), MatrixXd::Zero(3, 3), 0, 0));
}

TEST_CASE("packed and stacked coefficient layouts") {
  std::mt19937_64 rng(10);
  const TensorBasisSpec s{KnotConfigd::uniform(0, 1, 2, 2), KnotConfigd::uniform(0, 1, 1, 3)};
  const ZBCoeffs c = oracle::random_coeffs(rng, s);
  const MatrixXd R = c.packed();
  CHECK(R.rows() == 5);
  CHECK(R.cols() == 5);
  CHECK(R(4, 4) == 0.0);
  const ZBCoeffs back = ZBCoeffs::from_packed(R);
  CHECK(back.Z == c.Z);
  CHECK(back.v == c.v);
  CHECK(back.u == c.u);
  MatrixXd bad = R;
  bad(4, 4) = 1e-300;
  CHECK_THROWS_AS(ZBCoeffs::from_packed(bad), InputError);
  const ZBCoeffs st = ZBCoeffs::from_stacked(c.stacked(), 4, 4);
  CHECK(st.Z == c.Z);
  CHECK_THROWS_AS(ZBCoeffs::zeros(s).check_shape(section6_spec()), InputError);
}

TEST_CASE("ZB and B forms evaluate identically") {
  std::mt19937_64 rng(12);
  for (const TensorBasisSpec& s : spec_matrix(rng)) {
    CHECK(zb_to_b(s, ZBCoeffs::zeros(s)).B.cwiseAbs().maxCoeff() == 0);
    std::uniform_real_distribution<double> ux(s.x.lo, s.x.hi), uy(s.y.lo, s.y.hi);
    VectorXd x(40), y(25);
    for (double& v : x) v = ux(rng);
    for (double& v : y) v = uy(rng);
    for (int rep = 0; rep < 5; ++rep) {
      const ZBCoeffs c = oracle::random_coeffs(rng, s);
      const BCoeffs b = zb_to_b(s, c);
      CHECK(b.B.rows() == s.x.num_bsplines());
      CHECK(b.B.cols() == s.y.num_bsplines());
      CHECK((eval_spline(s, c, x, y) - eval_spline(s, b, x, y)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("pointwise evaluation matches the definition") {
  std::mt19937_64 rng(13);
  const TensorBasisSpec s{oracle::random_config(rng, 0, 1, 2, 2), oracle::random_config(rng, 2, 3, 1, 3)};
  const ZBCoeffs c = oracle::random_coeffs(rng, s);
  const std::vector<double> rx = oracle::raw_knots(s.x, 2), ry = oracle::raw_knots(s.y, 3);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const double x = u(rng), y = 2 + u(rng);
    double ref = 0;
    for (int i = 0; i < s.x.num_zb(); ++i) {
      const double zx = oracle::zb_value(rx, 2, i, x);
      ref += c.v(i) * zx;
      for (int j = 0; j < s.y.num_zb(); ++j) ref += c.Z(i, j) * zx * oracle::zb_value(ry, 3, j, y);
    }
    for (int j = 0; j < s.y.num_zb(); ++j) ref += c.u(j) * oracle::zb_value(ry, 3, j, y);
    worst = std::max(worst, std::abs(ref - eval_spline(s, c, VectorXd::Constant(1, x), VectorXd::Constant(1, y))(0, 0)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("v-only coefficients give an x-only spline and constant B columns") {
  const TensorBasisSpec s = section6_spec();
  ZBCoeffs c = ZBCoeffs::zeros(s);
  c.v.setOnes();
  const BCoeffs b = zb_to_b(s, c);
  for (Eigen::Index j = 1; j < b.B.cols(); ++j) CHECK((b.B.col(j) - b.B.col(0)).cwiseAbs().maxCoeff() < 1e-14);
  const MatrixXd S = eval_spline(s, c, midpoints(0, 1, 7), midpoints(0, 1, 9));
  for (Eigen::Index j = 1; j < S.cols(); ++j) CHECK((S.col(j) - S.col(0)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(eval_spline(s, ZBCoeffs::zeros(s), midpoints(0, 1, 3), midpoints(0, 1, 3)).cwiseAbs().maxCoeff() == 0);
  CHECK_THROWS_AS(eval_spline(s, c, VectorXd::Constant(1, 1.5), VectorXd::Constant(1, 0.5)), InputError);
}

TEST_CASE("fitted surfaces integrate to zero") {
  std::mt19937_64 rng(14);
  for (const TensorBasisSpec& s : spec_matrix(rng)) {
    const VectorXd x = midpoints(s.x.lo, s.x.hi, 15), y = midpoints(s.y.lo, s.y.hi, 13);
    MatrixXd F = wavy(x, y);
    F.array() += 3.0;
    const FitResult r = fit(s, F, x, y, PenaltyConfig{0, 0, 1e-3});
    CHECK(std::abs(integrate_spline(s, r.coeffs)) < 1e-9);
    const double ref = oracle::integrate2(
        [&](double a, double b) {
          return eval_spline(s, r.coeffs, VectorXd::Constant(1, a), VectorXd::Constant(1, b))(0, 0);
        },
        oracle::breakpoints(s.x), oracle::breakpoints(s.y));
    CHECK(std::abs(ref) < 1e-9);
  }
}

TEST_CASE("mixed derivatives: special cases and finite differences") {
  std::mt19937_64 rng(15);
  const TensorBasisSpec s3{oracle::random_config(rng, 0, 1, 3, 3), oracle::random_config(rng, -1, 2, 2, 3)};
  const ZBCoeffs c = oracle::random_coeffs(rng, s3);
  const VectorXd x = midpoints(0, 1, 9), y = midpoints(-1, 2, 8);
  ZBCoeffs only_int = c;
  only_int.v.setZero();
  only_int.u.setZero();
  CHECK((eval_derivative(s3, c, 0, 0, x, y) - eval_spline(s3, only_int, x, y)).cwiseAbs().maxCoeff() < 1e-12);

  ZBCoeffs only_u = ZBCoeffs::zeros(s3);
  only_u.u = c.u;
  CHECK(eval_derivative(s3, only_u, 1, 0, x, y).cwiseAbs().maxCoeff() == 0);
  CHECK_THROWS_AS(eval_derivative(s3, c, 3, 1, x, y), InputError);

  const std::vector<double> bx = oracle::breakpoints(s3.x), by = oracle::breakpoints(s3.y);
  auto s_at = [&](double a, double b) {
    return eval_spline(s3, c, VectorXd::Constant(1, a), VectorXd::Constant(1, b))(0, 0);
  };
  std::uniform_real_distribution<double> ux(0, 1), uy(-1, 2);
  for (int order : {1, 2}) {
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
      const double a = ux(rng), b = uy(rng);
      const double hx = oracle::span_step(bx, a), hy = oracle::span_step(by, b);
      if (hx < 1e-4 || hy < 1e-4) continue;
      auto dy = [&](double xa) {
        auto f = [&](double yb) { return s_at(xa, yb); };
        return order == 1 ? oracle::diff5(f, b, hy) : oracle::diff5_2(f, b, hy);
      };
      const double fd = order == 1 ? oracle::diff5(dy, a, hx) : oracle::diff5_2(dy, a, hx);
      const double ex = eval_derivative(s3, c, order, order, VectorXd::Constant(1, a), VectorXd::Constant(1, b))(0, 0);
      worst = std::max(worst, std::abs(fd - ex) / std::max(1.0, std::abs(ex)));
    }
    CHECK(worst < 1e-5);
  }
}
