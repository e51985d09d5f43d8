#include "commands.hpp"

#include "zbs/clr.hpp"
#include "zbs/config.hpp"
#include "zbs/decomposition.hpp"
#include "zbs/io.hpp"
#include "zbs/simulate.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace zbs;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "zbs_test_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  return {code, o.str(), e.str()};
}

nlohmann::json load_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// Beta sample written as a samples CSV.
fs::path beta_samples(const fs::path& dir, std::uint64_t seed, const std::string& name = "samples.csv") {
  const AcceptRejectResult ar = accept_reject(BetaParams{}, 3000, 4.1, seed);
  const fs::path p = dir / name;
  write_samples(p.string(), ar.samples);
  return p;
}

}  // namespace

TEST_CASE("config document parsing") {
  const ConfigDoc d = ConfigDoc::parse(
      "# run\nseed = 7\nrho = 1e-3 # trailing\nbins = [10, 12]\nout = \"a # b\"\nparallel = true\n", "t");
  CHECK(d.get_int("seed") == 7);
  CHECK(d.get_number("rho") == 1e-3);
  CHECK(d.get_ints("bins") == std::vector<int>{10, 12});
  CHECK(d.get_string("out") == "a # b");
  CHECK(d.get_bool("parallel"));

  CHECK_THROWS_AS(ConfigDoc::parse("[section]\n", "t"), ParseError);
  CHECK_THROWS_AS(ConfigDoc::parse("seed = 1\nseed = 2\n", "t"), ParseError);
  CHECK_THROWS_AS(ConfigDoc::parse("seed\n", "t"), ParseError);
  CHECK_THROWS_AS(ConfigDoc::parse("bins = [1, 2\n", "t"), ParseError);
  try {
    ConfigDoc::parse("a = 1\nseed = x\n", "t").get_int("seed");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("run config validation") {
  RunConfig c;
  c.apply(ConfigDoc::parse("degrees = [3, 3]\npenalty = [2, 2]\nknots = [4, 4]\nneighborhood = 4\n", "t"));
  CHECK_NOTHROW(c.validate());
  CHECK(c.neighborhood == Neighborhood::Four);
  CHECK(c.spec(Domain{}).dimension() == 8 * 8 - 1);

  RunConfig bad;
  CHECK_THROWS_AS(bad.apply(ConfigDoc::parse("colour = 1\n", "t")), InputError);
  bad.p = 2;
  CHECK_THROWS_AS(bad.validate(), InputError);
  RunConfig r;
  r.rho = 0.0;
  CHECK_THROWS_AS(r.validate(), InputError);
  RunConfig g;
  g.rho_count = 0;
  CHECK_THROWS_AS(g.validate(), InputError);
  CHECK(RunConfig{}.rho_grid().size() == 25);

  RunConfig e;
  e.apply(ConfigDoc::parse("x_knots = [0.2, 0.7]\ny_knots = [0.5]\ndomain = [0, 1, 0, 1]\n", "t"));
  CHECK(e.spec(*e.domain).x.interior == std::vector<double>{0.2, 0.7});
  CHECK_THROWS_AS(RunConfig{}.apply(ConfigDoc::parse("x_knots = [0.2]\n", "t")), InputError);
}

TEST_CASE("cli: usage and input errors exit with code 2") {
  const fs::path dir = fresh_dir("errors");
  const std::string missing = (dir / "nope.csv").string();
  const Outcome a = run({"fit", "--samples", missing, "--out", (dir / "o").string()});
  CHECK(a.code == 2);
  CHECK(a.err.find(missing) != std::string::npos);

  CHECK(run({"fit", "--bogus"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"fit", "--bins", "10"}).code == 2);
  CHECK(run({"fit", "--penalty", "2,2", "--samples", missing}).code == 2);
  CHECK(run({"gcv", "--rho-grid", "1e-4,1e-2,0", "--samples", missing}).code == 2);

  write_text(dir / "bad.cfg", "[fit]\n");
  CHECK(run({"fit", "--config", (dir / "bad.cfg").string()}).code == 2);

  write_text(dir / "broken.csv", "0.1,0.2\n0.3,zz\n");
  const Outcome p = run({"fit", "--samples", (dir / "broken.csv").string(), "--out", (dir / "o").string()});
  CHECK(p.code == 2);
  CHECK(p.err.find("line 2") != std::string::npos);
}

TEST_CASE("cli: computational failures exit with code 1") {
  const fs::path dir = fresh_dir("failures");
  const fs::path s = beta_samples(dir, 3);
  const Outcome o = run({"fit", "--samples", s.string(), "--bins", "4,4", "--rho", "1e-3",
                         "--domain", "0,1,0,1", "--out", (dir / "o").string()});
  CHECK(o.code == 1);
  CHECK(o.err.find("smoothing") != std::string::npos);
}

TEST_CASE("cli: fit end to end on a seeded beta sample") {
  const fs::path dir = fresh_dir("fit");
  const fs::path s = beta_samples(dir, 11);
  const fs::path out = dir / "out";
  const Outcome o = run({"fit", "--samples", s.string(), "--bins", "10,10", "--knots", "3,3",
                         "--degrees", "2,2", "--penalty", "1,1", "--domain", "0,1,0,1", "--seed", "5",
                         "--out", out.string()});
  REQUIRE(o.code == 0);
  const auto summary = load_json(out / "fit_summary.json");
  CHECK(summary.contains("gcv"));
  CHECK(summary["rho_scanned"].get<bool>());
  CHECK(std::abs(summary["density_integral"].get<double>() - 1) < 1e-6);
  CHECK(fs::exists(out / "gcv_curve.csv"));
  CHECK(fs::exists(out / "coeffs_b.csv"));
  const auto manifest = load_json(out / "manifest.json");
  CHECK(manifest["command"] == "fit");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["config"]["bins"][0] == 10);

  const LabeledGrid dens = read_grid_csv((out / "fit_density.csv").string());
  CHECK(std::abs(trapezoid(dens.x, dens.y, dens.values) - 1) < 1e-6);

  const fs::path fixed = dir / "fixed";
  REQUIRE(run({"fit", "--samples", s.string(), "--rho", "1e-3", "--domain", "0,1,0,1", "--out",
               fixed.string()})
              .code == 0);
  const auto fs2 = load_json(fixed / "fit_summary.json");
  CHECK_FALSE(fs2["rho_scanned"].get<bool>());
  CHECK(fs2["rho"].get<double>() == 1e-3);
  CHECK_FALSE(fs::exists(fixed / "gcv_curve.csv"));

  const fs::path hist = dir / "from_hist";
  REQUIRE(run({"fit", "--histogram", (out / "histogram.csv").string(), "--rho", "1e-3", "--out",
               hist.string()})
              .code == 0);
  const CoeffFile a = read_zb_coeffs((fixed / "coeffs_zb.csv").string());
  const CoeffFile b = read_zb_coeffs((hist / "coeffs_zb.csv").string());
  CHECK(a.spec == b.spec);
  CHECK((a.coeffs.Z - b.coeffs.Z).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("cli: decompose from a coefficient file") {
  const fs::path dir = fresh_dir("decompose");
  const TensorBasisSpec spec{KnotConfigd::uniform(0, 1, 3, 2), KnotConfigd::uniform(0, 1, 3, 2)};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0, 1);
  ZBCoeffs c = ZBCoeffs::zeros(spec);
  for (double& v : c.v) v = nd(rng);
  for (double& v : c.u) v = nd(rng);
  write_zb_coeffs((dir / "indep.csv").string(), spec, c);
  REQUIRE(run({"decompose", "--coeffs", (dir / "indep.csv").string(), "--out", (dir / "a").string()}).code == 0);
  CHECK(load_json(dir / "a" / "decomposition.json")["dependence_ratio"].get<double>() == 0);

  for (double& v : c.Z.reshaped()) v = nd(rng);
  write_zb_coeffs((dir / "full.csv").string(), spec, c);
  REQUIRE(run({"decompose", "--coeffs", (dir / "full.csv").string(), "--out", (dir / "b").string()}).code == 0);
  const auto j = load_json(dir / "b" / "decomposition.json");
  const PartNorms n = part_norms(spec, c);
  CHECK(j["norm_interactive"].get<double>() == doctest::Approx(n.interactive).epsilon(1e-14));
  CHECK(j["norm_independent"].get<double>() == doctest::Approx(n.independent).epsilon(1e-14));
  CHECK(j["norm_total"].get<double>() == doctest::Approx(n.total).epsilon(1e-14));
  for (const char* f : {"interactive_Z.csv", "marginal_v.csv", "marginal_u.csv", "interactive_clr.csv",
                        "interactive_density.csv", "independent_clr.csv", "independent_density.csv"})
    CHECK(fs::exists(dir / "b" / f));
}

TEST_CASE("cli: gcv over several datasets reports the mean-curve argmin") {
  const fs::path dir = fresh_dir("gcv");
  std::vector<std::string> args = {"gcv", "--rho-grid", "1e-5,1e-1,9", "--domain", "0,1,0,1",
                                   "--out", (dir / "o").string()};
  for (int i = 0; i < 3; ++i) args.push_back(beta_samples(dir, 100 + i, "s" + std::to_string(i) + ".csv").string());
  REQUIRE(run(args).code == 0);
  const auto j = load_json(dir / "o" / "gcv.json");
  CHECK(j["datasets"].size() == 3);
  const std::vector<CsvRow> rows = read_csv((dir / "o" / "gcv_curves.csv").string());
  REQUIRE(rows.size() == 10);
  double best = INFINITY, best_rho = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double g0 = parse_number(rows[r].cells[1], 0, 0), g1 = parse_number(rows[r].cells[2], 0, 0),
                 g2 = parse_number(rows[r].cells[3], 0, 0), m = parse_number(rows[r].cells[4], 0, 0);
    CHECK(m == doctest::Approx((g0 + g1 + g2) / 3).epsilon(1e-12));
    if (m < best) {
      best = m;
      best_rho = parse_number(rows[r].cells[0], 0, 0);
    }
  }
  CHECK(j["mean_best_rho"].get<double>() == best_rho);
}

TEST_CASE("cli: simulate writes samples, histogram and sweeps") {
  const fs::path dir = fresh_dir("simulate");
  write_text(dir / "sim.cfg", "count = 400\nreplicates = 2\nbin_sweep = [5, 6, 10]\nM = 4.1\nseed = 9\n");
  REQUIRE(run({"simulate", "--config", (dir / "sim.cfg").string(), "--out", (dir / "a").string()}).code == 0);
  REQUIRE(run({"simulate", "--config", (dir / "sim.cfg").string(), "--out", (dir / "b").string()}).code == 0);
  const auto j = load_json(dir / "a" / "simulate.json");
  CHECK(j["accepted"] == 400);
  CHECK_FALSE(j["ise_bins"][0]["feasible"].get<bool>());
  CHECK(j["ise_bins"][2]["fits"] == 2);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const char* f : {"samples.csv", "histogram.csv", "ise_bins.csv", "simulate.json"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("cli: group statistics of coefficient files") {
  const fs::path dir = fresh_dir("group");
  const TensorBasisSpec spec{KnotConfigd::uniform(0, 1, 2, 2), KnotConfigd::uniform(0, 2, 1, 3)};
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0, 1);
  auto random = [&] {
    ZBCoeffs c = ZBCoeffs::zeros(spec);
    for (double& v : c.Z.reshaped()) v = nd(rng);
    for (double& v : c.v) v = nd(rng);
    for (double& v : c.u) v = nd(rng);
    return c;
  };
  const ZBCoeffs a = random(), b = random();
  write_zb_coeffs((dir / "a.csv").string(), spec, a);
  write_zb_coeffs((dir / "b.csv").string(), spec, b);

  REQUIRE(run({"group-stats", (dir / "a.csv").string(), (dir / "a.csv").string(), "--out", (dir / "same").string()}).code == 0);
  const CoeffFile sd = read_zb_coeffs((dir / "same" / "sd_coeffs.csv").string());
  CHECK(sd.coeffs.packed().cwiseAbs().maxCoeff() == 0);

  REQUIRE(run({"group-stats", (dir / "a.csv").string(), (dir / "b.csv").string(), "--out", (dir / "two").string()}).code == 0);
  const CoeffFile mean = read_zb_coeffs((dir / "two" / "mean_coeffs.csv").string());
  CHECK((mean.coeffs.packed() - (a.packed() + b.packed()) / 2).cwiseAbs().maxCoeff() < 1e-15);
  const CoeffFile sd2 = read_zb_coeffs((dir / "two" / "sd_coeffs.csv").string());
  CHECK((sd2.coeffs.Z - ((a.Z - b.Z).cwiseAbs() / std::sqrt(2.0))).cwiseAbs().maxCoeff() < 1e-14);

  const LabeledGrid mg = read_grid_csv((dir / "two" / "mean_clr.csv").string());
  const MatrixXd ga = eval_spline(spec, a, mg.x, mg.y), gb = eval_spline(spec, b, mg.x, mg.y);
  CHECK((mg.values - (ga + gb) / 2).cwiseAbs().maxCoeff() < 1e-12);

  const TensorBasisSpec other{KnotConfigd::uniform(0, 1, 3, 2), KnotConfigd::uniform(0, 2, 1, 3)};
  write_zb_coeffs((dir / "c.csv").string(), other, ZBCoeffs::zeros(other));
  CHECK(run({"group-stats", (dir / "a.csv").string(), (dir / "c.csv").string(), "--out", (dir / "bad").string()}).code == 2);
}

TEST_CASE("coefficient files round trip") {
  const fs::path dir = fresh_dir("coeffs");
  const TensorBasisSpec spec{KnotConfigd{0.1, 2.3, {0.4, 1.7}, 3}, KnotConfigd{-1, 1, {1.0 / 3}, 2}};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0, 1);
  ZBCoeffs c = ZBCoeffs::zeros(spec);
  for (double& v : c.Z.reshaped()) v = nd(rng);
  for (double& v : c.v) v = nd(rng);
  for (double& v : c.u) v = nd(rng);
  write_zb_coeffs((dir / "c.csv").string(), spec, c);
  const CoeffFile back = read_zb_coeffs((dir / "c.csv").string());
  CHECK(back.spec == spec);
  CHECK(back.coeffs.Z == c.Z);
  CHECK(back.coeffs.v == c.v);
  CHECK(back.coeffs.u == c.u);
}
