#include "commands.hpp"

#include "zbs/clr.hpp"
#include "zbs/config.hpp"
#include "zbs/decomposition.hpp"
#include "zbs/error.hpp"
#include "zbs/ingest.hpp"
#include "zbs/io.hpp"
#include "zbs/simulate.hpp"
#include "zbs/smoother.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace zbs::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Flags shared by every subcommand; unset ones leave the config untouched.
struct Flags {
  std::string config;
  std::optional<long long> seed;
  std::optional<double> rho;
  std::string rho_grid, bins, knots, degrees, penalty, domain, out;
  std::string samples, histogram, coeffs;
  std::vector<std::string> inputs;
};

std::vector<double> parse_list(const std::string& s, std::size_t count, const char* flag) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!is_number(item))
      throw InputError(std::string("--") + flag + ": '" + item + "' is not a number");
    v.push_back(parse_number(item, 0, 0));
  }
  if (v.size() != count) {
    std::ostringstream os;
    os << "--" << flag << " expects " << count << " comma-separated values";
    throw InputError(os.str());
  }
  return v;
}

std::pair<int, int> parse_pair(const std::string& s, const char* flag) {
  const std::vector<double> v = parse_list(s, 2, flag);
  for (double x : v)
    if (x != std::floor(x)) throw InputError(std::string("--") + flag + " expects integers");
  return {static_cast<int>(v[0]), static_cast<int>(v[1])};
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg;
  if (!f.config.empty()) cfg.apply(ConfigDoc::load(f.config));
  if (f.seed) {
    if (*f.seed < 0) throw InputError("--seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(*f.seed);
  }
  if (f.rho) cfg.rho = *f.rho;
  if (!f.rho_grid.empty()) {
    const std::vector<double> r = parse_list(f.rho_grid, 3, "rho-grid");
    cfg.rho_lo = r[0];
    cfg.rho_hi = r[1];
    if (r[2] != std::floor(r[2])) throw InputError("--rho-grid count must be an integer");
    cfg.rho_count = static_cast<int>(r[2]);
  }
  if (!f.bins.empty()) std::tie(cfg.m, cfg.n) = parse_pair(f.bins, "bins");
  if (!f.knots.empty()) {
    std::tie(cfg.g, cfg.h) = parse_pair(f.knots, "knots");
    cfg.explicit_knots = false;
  }
  if (!f.degrees.empty()) std::tie(cfg.k, cfg.l) = parse_pair(f.degrees, "degrees");
  if (!f.penalty.empty()) std::tie(cfg.p, cfg.q) = parse_pair(f.penalty, "penalty");
  if (!f.domain.empty()) {
    const std::vector<double> d = parse_list(f.domain, 4, "domain");
    cfg.domain = Domain{d[0], d[1], d[2], d[3]};
  }
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.samples.empty()) cfg.samples = f.samples;
  if (!f.histogram.empty()) cfg.histogram = f.histogram;
  if (!f.coeffs.empty()) cfg.coeffs = f.coeffs;
  if (!f.inputs.empty()) cfg.inputs = f.inputs;
  cfg.validate();
  return cfg;
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw InputError("input file not found: " + path);
}

// Runs one pipeline stage and prefixes its errors with the stage name.
template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InputError& e) {
    throw InputError(std::string(name) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

json config_json(const RunConfig& c) {
  json j;
  if (c.domain) j["domain"] = {c.domain->a, c.domain->b, c.domain->c, c.domain->d};
  j["degrees"] = {c.k, c.l};
  if (c.explicit_knots) {
    j["x_knots"] = c.x_knots;
    j["y_knots"] = c.y_knots;
  } else {
    j["knots"] = {c.g, c.h};
  }
  j["penalty"] = {c.p, c.q};
  j["marginal_penalty"] = c.marginal_penalty;
  if (c.rho) j["rho"] = *c.rho;
  j["rho_grid"] = {c.rho_lo, c.rho_hi, c.rho_count};
  j["bins"] = {c.m, c.n};
  j["neighborhood"] = c.neighborhood == Neighborhood::Four ? 4 : 8;
  j["seed"] = c.seed;
  j["grid"] = c.grid;
  j["parallel"] = c.parallel;
  if (!c.samples.empty()) j["samples"] = c.samples;
  if (!c.histogram.empty()) j["histogram"] = c.histogram;
  if (!c.coeffs.empty()) j["coeffs"] = c.coeffs;
  if (!c.inputs.empty()) j["inputs"] = c.inputs;
  j["out"] = c.out;
  j["alpha"] = {c.beta.alpha0, c.beta.alpha1, c.beta.alpha2};
  if (c.M) j["M"] = *c.M;
  j["count"] = c.count;
  j["replicates"] = c.replicates;
  if (!c.bin_sweep.empty()) j["bin_sweep"] = c.bin_sweep;
  if (!c.knot_sweep.empty()) j["knot_sweep"] = c.knot_sweep;
  return j;
}

class Run {
 public:
  Run(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg) {
    fs::create_directories(cfg.out);
  }

  std::string path(const std::string& name) {
    outputs_.push_back(name);
    return (fs::path(cfg_.out) / name).string();
  }

  void write_json(const std::string& name, const json& j) {
    std::ofstream o(path(name));
    if (!o) throw Error("cannot write " + name);
    o << j.dump(2) << "\n";
  }

  void finish(std::ostream& out) {
    json m;
    m["command"] = command_;
    m["seed"] = cfg_.seed;
    m["config"] = config_json(cfg_);
    m["outputs"] = outputs_;
    const std::string p = (fs::path(cfg_.out) / "manifest.json").string();
    std::ofstream o(p);
    if (!o) throw Error("cannot write manifest.json");
    o << m.dump(2) << "\n";
    out << command_ << ": wrote " << outputs_.size() + 1 << " files to " << cfg_.out << "\n";
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  std::vector<std::string> outputs_;
};

struct Prepared {
  HistogramGrid hist;
  ClrField clr;
  Domain domain;
  int dropped_na = 0;
  int out_of_range = 0;
  int imputed = 0;
};

Prepared prepare(const RunConfig& cfg, const std::string& samples, const std::string& histogram) {
  Prepared p;
  HistogramGrid raw;
  if (!samples.empty()) {
    require_file(samples);
    SampleSet s = stage("read samples", [&] { return read_samples(samples); });
    s.range = cfg.domain;
    const HistogramResult h = stage("histogram", [&] { return build_histogram(s, cfg.m, cfg.n); });
    raw = h.grid;
    p.domain = s.resolved_range();
    p.dropped_na = s.dropped_na;
    p.out_of_range = h.out_of_range;
  } else if (!histogram.empty()) {
    require_file(histogram);
    raw = stage("read histogram", [&] { return read_histogram(histogram); });
    // Edges within rounding of zero are taken as zero.
    auto edge = [](double v, double w) { return std::abs(v) < 1e-12 * w ? 0.0 : v; };
    p.domain = cfg.domain ? *cfg.domain
                          : Domain{edge(raw.x_mid(0) - raw.x_width / 2, raw.x_width),
                                   edge(raw.x_mid(raw.m() - 1) + raw.x_width / 2, raw.x_width),
                                   edge(raw.y_mid(0) - raw.y_width / 2, raw.y_width),
                                   edge(raw.y_mid(raw.n() - 1) + raw.y_width / 2, raw.y_width)};
  } else {
    throw InputError("no input: give --samples or --histogram");
  }
  const ImputeReport rep = stage("imputation", [&] { return impute_zeros_report(raw, cfg.neighborhood); });
  p.hist = rep.grid;
  p.imputed = rep.imputed;
  p.clr = stage("clr", [&] { return discrete_clr(p.hist); });
  return p;
}

struct Fitted {
  TensorBasisSpec spec;
  FitResult fit;
  std::optional<GcvScan> scan;
};

Fitted fit_prepared(const RunConfig& cfg, const Prepared& d) {
  Fitted r;
  r.spec = stage("spline space", [&] { return cfg.spec(d.domain); });
  const SmoothingProblem prob = stage("smoothing problem", [&] {
    return SmoothingProblem(r.spec, d.clr.x, d.clr.y, d.clr.values, cfg.p, cfg.q,
                            cfg.marginal_penalty);
  });
  double rho = 0;
  if (cfg.rho) {
    rho = *cfg.rho;
  } else {
    r.scan = stage("gcv", [&] { return prob.gcv_scan(cfg.rho_grid(), cfg.parallel); });
    rho = r.scan->best_rho;
  }
  r.fit = stage("fit", [&] { return prob.fit(rho); });
  return r;
}

// Histogram files have a header of at least two x midpoints; samples have two columns.
bool is_histogram_file(const std::string& path) {
  const std::vector<CsvRow> rows = read_csv(path);
  return !rows.empty() && rows.front().cells.size() > 2;
}

VectorXd axis_grid(const KnotConfigd& k, int n) { return VectorXd::LinSpaced(n, k.lo, k.hi); }

void write_surfaces(Run& run, const TensorBasisSpec& spec, const ZBCoeffs& c, int grid,
                    const std::string& stem, json* summary = nullptr) {
  const VectorXd xs = axis_grid(spec.x, grid), ys = axis_grid(spec.y, grid);
  const MatrixXd s = eval_spline(spec, c, xs, ys);
  write_grid_csv(run.path(stem + "clr.csv"), xs, ys, s);
  const DensityGrid d = inv_clr(xs, ys, s);
  write_grid_csv(run.path(stem + "density.csv"), xs, ys, d.values);
  if (summary) (*summary)["density_integral"] = trapezoid(d.x, d.y, d.values);
}

void write_curve(Run& run, const std::string& name, const std::vector<GcvPoint>& curve) {
  MatrixXd M(curve.size(), 4);
  for (std::size_t i = 0; i < curve.size(); ++i)
    M.row(i) << curve[i].rho, curve[i].ok ? curve[i].gcv : NAN, curve[i].hat_trace, curve[i].rss;
  write_matrix_csv(run.path(name), M, {"rho", "gcv", "hat_trace", "rss"});
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  const Prepared d = prepare(cfg, cfg.samples, cfg.histogram);
  const Fitted f = fit_prepared(cfg, d);
  Run run("fit", cfg);
  write_histogram(run.path("histogram.csv"), d.hist);
  write_zb_coeffs(run.path("coeffs_zb.csv"), f.spec, f.fit.coeffs);
  write_b_coeffs(run.path("coeffs_b.csv"), f.spec, zb_to_b(f.spec, f.fit.coeffs));
  json s;
  s["rho"] = f.fit.rho;
  s["gcv"] = f.fit.gcv;
  s["hat_trace"] = f.fit.hat_trace;
  s["rss"] = f.fit.rss;
  s["n_obs"] = f.fit.n_obs;
  s["dimension"] = f.spec.dimension();
  s["normal_residual"] = f.fit.normal_residual;
  s["jittered"] = f.fit.jittered;
  s["rho_scanned"] = f.scan.has_value();
  s["dropped_na"] = d.dropped_na;
  s["out_of_range"] = d.out_of_range;
  s["imputed_bins"] = d.imputed;
  write_surfaces(run, f.spec, f.fit.coeffs, cfg.grid, "fit_", &s);
  if (f.scan) write_curve(run, "gcv_curve.csv", f.scan->curve);
  run.write_json("fit_summary.json", s);
  run.finish(out);
  return 0;
}

int cmd_decompose(const RunConfig& cfg, std::ostream& out) {
  TensorBasisSpec spec;
  ZBCoeffs c;
  if (!cfg.coeffs.empty()) {
    require_file(cfg.coeffs);
    const CoeffFile f = stage("read coefficients", [&] { return read_zb_coeffs(cfg.coeffs); });
    spec = f.spec;
    c = f.coeffs;
  } else {
    const Fitted f = fit_prepared(cfg, prepare(cfg, cfg.samples, cfg.histogram));
    spec = f.spec;
    c = f.fit.coeffs;
  }
  const DecompositionResult r = stage("decomposition", [&] { return decompose(spec, c); });
  Run run("decompose", cfg);
  write_matrix_csv(run.path("interactive_Z.csv"), r.interactive);
  write_matrix_csv(run.path("marginal_v.csv"), r.marginal_x);
  write_matrix_csv(run.path("marginal_u.csv"), r.marginal_y);
  write_surfaces(run, spec, r.interactive_coeffs(), cfg.grid, "interactive_");
  write_surfaces(run, spec, r.independent_coeffs(), cfg.grid, "independent_");
  json s;
  s["norm_interactive"] = r.norm_int;
  s["norm_independent"] = r.norm_ind;
  s["norm_total"] = r.norm_total;
  s["dependence_ratio"] = r.dependence_ratio;
  s["interactive_to_independent"] =
      r.norm_ind > 0 ? (r.norm_int * r.norm_int) / (r.norm_ind * r.norm_ind) : 0.0;
  run.write_json("decomposition.json", s);
  run.finish(out);
  return 0;
}

int cmd_gcv(const RunConfig& cfg, std::ostream& out) {
  std::vector<std::pair<std::string, bool>> datasets;  // path, is_histogram
  for (const std::string& p : cfg.inputs) {
    require_file(p);
    datasets.emplace_back(p, is_histogram_file(p));
  }
  if (datasets.empty() && !cfg.samples.empty()) datasets.emplace_back(cfg.samples, false);
  if (datasets.empty() && !cfg.histogram.empty()) datasets.emplace_back(cfg.histogram, true);
  if (datasets.empty()) throw InputError("gcv: no datasets given");
  const std::vector<double> grid = cfg.rho_grid();

  std::vector<std::vector<GcvPoint>> curves;
  json s;
  s["datasets"] = json::array();
  for (const auto& [path, is_hist] : datasets) {
    const Prepared d = is_hist ? prepare(cfg, "", path) : prepare(cfg, path, "");
    const TensorBasisSpec spec = stage("spline space", [&] { return cfg.spec(d.domain); });
    const GcvScan scan = stage("gcv", [&] {
      return SmoothingProblem(spec, d.clr.x, d.clr.y, d.clr.values, cfg.p, cfg.q,
                              cfg.marginal_penalty)
          .gcv_scan(grid, cfg.parallel);
    });
    curves.push_back(scan.curve);
    s["datasets"].push_back({{"path", path}, {"best_rho", scan.best_rho}, {"best_gcv", scan.best_gcv}});
  }
  const std::vector<GcvPoint> mean = mean_gcv_curve(curves);
  const GcvScan best = stage("gcv", [&] { return select_rho(mean); });
  s["mean_best_rho"] = best.best_rho;
  s["mean_best_gcv"] = best.best_gcv;

  Run run("gcv", cfg);
  MatrixXd M(grid.size(), curves.size() + 2);
  std::vector<std::string> header = {"rho"};
  for (std::size_t j = 0; j < curves.size(); ++j) header.push_back("gcv_" + std::to_string(j));
  header.push_back("mean");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    M(i, 0) = grid[i];
    for (std::size_t j = 0; j < curves.size(); ++j)
      M(i, j + 1) = curves[j][i].ok ? curves[j][i].gcv : NAN;
    M(i, curves.size() + 1) = mean[i].ok ? mean[i].gcv : NAN;
  }
  write_matrix_csv(run.path("gcv_curves.csv"), M, header);
  run.write_json("gcv.json", s);
  run.finish(out);
  return 0;
}

void write_sweep(Run& run, const std::string& stem, const std::string& label, const SweepTable& t,
                 json& summary) {
  std::vector<std::string> header;
  for (int v : t.params) header.push_back(label + "_" + std::to_string(v));
  write_matrix_csv(run.path(stem + ".csv"), t.ise, header);
  json cols = json::array();
  for (std::size_t c = 0; c < t.params.size(); ++c) {
    const Quartiles& q = t.summary[c];
    json col = {{label, t.params[c]}, {"feasible", static_cast<bool>(t.feasible[c])}, {"fits", q.count}};
    if (q.count > 0)
      col.update({{"min", q.min}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"max", q.max}});
    cols.push_back(col);
  }
  summary[stem] = cols;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const double M = cfg.M ? *cfg.M : estimate_envelope(cfg.beta);
  SweepConfig sc;
  sc.beta = cfg.beta;
  sc.M = M;
  sc.count = cfg.count;
  sc.replicates = cfg.replicates;
  sc.seed = cfg.seed;
  sc.k = cfg.k;
  sc.l = cfg.l;
  sc.p = cfg.p;
  sc.q = cfg.q;
  sc.rho = cfg.rho.value_or(1e-3);
  sc.g = cfg.g;
  sc.h = cfg.h;
  sc.m = cfg.m;
  sc.n = cfg.n;
  sc.ise_grid = cfg.grid;
  sc.neighborhood = cfg.neighborhood;
  sc.parallel = cfg.parallel;

  const AcceptRejectResult ar =
      stage("accept-reject", [&] { return accept_reject(sc.beta, sc.count, M, derive_seed(sc.seed, 0)); });
  const HistogramResult h = stage("histogram", [&] { return build_histogram(ar.samples, cfg.m, cfg.n); });

  Run run("simulate", cfg);
  write_samples(run.path("samples.csv"), ar.samples);
  write_histogram(run.path("histogram.csv"), h.grid);
  json s;
  s["M"] = M;
  s["M_estimated"] = !cfg.M.has_value();
  s["accepted"] = sc.count;
  s["proposals"] = ar.proposals;
  s["acceptance_rate"] = ar.acceptance_rate;
  s["max_density_over_M"] = ar.max_ratio;
  if (!cfg.bin_sweep.empty())
    write_sweep(run, "ise_bins", "bins", stage("bin sweep", [&] { return run_bin_sweep(sc, cfg.bin_sweep); }), s);
  if (!cfg.knot_sweep.empty())
    write_sweep(run, "ise_knots", "knots",
                stage("knot sweep", [&] { return run_knot_sweep(sc, cfg.knot_sweep); }), s);
  run.write_json("simulate.json", s);
  run.finish(out);
  return 0;
}

int cmd_group_stats(const RunConfig& cfg, std::ostream& out) {
  if (cfg.inputs.empty()) throw InputError("group-stats: no coefficient files given");
  std::vector<CoeffFile> files;
  for (const std::string& p : cfg.inputs) {
    require_file(p);
    files.push_back(stage("read coefficients", [&] { return read_zb_coeffs(p); }));
    if (!(files.back().spec == files.front().spec))
      throw InputError("group-stats: spline space of " + p + " differs from " + cfg.inputs[0]);
  }
  const TensorBasisSpec& spec = files.front().spec;
  const std::size_t N = files.size();
  MatrixXd mean = MatrixXd::Zero(spec.x.num_bsplines(), spec.y.num_bsplines());
  for (const CoeffFile& f : files) mean += f.coeffs.packed();
  mean /= double(N);
  MatrixXd var = MatrixXd::Zero(mean.rows(), mean.cols());
  for (const CoeffFile& f : files) var += (f.coeffs.packed() - mean).cwiseAbs2();
  if (N > 1) var /= double(N - 1);
  const ZBCoeffs mc = ZBCoeffs::from_packed(mean);
  const ZBCoeffs sd = ZBCoeffs::from_packed(var.cwiseSqrt());

  Run run("group-stats", cfg);
  write_zb_coeffs(run.path("mean_coeffs.csv"), spec, mc);
  write_zb_coeffs(run.path("sd_coeffs.csv"), spec, sd);
  write_surfaces(run, spec, mc, cfg.grid, "mean_");
  write_surfaces(run, spec, sd, cfg.grid, "sd_");
  run.write_json("group_stats.json", {{"count", N}, {"files", cfg.inputs}});
  run.finish(out);
  return 0;
}

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "Flat key = value config file");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--rho", f.rho, "Smoothing parameter; skips the GCV scan");
  app->add_option("--rho-grid", f.rho_grid, "lo,hi,count log-spaced GCV grid");
  app->add_option("--bins", f.bins, "Histogram classes m,n");
  app->add_option("--knots", f.knots, "Equispaced interior knot counts g,h");
  app->add_option("--degrees", f.degrees, "Spline degrees k,l");
  app->add_option("--penalty", f.penalty, "Derivative orders p,q");
  app->add_option("--domain", f.domain, "Domain a,b,c,d; default is the data range");
  app->add_option("--out", f.out, "Output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bivariate density estimation with zero-integral splines in clr space"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* fit = app.add_subcommand("fit", "Fit a compositional spline to samples or a histogram");
  CLI::App* dec = app.add_subcommand("decompose", "Split a fit into interactive and independent parts");
  CLI::App* gcv = app.add_subcommand("gcv", "GCV curves over a rho grid, single or averaged");
  CLI::App* sim = app.add_subcommand("simulate", "Bivariate beta samples and ISE sweeps");
  CLI::App* grp = app.add_subcommand("group-stats", "Coefficient-wise mean and SD of several fits");
  for (CLI::App* sub : {fit, dec, gcv, sim, grp}) add_flags(sub, f);
  for (CLI::App* sub : {fit, dec, gcv}) {
    sub->add_option("--samples", f.samples, "Samples CSV with columns x,y");
    sub->add_option("--histogram", f.histogram, "Histogram CSV");
  }
  dec->add_option("--coeffs", f.coeffs, "ZB coefficient file from fit");
  gcv->add_option("datasets", f.inputs, "Sample or histogram CSV files");
  grp->add_option("files", f.inputs, "ZB coefficient files");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = resolve(f);
    if (fit->parsed()) return cmd_fit(cfg, out);
    if (dec->parsed()) return cmd_decompose(cfg, out);
    if (gcv->parsed()) return cmd_gcv(cfg, out);
    if (sim->parsed()) return cmd_simulate(cfg, out);
    if (grp->parsed()) return cmd_group_stats(cfg, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace zbs::cli
