#include "zbs/ingest.hpp"

#include "zbs/error.hpp"
#include "zbs/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace zbs {

void Domain::validate() const {
  if (!(a < b) || !(c < d) || !std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) ||
      !std::isfinite(d)) {
    std::ostringstream os;
    os << "degenerate range [" << a << ", " << b << "] x [" << c << ", " << d << "]";
    throw InputError(os.str());
  }
}

Domain SampleSet::resolved_range() const {
  if (range) {
    range->validate();
    return *range;
  }
  if (x.size() == 0) throw InputError("empty sample set");
  Domain r{x.minCoeff(), x.maxCoeff(), y.minCoeff(), y.maxCoeff()};
  r.validate();
  return r;
}

HistogramResult build_histogram(const SampleSet& s, int m, int n) {
  if (m < 2 || n < 2) throw InputError("histogram needs at least 2 classes per axis");
  if (s.x.size() != s.y.size()) throw InputError("sample x and y lengths differ");
  if (s.size() == 0) throw InputError("empty sample set");
  const Domain r = s.resolved_range();

  HistogramResult out;
  HistogramGrid& h = out.grid;
  h.x_width = (r.b - r.a) / m;
  h.y_width = (r.d - r.c) / n;
  h.x_mid = VectorXd::LinSpaced(m, r.a + h.x_width / 2, r.b - h.x_width / 2);
  h.y_mid = VectorXd::LinSpaced(n, r.c + h.y_width / 2, r.d - h.y_width / 2);
  h.freq = MatrixXd::Zero(m, n);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double x = s.x(i), y = s.y(i);
    if (!r.contains(x, y)) {
      ++out.out_of_range;
      continue;
    }
    const int bx = std::min(m - 1, static_cast<int>((x - r.a) / (r.b - r.a) * m));
    const int by = std::min(n - 1, static_cast<int>((y - r.c) / (r.d - r.c) * n));
    h.freq(bx, by) += 1;
    ++out.retained;
  }
  if (out.retained == 0) throw InputError("no sample lies inside the histogram range");
  return out;
}

ImputeReport impute_zeros_report(const HistogramGrid& h, Neighborhood nb) {
  if ((h.freq.array() < 0).any() || !h.freq.allFinite())
    throw InputError("imputation: frequencies must be finite and non-negative");
  if (!(h.freq.array() > 0).any()) throw InputError("imputation: histogram has no positive bin");

  ImputeReport rep;
  rep.grid = h;
  MatrixXd& F = rep.grid.freq;
  const int m = static_cast<int>(F.rows()), n = static_cast<int>(F.cols());
  while ((F.array() == 0).any()) {
    const MatrixXd prev = F;
    int filled = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i) {
        if (prev(i, j) != 0) continue;
        double log_sum = 0, lo = INFINITY, hi = 0;
        int count = 0;
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            if (di == 0 && dj == 0) continue;
            if (nb == Neighborhood::Four && di != 0 && dj != 0) continue;
            const int a = i + di, b = j + dj;
            if (a < 0 || a >= m || b < 0 || b >= n || !(prev(a, b) > 0)) continue;
            log_sum += std::log(prev(a, b));
            lo = std::min(lo, prev(a, b));
            hi = std::max(hi, prev(a, b));
            ++count;
          }
        if (count == 0) continue;
        const double gm = lo == hi ? lo : std::exp(log_sum / count);
        F(i, j) = gm * 2.0 / 3.0;
        ++filled;
      }
    if (filled == 0) throw Error("imputation: zero bins without positive neighbours remain");
    rep.imputed += filled;
    ++rep.passes;
  }
  return rep;
}

SampleSet read_samples(const std::string& path) {
  const std::vector<CsvRow> rows = read_csv(path);
  SampleSet s;
  std::vector<double> xs, ys;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.cells.size() != 2) {
      std::ostringstream os;
      os << "samples " << path << ": expected 2 columns, found " << row.cells.size();
      throw ParseError(os.str(), row.line);
    }
    const std::string& a = row.cells[0];
    const std::string& b = row.cells[1];
    if (r == 0 && !is_number(a) && !is_number(b) && a != "NA" && b != "NA") continue;
    if (a == "NA" || b == "NA" || a.empty() || b.empty()) {
      ++s.dropped_na;
      continue;
    }
    xs.push_back(parse_number(a, row.line, 1));
    ys.push_back(parse_number(b, row.line, 2));
  }
  s.x = Eigen::Map<const VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  s.y = Eigen::Map<const VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return s;
}

void write_samples(const std::string& path, const SampleSet& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  out << "x,y\n";
  for (Eigen::Index i = 0; i < s.size(); ++i)
    out << format_double(s.x(i)) << "," << format_double(s.y(i)) << "\n";
}

HistogramGrid read_histogram(const std::string& path) {
  const LabeledGrid g = read_grid_csv(path);
  if (g.x.size() < 2 || g.y.size() < 2)
    throw ParseError("histogram " + path + ": needs at least 2 classes per axis");
  HistogramGrid h{g.x, g.y, g.values, g.x(1) - g.x(0), g.y(1) - g.y(0)};
  h.validate();
  return h;
}

void write_histogram(const std::string& path, const HistogramGrid& h) {
  write_grid_csv(path, h.x_mid, h.y_mid, h.freq);
}

}  // namespace zbs
