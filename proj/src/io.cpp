#include "zbs/io.hpp"

#include "zbs/error.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace zbs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  return out;
}

void write_axis(std::ostream& os, const char* axis, const KnotConfigd& k) {
  os << "# " << axis << ".lo=" << format_double(k.lo) << "\n";
  os << "# " << axis << ".hi=" << format_double(k.hi) << "\n";
  os << "# " << axis << ".degree=" << k.degree << "\n";
  os << "# " << axis << ".knots=";
  for (std::size_t i = 0; i < k.interior.size(); ++i)
    os << (i ? ";" : "") << format_double(k.interior[i]);
  os << "\n";
}

void write_rows(std::ostream& os, const MatrixXd& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? "," : "") << format_double(M(i, j));
    os << "\n";
  }
}

}  // namespace

std::vector<CsvRow> read_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<CsvRow> rows;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    rows.push_back({no, split(t, ',')});
  }
  return rows;
}

std::vector<std::string> read_comment_lines(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty() && t[0] == '#') out.push_back(trim(t.substr(1)));
  }
  return out;
}

bool is_number(const std::string& cell) {
  if (cell.empty()) return false;
  double v;
  const char* b = cell.data();
  const char* e = b + cell.size();
  if (*b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  return r.ec == std::errc() && r.ptr == e;
}

double parse_number(const std::string& cell, int line, int column) {
  if (!is_number(cell))
    throw ParseError("expected a number but found '" + cell + "'", line, column);
  double v;
  const char* b = cell.data();
  if (*b == '+') ++b;
  std::from_chars(b, cell.data() + cell.size(), v);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_grid_csv(const std::string& path, const VectorXd& x, const VectorXd& y,
                    const MatrixXd& values) {
  if (values.rows() != x.size() || values.cols() != y.size())
    throw InputError("grid CSV: values do not match the axes");
  std::ofstream out = open_out(path);
  out << "y\\x";
  for (Eigen::Index i = 0; i < x.size(); ++i) out << "," << format_double(x(i));
  out << "\n";
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    out << format_double(y(j));
    for (Eigen::Index i = 0; i < x.size(); ++i) out << "," << format_double(values(i, j));
    out << "\n";
  }
}

LabeledGrid read_grid_csv(const std::string& path) {
  const std::vector<CsvRow> rows = read_csv(path);
  if (rows.size() < 2) throw ParseError("grid CSV " + path + ": needs a header and a body row");
  const CsvRow& head = rows[0];
  const int m = static_cast<int>(head.cells.size()) - 1;
  if (m < 1) throw ParseError("grid CSV " + path + ": header has no x values", head.line);
  LabeledGrid g;
  g.x.resize(m);
  for (int i = 0; i < m; ++i) g.x(i) = parse_number(head.cells[i + 1], head.line, i + 2);
  const int n = static_cast<int>(rows.size()) - 1;
  g.y.resize(n);
  g.values.resize(m, n);
  for (int j = 0; j < n; ++j) {
    const CsvRow& r = rows[j + 1];
    if (static_cast<int>(r.cells.size()) != m + 1) {
      std::ostringstream os;
      os << "grid CSV " << path << ": expected " << m + 1 << " cells, found " << r.cells.size();
      throw ParseError(os.str(), r.line);
    }
    g.y(j) = parse_number(r.cells[0], r.line, 1);
    for (int i = 0; i < m; ++i) g.values(i, j) = parse_number(r.cells[i + 1], r.line, i + 2);
  }
  return g;
}

void write_matrix_csv(const std::string& path, const MatrixXd& values,
                      const std::vector<std::string>& header) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  if (!header.empty()) out << "\n";
  write_rows(out, values);
}

void write_zb_coeffs(const std::string& path, const TensorBasisSpec& spec, const ZBCoeffs& c) {
  c.check_shape(spec);
  std::ofstream out = open_out(path);
  out << "# form=zb\n";
  write_axis(out, "x", spec.x);
  write_axis(out, "y", spec.y);
  write_rows(out, c.packed());
}

void write_b_coeffs(const std::string& path, const TensorBasisSpec& spec, const BCoeffs& c) {
  std::ofstream out = open_out(path);
  out << "# form=b\n";
  write_axis(out, "x", spec.x);
  write_axis(out, "y", spec.y);
  write_rows(out, c.B);
}

CoeffFile read_zb_coeffs(const std::string& path) {
  std::map<std::string, std::string> kv;
  for (const std::string& line : read_comment_lines(path)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("coefficient file " + path + ": missing '" + key + "'");
    return it->second;
  };
  if (get("form") != "zb")
    throw ParseError("coefficient file " + path + ": expected form=zb, found " + get("form"));
  auto axis = [&](const std::string& a) {
    KnotConfigd k;
    k.lo = parse_number(get(a + ".lo"), 0, 0);
    k.hi = parse_number(get(a + ".hi"), 0, 0);
    k.degree = static_cast<int>(parse_number(get(a + ".degree"), 0, 0));
    for (const std::string& s : split(get(a + ".knots"), ';'))
      if (!s.empty()) k.interior.push_back(parse_number(s, 0, 0));
    return k;
  };
  CoeffFile f;
  f.spec.x = axis("x");
  f.spec.y = axis("y");
  f.spec.validate();

  const std::vector<CsvRow> rows = read_csv(path);
  const int r = f.spec.x.num_bsplines(), cols = f.spec.y.num_bsplines();
  if (static_cast<int>(rows.size()) != r) {
    std::ostringstream os;
    os << "coefficient file " << path << ": expected " << r << " rows, found " << rows.size();
    throw ParseError(os.str());
  }
  MatrixXd R(r, cols);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].cells.size()) != cols) {
      std::ostringstream os;
      os << "coefficient file " << path << ": expected " << cols << " columns";
      throw ParseError(os.str(), rows[i].line);
    }
    for (int j = 0; j < cols; ++j) R(i, j) = parse_number(rows[i].cells[j], rows[i].line, j + 1);
  }
  f.coeffs = ZBCoeffs::from_packed(R);
  return f;
}

}  // namespace zbs
