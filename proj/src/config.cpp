#include "zbs/config.hpp"

#include "zbs/error.hpp"
#include "zbs/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace zbs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& s, const std::string& source, int line) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  if (!s.empty() && (s.front() == '"' || s.back() == '"'))
    throw ParseError(source + ": unterminated string", line);
  return s;
}

std::vector<std::string> split_array(const std::string& body, const std::string& source,
                                     int line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : body) {
    if (ch == '"') quoted = !quoted;
    if (ch == ',' && !quoted) {
      out.push_back(unquote(trim(cur), source, line));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (quoted) throw ParseError(source + ": unterminated string", line);
  if (!trim(cur).empty() || !out.empty()) out.push_back(unquote(trim(cur), source, line));
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "domain",   "degrees",    "knots",      "x_knots",   "y_knots",
      "penalty",  "marginal_penalty",         "rho",       "rho_grid",
      "bins",     "neighborhood", "seed",     "grid",      "parallel",
      "samples",  "histogram",  "coeffs",     "inputs",    "out",
      "alpha",    "M",          "count",      "replicates", "bin_sweep",
      "knot_sweep"};
  return keys;
}

std::pair<int, int> pair_of(const std::vector<int>& v, const char* key) {
  if (v.size() != 2) throw InputError(std::string("config: '") + key + "' needs two values");
  return {v[0], v[1]};
}

}  // namespace

ConfigDoc ConfigDoc::parse(const std::string& text, const std::string& source) {
  ConfigDoc doc;
  doc.source_ = source;
  std::istringstream in(text);
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[')
      throw ParseError(source + ": sections are not supported, the document is flat", no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source + ": expected key = value", no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(source + ": empty key", no);
    if (value.empty()) throw ParseError(source + ": key '" + key + "' has no value", no);
    if (doc.values_.count(key)) throw ParseError(source + ": duplicate key '" + key + "'", no);
    Entry e;
    e.line = no;
    if (value.front() == '[') {
      if (value.back() != ']') throw ParseError(source + ": unterminated array", no);
      e.is_array = true;
      e.items = split_array(value.substr(1, value.size() - 2), source, no);
    } else {
      e.items = {unquote(value, source, no)};
    }
    doc.values_[key] = std::move(e);
  }
  return doc;
}

ConfigDoc ConfigDoc::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::vector<std::string> ConfigDoc::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

const ConfigDoc::Entry& ConfigDoc::entry(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InputError(source_ + ": missing key '" + key + "'");
  return it->second;
}

void ConfigDoc::fail(const std::string& key, const std::string& what) const {
  const auto it = values_.find(key);
  throw ParseError(source_ + ": key '" + key + "' " + what, it == values_.end() ? 0 : it->second.line);
}

std::string ConfigDoc::get_string(const std::string& key) const {
  const Entry& e = entry(key);
  if (e.is_array) fail(key, "expects a single value, not an array");
  return e.items[0];
}

double ConfigDoc::get_number(const std::string& key) const {
  const std::string s = get_string(key);
  if (!is_number(s)) fail(key, "expects a number, found '" + s + "'");
  return parse_number(s, 0, 0);
}

long long ConfigDoc::get_int(const std::string& key) const {
  const double v = get_number(key);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) fail(key, "expects an integer");
  return static_cast<long long>(v);
}

bool ConfigDoc::get_bool(const std::string& key) const {
  const std::string s = get_string(key);
  if (s == "true") return true;
  if (s == "false") return false;
  fail(key, "expects true or false, found '" + s + "'");
}

std::vector<std::string> ConfigDoc::get_strings(const std::string& key) const {
  return entry(key).items;
}

std::vector<double> ConfigDoc::get_numbers(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& s : entry(key).items) {
    if (!is_number(s)) fail(key, "expects numbers, found '" + s + "'");
    out.push_back(parse_number(s, 0, 0));
  }
  return out;
}

std::vector<int> ConfigDoc::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (double v : get_numbers(key)) {
    if (v != std::floor(v) || std::abs(v) > 2e9) fail(key, "expects integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void RunConfig::apply(const ConfigDoc& doc) {
  for (const std::string& k : doc.keys())
    if (!known_keys().count(k)) throw InputError("config: unknown key '" + k + "'");

  if (doc.has("domain")) {
    const std::vector<double> d = doc.get_numbers("domain");
    if (d.size() != 4) throw InputError("config: 'domain' needs four values [a, b, c, d]");
    domain = Domain{d[0], d[1], d[2], d[3]};
  }
  if (doc.has("degrees")) std::tie(k, l) = pair_of(doc.get_ints("degrees"), "degrees");
  if (doc.has("knots")) std::tie(g, h) = pair_of(doc.get_ints("knots"), "knots");
  if (doc.has("x_knots") != doc.has("y_knots"))
    throw InputError("config: 'x_knots' and 'y_knots' must be given together");
  if (doc.has("x_knots")) {
    x_knots = doc.get_numbers("x_knots");
    y_knots = doc.get_numbers("y_knots");
    explicit_knots = true;
  }
  if (doc.has("penalty")) std::tie(p, q) = pair_of(doc.get_ints("penalty"), "penalty");
  if (doc.has("marginal_penalty")) marginal_penalty = doc.get_bool("marginal_penalty");
  if (doc.has("rho")) rho = doc.get_number("rho");
  if (doc.has("rho_grid")) {
    const std::vector<double> r = doc.get_numbers("rho_grid");
    if (r.size() != 3) throw InputError("config: 'rho_grid' needs [lo, hi, count]");
    rho_lo = r[0];
    rho_hi = r[1];
    if (r[2] != std::floor(r[2])) throw InputError("config: rho_grid count must be an integer");
    rho_count = static_cast<int>(r[2]);
  }
  if (doc.has("bins")) std::tie(m, n) = pair_of(doc.get_ints("bins"), "bins");
  if (doc.has("neighborhood")) {
    const long long nb = doc.get_int("neighborhood");
    if (nb != 4 && nb != 8) throw InputError("config: 'neighborhood' must be 4 or 8");
    neighborhood = nb == 4 ? Neighborhood::Four : Neighborhood::Eight;
  }
  if (doc.has("seed")) {
    const long long s = doc.get_int("seed");
    if (s < 0) throw InputError("config: 'seed' must be non-negative");
    seed = static_cast<std::uint64_t>(s);
  }
  if (doc.has("grid")) grid = static_cast<int>(doc.get_int("grid"));
  if (doc.has("parallel")) parallel = doc.get_bool("parallel");
  if (doc.has("samples")) samples = doc.get_string("samples");
  if (doc.has("histogram")) histogram = doc.get_string("histogram");
  if (doc.has("coeffs")) coeffs = doc.get_string("coeffs");
  if (doc.has("inputs")) inputs = doc.get_strings("inputs");
  if (doc.has("out")) out = doc.get_string("out");
  if (doc.has("alpha")) {
    const std::vector<double> a = doc.get_numbers("alpha");
    if (a.size() != 3) throw InputError("config: 'alpha' needs three values");
    beta = BetaParams{a[0], a[1], a[2]};
  }
  if (doc.has("M")) M = doc.get_number("M");
  if (doc.has("count")) count = static_cast<int>(doc.get_int("count"));
  if (doc.has("replicates")) replicates = static_cast<int>(doc.get_int("replicates"));
  if (doc.has("bin_sweep")) bin_sweep = doc.get_ints("bin_sweep");
  if (doc.has("knot_sweep")) knot_sweep = doc.get_ints("knot_sweep");
}

void RunConfig::validate() const {
  if (domain) domain->validate();
  if (k < 0 || l < 0) throw InputError("config: degrees must be non-negative");
  if (g < 0 || h < 0) throw InputError("config: knot counts must be non-negative");
  if (p < 0 || q < 0) throw InputError("config: penalty orders must be non-negative");
  if (p > k - 1 || q > l - 1) {
    std::ostringstream os;
    os << "config: penalty orders (" << p << ", " << q << ") must stay below the degrees (" << k
       << ", " << l << ")";
    throw InputError(os.str());
  }
  if (rho && !(*rho > 0 && std::isfinite(*rho)))
    throw InputError("config: rho must be finite and positive");
  if (rho_count < 1) throw InputError("config: rho grid is empty");
  if (!(rho_lo > 0 && rho_hi >= rho_lo && std::isfinite(rho_hi)))
    throw InputError("config: rho grid needs 0 < lo <= hi");
  if (m < 2 || n < 2) throw InputError("config: bins must be at least 2 per axis");
  if (grid < 2) throw InputError("config: evaluation grid must be at least 2");
  beta.validate();
  if (M && !(*M > 0)) throw InputError("config: M must be positive");
  if (count < 1) throw InputError("config: count must be positive");
  if (replicates < 1) throw InputError("config: replicates must be positive");
  if (explicit_knots && domain) spec(*domain).validate();
}

TensorBasisSpec RunConfig::spec(const Domain& d) const {
  TensorBasisSpec s;
  if (explicit_knots) {
    s.x = KnotConfigd{d.a, d.b, x_knots, k};
    s.y = KnotConfigd{d.c, d.d, y_knots, l};
  } else {
    s.x = KnotConfigd::uniform(d.a, d.b, g, k);
    s.y = KnotConfigd::uniform(d.c, d.d, h, l);
  }
  s.validate();
  return s;
}

}  // namespace zbs
