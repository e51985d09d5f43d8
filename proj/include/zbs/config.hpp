#ifndef ZBS_CONFIG_HPP
#define ZBS_CONFIG_HPP

#include "zbs/ingest.hpp"
#include "zbs/simulate.hpp"
#include "zbs/smoother.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zbs {

// Flat key = value document. Values are numbers, true/false, quoted or bare
// strings, or one-level arrays [a, b, c]. '#' starts a comment.
class ConfigDoc {
 public:
  static ConfigDoc parse(const std::string& text, const std::string& source = "config");
  static ConfigDoc load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key) const;
  double get_number(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  std::vector<double> get_numbers(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

 private:
  struct Entry {
    std::vector<std::string> items;
    bool is_array = false;
    int line = 0;
  };
  const Entry& entry(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string source_;
  std::map<std::string, Entry> values_;
};

struct RunConfig {
  std::optional<Domain> domain;
  int k = 2, l = 2;
  int g = 3, h = 3;
  std::vector<double> x_knots, y_knots;
  bool explicit_knots = false;
  int p = 1, q = 1;
  bool marginal_penalty = false;
  std::optional<double> rho;
  double rho_lo = 1e-6, rho_hi = 10;
  int rho_count = 25;
  int m = 10, n = 10;
  Neighborhood neighborhood = Neighborhood::Eight;
  std::uint64_t seed = 1;
  int grid = 101;
  bool parallel = false;

  std::string samples;
  std::string histogram;
  std::string coeffs;
  std::vector<std::string> inputs;
  std::string out = "out";

  BetaParams beta;
  std::optional<double> M;
  int count = 3000;
  int replicates = 20;
  std::vector<int> bin_sweep;
  std::vector<int> knot_sweep;

  // Throws InputError on unknown keys and malformed values.
  void apply(const ConfigDoc& doc);
  // Checks every setting that does not need the input data.
  void validate() const;

  std::vector<double> rho_grid() const { return log_grid(rho_lo, rho_hi, rho_count); }
  TensorBasisSpec spec(const Domain& d) const;
};

}  // namespace zbs

#endif  // ZBS_CONFIG_HPP
