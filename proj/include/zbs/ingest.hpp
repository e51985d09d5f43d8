#ifndef ZBS_INGEST_HPP
#define ZBS_INGEST_HPP

#include "zbs/clr.hpp"

#include <optional>
#include <string>

namespace zbs {

// Rectangle [a, b] x [c, d].
struct Domain {
  double a = 0, b = 1, c = 0, d = 1;

  void validate() const;
  bool contains(double x, double y) const { return x >= a && x <= b && y >= c && y <= d; }
};

struct SampleSet {
  VectorXd x;
  VectorXd y;
  // Empty means the bounding box of the data.
  std::optional<Domain> range;
  // Rows dropped by read_samples because of NA cells.
  int dropped_na = 0;

  Eigen::Index size() const { return x.size(); }
  Domain resolved_range() const;
};

struct HistogramResult {
  HistogramGrid grid;
  int retained = 0;
  int out_of_range = 0;
};

// Equispaced m x n classes over the resolved range, last class right-closed.
HistogramResult build_histogram(const SampleSet& s, int m, int n);

enum class Neighborhood { Four, Eight };

struct ImputeReport {
  HistogramGrid grid;
  int passes = 0;
  int imputed = 0;
};

// Replaces zero counts by 2/3 of the geometric mean of their positive
// neighbours, pass after pass, each pass reading only the previous state.
ImputeReport impute_zeros_report(const HistogramGrid& h,
                                 Neighborhood nb = Neighborhood::Eight);
inline HistogramGrid impute_zeros(const HistogramGrid& h, Neighborhood nb = Neighborhood::Eight) {
  return impute_zeros_report(h, nb).grid;
}

// Two columns x,y, optional header, NA cells drop the row.
SampleSet read_samples(const std::string& path);
void write_samples(const std::string& path, const SampleSet& s);

HistogramGrid read_histogram(const std::string& path);
void write_histogram(const std::string& path, const HistogramGrid& h);

}  // namespace zbs

#endif  // ZBS_INGEST_HPP
