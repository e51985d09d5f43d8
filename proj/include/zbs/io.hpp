#ifndef ZBS_IO_HPP
#define ZBS_IO_HPP

#include "zbs/smoother.hpp"

#include <string>
#include <vector>

namespace zbs {

// One parsed CSV row with its 1-based line number in the source file.
struct CsvRow {
  int line = 0;
  std::vector<std::string> cells;
};

// Comma-separated rows; blank lines and lines starting with '#' are skipped.
std::vector<CsvRow> read_csv(const std::string& path);
std::vector<std::string> read_comment_lines(const std::string& path);

// Parses a number or throws a ParseError naming the line and column.
double parse_number(const std::string& cell, int line, int column);
bool is_number(const std::string& cell);

// %.17g, enough digits for an exact round-trip.
std::string format_double(double v);

// Matrix indexed (x, y) written transposed: a header row of x values, then one
// line per y value starting with that y.
struct LabeledGrid {
  VectorXd x;
  VectorXd y;
  MatrixXd values;
};

void write_grid_csv(const std::string& path, const VectorXd& x, const VectorXd& y,
                    const MatrixXd& values);
LabeledGrid read_grid_csv(const std::string& path);

// Plain matrix, one CSV line per row, optional header.
void write_matrix_csv(const std::string& path, const MatrixXd& values,
                      const std::vector<std::string>& header = {});

// Coefficient files carry the spline space in '#' key=value lines followed by
// the matrix R = [[Z, v], [u^T, 0]] (form=zb) or B (form=b).
void write_zb_coeffs(const std::string& path, const TensorBasisSpec& spec, const ZBCoeffs& c);
void write_b_coeffs(const std::string& path, const TensorBasisSpec& spec, const BCoeffs& c);

struct CoeffFile {
  TensorBasisSpec spec;
  ZBCoeffs coeffs;
};

// Reads a form=zb file.
CoeffFile read_zb_coeffs(const std::string& path);

}  // namespace zbs

#endif  // ZBS_IO_HPP
