#pragma once

// Dense two-phase primal simplex (Bland's rule) with dual extraction from
// the final basis. Sized for market-coupling problems with tens of rows.
//
// Problem form: maximize c'x subject to rows a_i'x {<=,=,>=} b_i, each
// variable either x >= 0 or free. Dual sign convention (for maximize):
// y_i >= 0 on <= rows, y_i <= 0 on >= rows, free on = rows, and
// A'y >= c on nonnegative columns, A'y = c on free columns.

#include <string>
#include <utility>
#include <vector>

namespace fbc::lp {

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

enum class Status { kOptimal, kInfeasible, kUnbounded };

struct Column {
  double objective = 0.0;
  bool free = false;
  std::string name;
};

struct Row {
  std::vector<std::pair<int, double>> coefficients;
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
  std::string name;
};

class LinearProgram {
 public:
  int add_column(double objective, bool free = false, std::string name = {});
  int add_row(std::vector<std::pair<int, double>> coefficients, RowSense sense, double rhs,
              std::string name = {});

  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::vector<Column>& columns() { return columns_; }
  std::vector<Row>& rows() { return rows_; }

  double row_activity(int row, const std::vector<double>& x) const;

 private:
  std::vector<Column> columns_;
  std::vector<Row> rows_;
};

struct Solution {
  Status status = Status::kInfeasible;
  std::vector<double> x;
  std::vector<double> duals;  // one per row
  double objective = 0.0;
  double dual_objective = 0.0;
};

Solution maximize(const LinearProgram& program);

/// The explicit dual: minimize b'y, returned as a maximization of -b'y.
/// Column i of the result is y_i; rows follow the primal columns.
LinearProgram dual_of(const LinearProgram& primal);

}  // namespace fbc::lp
