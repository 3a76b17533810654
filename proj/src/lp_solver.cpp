#include "fbc/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fbc/error.hpp"

namespace fbc::lp {

namespace {

constexpr double kPivotEps = 1e-9;
constexpr double kCostEps = 1e-9;

enum class Phase { kOne, kTwo };

struct Tableau {
  // m rows; columns [0, n) are structural + slack + artificial; column n is rhs.
  Eigen::MatrixXd t;
  std::vector<int> basis;
  int n = 0;

  void pivot(int row, int col) {
    t.row(row) /= t(row, col);
    for (int i = 0; i < t.rows(); ++i) {
      if (i == row) continue;
      const double f = t(i, col);
      if (f != 0.0) t.row(i) -= f * t.row(row);
    }
    basis[static_cast<std::size_t>(row)] = col;
  }
};

// Bland's rule simplex on a canonical tableau. Returns false on unboundedness.
bool run_simplex(Tableau& tab, const std::vector<double>& cost, const std::vector<bool>& allowed) {
  const int m = static_cast<int>(tab.t.rows());
  // Finite guard; Bland's rule cannot cycle, so this only trips on numerical trouble.
  const int max_iterations = 50000;
  for (int it = 0; it < max_iterations; ++it) {
    int entering = -1;
    for (int j = 0; j < tab.n && entering < 0; ++j) {
      if (!allowed[static_cast<std::size_t>(j)]) continue;
      double reduced = cost[static_cast<std::size_t>(j)];
      for (int i = 0; i < m; ++i)
        reduced -= cost[static_cast<std::size_t>(tab.basis[static_cast<std::size_t>(i)])] * tab.t(i, j);
      if (reduced > kCostEps) entering = j;
    }
    if (entering < 0) return true;

    int leaving = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double a = tab.t(i, entering);
      if (a <= kPivotEps) continue;
      const double ratio = tab.t(i, tab.n) / a;
      if (ratio < best_ratio - 1e-12 ||
          (std::abs(ratio - best_ratio) <= 1e-12 && leaving >= 0 &&
           tab.basis[static_cast<std::size_t>(i)] < tab.basis[static_cast<std::size_t>(leaving)])) {
        best_ratio = ratio;
        leaving = i;
      }
    }
    if (leaving < 0) return false;
    tab.pivot(leaving, entering);
  }
  throw Error(ErrorCode::kInfeasible, "simplex iteration limit reached");
}

}  // namespace

int LinearProgram::add_column(double objective, bool free, std::string name) {
  columns_.push_back({objective, free, std::move(name)});
  return static_cast<int>(columns_.size()) - 1;
}

int LinearProgram::add_row(std::vector<std::pair<int, double>> coefficients, RowSense sense,
                           double rhs, std::string name) {
  rows_.push_back({std::move(coefficients), sense, rhs, std::move(name)});
  return static_cast<int>(rows_.size()) - 1;
}

double LinearProgram::row_activity(int row, const std::vector<double>& x) const {
  double s = 0.0;
  for (const auto& [j, a] : rows_[static_cast<std::size_t>(row)].coefficients)
    s += a * x[static_cast<std::size_t>(j)];
  return s;
}

Solution maximize(const LinearProgram& program) {
  const auto& cols = program.columns();
  const auto& rows = program.rows();
  const int m = static_cast<int>(rows.size());

  // Standard-form column map: free columns split into (+, -).
  std::vector<int> plus_col(cols.size()), minus_col(cols.size(), -1);
  int n_struct = 0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    plus_col[j] = n_struct++;
    if (cols[j].free) minus_col[j] = n_struct++;
  }

  std::vector<bool> flipped(static_cast<std::size_t>(m), false);
  std::vector<RowSense> sense(static_cast<std::size_t>(m));
  int n_slack = 0, n_art = 0;
  for (int i = 0; i < m; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    RowSense s = r.sense;
    if (r.rhs < 0.0) {
      flipped[static_cast<std::size_t>(i)] = true;
      if (s == RowSense::kLessEqual) s = RowSense::kGreaterEqual;
      else if (s == RowSense::kGreaterEqual) s = RowSense::kLessEqual;
    }
    sense[static_cast<std::size_t>(i)] = s;
    if (s != RowSense::kEqual) ++n_slack;
    if (s != RowSense::kLessEqual) ++n_art;
  }

  const int n = n_struct + n_slack + n_art;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd b(m);
  Tableau tab;
  tab.n = n;
  tab.basis.assign(static_cast<std::size_t>(m), -1);
  std::vector<bool> is_artificial(static_cast<std::size_t>(n), false);

  int next_slack = n_struct, next_art = n_struct + n_slack;
  for (int i = 0; i < m; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    const double sign = flipped[static_cast<std::size_t>(i)] ? -1.0 : 1.0;
    for (const auto& [j, coef] : r.coefficients) {
      a(i, plus_col[static_cast<std::size_t>(j)]) += sign * coef;
      if (minus_col[static_cast<std::size_t>(j)] >= 0)
        a(i, minus_col[static_cast<std::size_t>(j)]) -= sign * coef;
    }
    b(i) = sign * r.rhs;
    switch (sense[static_cast<std::size_t>(i)]) {
      case RowSense::kLessEqual:
        a(i, next_slack) = 1.0;
        tab.basis[static_cast<std::size_t>(i)] = next_slack++;
        break;
      case RowSense::kGreaterEqual:
        a(i, next_slack++) = -1.0;
        a(i, next_art) = 1.0;
        is_artificial[static_cast<std::size_t>(next_art)] = true;
        tab.basis[static_cast<std::size_t>(i)] = next_art++;
        break;
      case RowSense::kEqual:
        a(i, next_art) = 1.0;
        is_artificial[static_cast<std::size_t>(next_art)] = true;
        tab.basis[static_cast<std::size_t>(i)] = next_art++;
        break;
    }
  }

  tab.t.resize(m, n + 1);
  tab.t.leftCols(n) = a;
  tab.t.col(n) = b;

  Solution sol;
  std::vector<bool> allowed(static_cast<std::size_t>(n), true);

  if (n_art > 0) {
    std::vector<double> phase1(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j)
      if (is_artificial[static_cast<std::size_t>(j)]) phase1[static_cast<std::size_t>(j)] = -1.0;
    run_simplex(tab, phase1, allowed);
    double infeasibility = 0.0;
    for (int i = 0; i < m; ++i)
      if (is_artificial[static_cast<std::size_t>(tab.basis[static_cast<std::size_t>(i)])])
        infeasibility += tab.t(i, n);
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    if (infeasibility > 1e-8 * scale) {
      sol.status = Status::kInfeasible;
      return sol;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (!is_artificial[static_cast<std::size_t>(tab.basis[static_cast<std::size_t>(i)])]) continue;
      for (int j = 0; j < n; ++j) {
        if (!is_artificial[static_cast<std::size_t>(j)] && std::abs(tab.t(i, j)) > kPivotEps) {
          tab.pivot(i, j);
          break;
        }
      }
    }
    for (int j = 0; j < n; ++j)
      if (is_artificial[static_cast<std::size_t>(j)]) allowed[static_cast<std::size_t>(j)] = false;
  }

  std::vector<double> cost(static_cast<std::size_t>(n), 0.0);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    cost[static_cast<std::size_t>(plus_col[j])] = cols[j].objective;
    if (minus_col[j] >= 0) cost[static_cast<std::size_t>(minus_col[j])] = -cols[j].objective;
  }
  if (!run_simplex(tab, cost, allowed)) {
    sol.status = Status::kUnbounded;
    return sol;
  }

  // Refine primal and dual values from the final basis.
  Eigen::MatrixXd basis_matrix(m, m);
  Eigen::VectorXd basis_cost(m);
  for (int i = 0; i < m; ++i) {
    const int col = tab.basis[static_cast<std::size_t>(i)];
    basis_matrix.col(i) = a.col(col);
    basis_cost(i) = cost[static_cast<std::size_t>(col)];
  }
  Eigen::VectorXd x_basic(m), y_std(m);
  if (m > 0) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix);
    x_basic = lu.solve(b);
    y_std = lu.transpose().solve(basis_cost);
  }

  std::vector<double> x_std(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < m; ++i)
    x_std[static_cast<std::size_t>(tab.basis[static_cast<std::size_t>(i)])] = std::max(0.0, x_basic(i));

  sol.status = Status::kOptimal;
  sol.x.resize(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    double v = x_std[static_cast<std::size_t>(plus_col[j])];
    if (minus_col[j] >= 0) v -= x_std[static_cast<std::size_t>(minus_col[j])];
    sol.x[j] = v;
    sol.objective += cols[j].objective * v;
  }
  sol.duals.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double y = flipped[static_cast<std::size_t>(i)] ? -y_std(i) : y_std(i);
    sol.duals[static_cast<std::size_t>(i)] = y;
    sol.dual_objective += y * rows[static_cast<std::size_t>(i)].rhs;
  }
  return sol;
}

LinearProgram dual_of(const LinearProgram& primal) {
  LinearProgram dual;
  const auto& rows = primal.rows();
  std::vector<double> sign(rows.size(), 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    // y_i <= 0 on >= rows is carried as the nonnegative variable -y_i.
    if (r.sense == RowSense::kGreaterEqual) sign[i] = -1.0;
    dual.add_column(-sign[i] * r.rhs, r.sense == RowSense::kEqual, r.name);
  }
  std::vector<std::vector<std::pair<int, double>>> by_column(primal.columns().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& [j, coef] : rows[i].coefficients)
      by_column[static_cast<std::size_t>(j)].emplace_back(static_cast<int>(i), sign[i] * coef);
  for (std::size_t j = 0; j < primal.columns().size(); ++j) {
    const Column& c = primal.columns()[j];
    dual.add_row(by_column[j], c.free ? RowSense::kEqual : RowSense::kGreaterEqual, c.objective,
                 c.name);
  }
  return dual;
}

}  // namespace fbc::lp
