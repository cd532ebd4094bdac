// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_LP_HPP_
#define GRIDMEND_LP_HPP_

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace gridmend {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

/// min c'x  s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi.
/// A is stored column-wise; duplicate row entries within a column are summed.
struct LpProblem {
  std::vector<double> cost;
  std::vector<double> col_lo;
  std::vector<double> col_hi;
  std::vector<std::vector<std::pair<int, double>>> columns;
  std::vector<double> row_lo;
  std::vector<double> row_hi;
  std::vector<std::string> col_names;  // optional
  std::vector<std::string> row_names;  // optional

  int num_cols() const { return static_cast<int>(cost.size()); }
  int num_rows() const { return static_cast<int>(row_lo.size()); }

  int add_col(double c, double lo, double hi, std::string name = {});
  int add_row(double lo, double hi, std::string name = {});
  void set_coef(int row, int col, double v);

  /// A x for a full column vector.
  std::vector<double> activity(const std::vector<double>& x) const;
};

enum class VarStatus : unsigned char { kBasic, kAtLower, kAtUpper, kFree, kFixed };

/// Status of the n structural columns followed by the m row slacks.
struct LpBasis {
  std::vector<VarStatus> status;
  bool empty() const { return status.empty(); }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };
std::string to_string(LpStatus s);

struct LpOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int max_iterations = 100000;
  int refactor_every = 100;
  int degenerate_before_bland = 50;
};

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> x;             // structural values
  std::vector<double> row_activity;  // A x
  std::vector<double> duals;         // one per row
  std::vector<double> reduced_costs; // one per column
  LpBasis basis;
  int iterations = 0;
};

/// Bounded-variable primal simplex on a dense explicit basis inverse.
/// `warm` may be empty; an unusable warm basis falls back to the slack basis.
LpResult solve_lp(const LpProblem& p, const LpOptions& opt = {}, const LpBasis& warm = {});

struct LpCertificate {
  double max_primal_violation = 0.0;  // bounds and rows
  double max_dual_violation = 0.0;    // sign-wrong reduced costs
  double max_residual = 0.0;          // |c - A'y - d|
};

/// Recomputes feasibility and reduced-cost optimality of an optimal result
/// from the problem data alone.
LpCertificate certify(const LpProblem& p, const LpResult& r);

/// CPLEX LP text format. Integer columns are listed in a General/Binary
/// section when `integer` is non-empty.
void write_lp_format(std::ostream& os, const LpProblem& p, const std::vector<bool>& integer = {},
                     const std::string& title = {});

}  // namespace gridmend

#endif  // GRIDMEND_LP_HPP_
