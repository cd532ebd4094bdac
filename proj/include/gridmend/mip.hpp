// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_MIP_HPP_
#define GRIDMEND_MIP_HPP_

#include <functional>
#include <optional>
#include <vector>

#include "gridmend/lp.hpp"

namespace gridmend {

struct MipProblem {
  LpProblem lp;               // minimization
  std::vector<bool> integer;  // per column
};

/// An assignment of (some) integer columns tried as a starting incumbent by
/// solving the LP with those columns fixed.
struct MipHint {
  std::vector<std::pair<int, double>> fixed;
};

struct MipOptions {
  int node_limit = 20000;
  double time_limit_s = 2.0;  // <= 0 disables the wall-clock budget
  double gap = 1e-6;          // absolute or relative, whichever is looser
  double integrality_tol = 1e-6;
  LpOptions lp;
  /// Called once with the root relaxation; a returned assignment is tried
  /// as an incumbent before branching.
  std::function<std::optional<MipHint>(const std::vector<double>& root_x)> root_heuristic;
};

enum class MipStatus { kOptimal, kIncumbent, kInfeasible };

struct MipResult {
  MipStatus status = MipStatus::kInfeasible;
  double objective = 0.0;
  double best_bound = 0.0;
  std::vector<double> x;
  int nodes = 0;
  int lp_iterations = 0;
};

/// Best-bound branch-and-bound with most-fractional branching. Children
/// are warm-started from the parent's optimal basis.
MipResult solve_mip(const MipProblem& p, const MipOptions& opt = {},
                    const std::vector<MipHint>& hints = {});

}  // namespace gridmend

#endif  // GRIDMEND_MIP_HPP_
