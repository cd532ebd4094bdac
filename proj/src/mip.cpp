// SPDX-License-Identifier: Apache-2.0

#include "gridmend/mip.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace gridmend {

namespace {

struct BoundChange {
  int col;
  double lo;
  double hi;
};

struct Node {
  double bound;
  long id;
  std::vector<BoundChange> changes;
  std::shared_ptr<const LpBasis> basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    return std::tie(a.bound, a.id) > std::tie(b.bound, b.id);
  }
};

class BoundScope {
 public:
  BoundScope(LpProblem& lp, const std::vector<BoundChange>& changes) : lp_(lp) {
    for (const auto& c : changes) {
      saved_.push_back({c.col, lp_.col_lo[c.col], lp_.col_hi[c.col]});
      lp_.col_lo[c.col] = std::max(lp_.col_lo[c.col], c.lo);
      lp_.col_hi[c.col] = std::min(lp_.col_hi[c.col], c.hi);
    }
  }
  ~BoundScope() {
    for (auto it = saved_.rbegin(); it != saved_.rend(); ++it) {
      lp_.col_lo[it->col] = it->lo;
      lp_.col_hi[it->col] = it->hi;
    }
  }
  BoundScope(const BoundScope&) = delete;
  BoundScope& operator=(const BoundScope&) = delete;

 private:
  LpProblem& lp_;
  std::vector<BoundChange> saved_;
};

}  // namespace

MipResult solve_mip(const MipProblem& p, const MipOptions& opt, const std::vector<MipHint>& hints) {
  const int n = p.lp.num_cols();
  if (p.integer.size() != static_cast<size_t>(n)) {
    throw std::invalid_argument("integer flags must cover every column");
  }
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto out_of_time = [&] {
    if (opt.time_limit_s <= 0.0) return false;
    return std::chrono::duration<double>(Clock::now() - start).count() > opt.time_limit_s;
  };

  LpProblem work = p.lp;
  MipResult res;
  double incumbent = kLpInf;
  auto tolerance = [&](double obj) { return std::max(opt.gap, opt.gap * std::abs(obj)); };

  auto most_fractional = [&](const std::vector<double>& x) {
    int best = -1;
    double best_score = opt.integrality_tol;
    for (int j = 0; j < n; ++j) {
      if (!p.integer[j]) continue;
      const double f = x[j] - std::floor(x[j]);
      const double score = std::min(f, 1.0 - f);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  };
  auto accept = [&](const LpResult& r) {
    if (r.objective >= incumbent) return;
    incumbent = r.objective;
    res.x = r.x;
    for (int j = 0; j < n; ++j) {
      if (p.integer[j]) res.x[j] = std::round(res.x[j]);
    }
  };

  auto try_hint = [&](const MipHint& h, const LpBasis& warm) {
    std::vector<BoundChange> fix;
    for (const auto& [col, v] : h.fixed) fix.push_back({col, v, v});
    BoundScope scope(work, fix);
    const LpResult r = solve_lp(work, opt.lp, warm);
    res.lp_iterations += r.iterations;
    if (r.status == LpStatus::kOptimal && most_fractional(r.x) < 0) accept(r);
  };
  for (const auto& h : hints) try_hint(h, LpBasis{});
  bool root = true;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push(Node{-kLpInf, next_id++, {}, nullptr});
  double unresolved = kLpInf;  // best bound of subtrees dropped without a verdict
  while (!open.empty()) {
    if (res.nodes >= opt.node_limit || out_of_time()) break;
    Node node = open.top();
    open.pop();
    if (node.bound >= incumbent - tolerance(incumbent)) continue;

    LpResult r;
    {
      BoundScope scope(work, node.changes);
      r = solve_lp(work, opt.lp, node.basis ? *node.basis : LpBasis{});
    }
    ++res.nodes;
    res.lp_iterations += r.iterations;
    if (r.status == LpStatus::kInfeasible) continue;
    if (r.status != LpStatus::kOptimal) {
      unresolved = std::min(unresolved, node.bound);
      continue;
    }
    if (root && opt.root_heuristic) {
      if (auto h = opt.root_heuristic(r.x)) try_hint(*h, r.basis);
    }
    root = false;
    if (r.objective >= incumbent - tolerance(incumbent)) continue;
    const int j = most_fractional(r.x);
    if (j < 0) {
      accept(r);
      continue;
    }
    auto basis = std::make_shared<const LpBasis>(r.basis);
    const double down = std::floor(r.x[j]);
    Node left{r.objective, next_id++, node.changes, basis};
    left.changes.push_back({j, -kLpInf, down});
    Node right{r.objective, next_id++, std::move(node.changes), basis};
    right.changes.push_back({j, down + 1.0, kLpInf});
    open.push(std::move(left));
    open.push(std::move(right));
  }

  if (!std::isfinite(incumbent)) {
    res.status = MipStatus::kInfeasible;
    res.best_bound = kLpInf;
    return res;
  }
  res.objective = incumbent;
  double bound = std::min(incumbent, unresolved);
  if (!open.empty()) bound = std::min(bound, open.top().bound);
  res.best_bound = bound;
  res.status = incumbent - bound <= tolerance(incumbent) ? MipStatus::kOptimal
                                                          : MipStatus::kIncumbent;
  return res;
}

}  // namespace gridmend
