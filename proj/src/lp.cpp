// SPDX-License-Identifier: Apache-2.0

#include "gridmend/lp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace gridmend {

int LpProblem::add_col(double c, double lo, double hi, std::string name) {
  cost.push_back(c);
  col_lo.push_back(lo);
  col_hi.push_back(hi);
  columns.emplace_back();
  if (!name.empty() || !col_names.empty()) {
    col_names.resize(cost.size() - 1);
    col_names.push_back(std::move(name));
  }
  return num_cols() - 1;
}

int LpProblem::add_row(double lo, double hi, std::string name) {
  row_lo.push_back(lo);
  row_hi.push_back(hi);
  if (!name.empty() || !row_names.empty()) {
    row_names.resize(row_lo.size() - 1);
    row_names.push_back(std::move(name));
  }
  return num_rows() - 1;
}

void LpProblem::set_coef(int row, int col, double v) {
  if (v != 0.0) columns.at(static_cast<size_t>(col)).emplace_back(row, v);
}

std::vector<double> LpProblem::activity(const std::vector<double>& x) const {
  std::vector<double> ax(static_cast<size_t>(num_rows()), 0.0);
  for (int j = 0; j < num_cols(); ++j) {
    for (const auto& [i, v] : columns[static_cast<size_t>(j)]) {
      ax[static_cast<size_t>(i)] += v * x[static_cast<size_t>(j)];
    }
  }
  return ax;
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration_limit";
  }
  return "?";
}

namespace {

using Column = std::vector<std::pair<int, double>>;

// Columns with duplicate row entries merged and explicit zeros dropped.
std::vector<Column> merged_columns(const LpProblem& p) {
  std::vector<Column> out(p.columns.size());
  for (size_t j = 0; j < p.columns.size(); ++j) {
    std::map<int, double> acc;
    for (const auto& [i, v] : p.columns[j]) {
      if (i < 0 || i >= p.num_rows()) throw std::out_of_range("LP coefficient row out of range");
      acc[i] += v;
    }
    for (const auto& [i, v] : acc) {
      if (v != 0.0) out[j].emplace_back(i, v);
    }
  }
  return out;
}

// Structural columns are followed by one slack per row: A x - s = 0 with the
// row bounds moved onto s.
//
// The basis is kept in kernel form. Rows whose slack is basic are dropped;
// what remains is the square block K = A[kernel rows, basic structurals] and
// only K^-1 is stored explicitly. Basic slack values follow from the kernel
// solution, so per-iteration work scales with the number of basic
// structurals rather than the row count.
class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& opt)
      : opt_(opt), n_(p.num_cols()), m_(p.num_rows()), cols_(merged_columns(p)) {
    const int total = n_ + m_;
    lo_.resize(static_cast<size_t>(total));
    hi_.resize(static_cast<size_t>(total));
    cost_.assign(static_cast<size_t>(total), 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = p.col_lo[j];
      hi_[j] = p.col_hi[j];
      cost_[j] = p.cost[j];
      if (lo_[j] > hi_[j]) bound_conflict_ = true;
    }
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = p.row_lo[i];
      hi_[n_ + i] = p.row_hi[i];
      if (lo_[n_ + i] > hi_[n_ + i]) bound_conflict_ = true;
    }
    rows_.resize(static_cast<size_t>(m_));
    for (int j = 0; j < n_; ++j) {
      for (const auto& [i, v] : cols_[j]) rows_[i].emplace_back(j, v);
    }
    x_.assign(static_cast<size_t>(total), 0.0);
    status_.assign(static_cast<size_t>(total), VarStatus::kAtLower);
    stride_ = static_cast<size_t>(std::max(1, std::min(n_, m_)));
    g_.assign(stride_ * stride_, 0.0);
    row_pos_.assign(static_cast<size_t>(m_), -1);
    col_pos_.assign(static_cast<size_t>(n_), -1);
    alpha_r_.assign(static_cast<size_t>(m_), 0.0);
  }

  LpResult run(const LpBasis& warm) {
    LpResult res;
    if (bound_conflict_) {
      res.status = LpStatus::kInfeasible;
      res.x.assign(static_cast<size_t>(n_), 0.0);
      return res;
    }
    if (!load_basis(warm)) slack_basis();
    factor();

    LpStatus status = LpStatus::kIterationLimit;
    int degenerate = 0;
    int since_factor = 0;
    std::vector<double> y(static_cast<size_t>(m_));
    std::vector<std::pair<int, double>> moving;  // (basic variable, alpha)
    int it = 0;
    for (; it < opt_.max_iterations; ++it) {
      if (since_factor >= opt_.refactor_every) {
        factor();
        since_factor = 0;
      }
      // Composite phase-1 costs on infeasible basics, true costs otherwise.
      bool phase1 = false;
      auto infeas_cost = [&](int j) {
        if (x_[j] < lo_[j] - opt_.primal_tol) return -1.0;
        if (x_[j] > hi_[j] + opt_.primal_tol) return 1.0;
        return 0.0;
      };
      for (int j : kcol_) phase1 = phase1 || infeas_cost(j) != 0.0;
      for (int i = 0; i < m_ && !phase1; ++i) {
        if (row_pos_[i] < 0) phase1 = infeas_cost(n_ + i) != 0.0;
      }
      btran(phase1 ? std::function<double(int)>(infeas_cost)
                   : std::function<double(int)>([&](int j) { return cost_[j]; }),
            y);

      const bool bland = degenerate >= opt_.degenerate_before_bland;
      int q = -1;
      double dq = 0.0;
      double best = 0.0;
      for (int j = 0; j < n_ + m_; ++j) {
        const VarStatus s = status_[j];
        if (s == VarStatus::kBasic || s == VarStatus::kFixed) continue;
        const double d = (phase1 ? 0.0 : cost_[j]) - dot_column(y, j);
        bool eligible = false;
        if (s == VarStatus::kAtLower) eligible = d < -opt_.dual_tol;
        else if (s == VarStatus::kAtUpper) eligible = d > opt_.dual_tol;
        else eligible = std::abs(d) > opt_.dual_tol;
        if (!eligible) continue;
        if (bland) {
          q = j;
          dq = d;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          q = j;
          dq = d;
        }
      }
      if (q < 0) {
        status = phase1 ? LpStatus::kInfeasible : LpStatus::kOptimal;
        break;
      }

      const double dir = dq < 0.0 ? 1.0 : -1.0;
      ftran(q);
      moving.clear();
      for (size_t c = 0; c < kcol_.size(); ++c) {
        if (std::abs(alpha_s_[c]) >= opt_.pivot_tol) moving.emplace_back(kcol_[c], alpha_s_[c]);
      }
      for (int i = 0; i < m_; ++i) {
        if (row_pos_[i] < 0 && std::abs(alpha_r_[i]) >= opt_.pivot_tol) {
          moving.emplace_back(n_ + i, alpha_r_[i]);
        }
      }

      // Harris two-pass ratio test. Basic variable j moves at rate -alpha*dir.
      const double flip = hi_[q] - lo_[q];
      double tmax = std::isfinite(flip) ? flip : kLpInf;
      auto limit = [&](int j, double a, bool relaxed, double& target) -> double {
        const double rate = -a * dir;
        const double tol = relaxed ? opt_.primal_tol : 0.0;
        if (rate < 0.0) {
          if (phase1 && x_[j] > hi_[j] + opt_.primal_tol) {
            target = hi_[j];
            return (x_[j] - hi_[j] + tol) / -rate;
          }
          if (x_[j] >= lo_[j] - opt_.primal_tol && std::isfinite(lo_[j])) {
            target = lo_[j];
            return (x_[j] - lo_[j] + tol) / -rate;
          }
        } else if (rate > 0.0) {
          if (phase1 && x_[j] < lo_[j] - opt_.primal_tol) {
            target = lo_[j];
            return (lo_[j] - x_[j] + tol) / rate;
          }
          if (x_[j] <= hi_[j] + opt_.primal_tol && std::isfinite(hi_[j])) {
            target = hi_[j];
            return (hi_[j] - x_[j] + tol) / rate;
          }
        }
        return kLpInf;
      };
      double target = 0.0;
      for (const auto& [j, a] : moving) tmax = std::min(tmax, limit(j, a, true, target));
      if (!std::isfinite(tmax)) {
        status = phase1 ? LpStatus::kInfeasible : LpStatus::kUnbounded;
        break;
      }

      int leave = -1;
      double leave_alpha = 0.0;
      double leave_target = 0.0;
      double step = tmax;
      if (!(std::isfinite(flip) && flip <= tmax)) {
        double best_alpha = 0.0;
        for (const auto& [j, a] : moving) {
          double tgt = 0.0;
          const double t = limit(j, a, false, tgt);
          if (t <= tmax && std::abs(a) > best_alpha) {
            best_alpha = std::abs(a);
            leave = j;
            leave_alpha = a;
            leave_target = tgt;
            step = std::max(t, 0.0);
          }
        }
        if (leave < 0) {
          status = LpStatus::kIterationLimit;
          break;
        }
      } else {
        step = flip;
      }

      x_[q] += dir * step;
      for (const auto& [j, a] : moving) x_[j] -= a * dir * step;
      degenerate = step < 1e-12 ? degenerate + 1 : 0;

      if (leave < 0) {
        status_[q] = dir > 0 ? VarStatus::kAtUpper : VarStatus::kAtLower;
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }
      x_[leave] = leave_target;
      status_[leave] = lo_[leave] == hi_[leave]       ? VarStatus::kFixed
                       : leave_target == lo_[leave]   ? VarStatus::kAtLower
                                                      : VarStatus::kAtUpper;
      status_[q] = VarStatus::kBasic;
      if (!exchange(q, leave, leave_alpha)) {
        factor();
        since_factor = 0;
      } else {
        ++since_factor;
      }
    }

    res.iterations = it;
    res.status = status;
    if (status == LpStatus::kOptimal) {
      factor();  // refresh values after the last pivots
      polish();
    }
    res.x.assign(x_.begin(), x_.begin() + n_);
    res.row_activity.assign(x_.begin() + n_, x_.end());
    for (int j = 0; j < n_; ++j) res.objective += cost_[j] * x_[j];
    res.duals.assign(static_cast<size_t>(m_), 0.0);
    btran([&](int j) { return cost_[j]; }, res.duals);
    res.reduced_costs.resize(static_cast<size_t>(n_));
    for (int j = 0; j < n_; ++j) res.reduced_costs[j] = cost_[j] - dot_column(res.duals, j);
    res.basis.status = status_;
    return res;
  }

 private:
  double& g(size_t c, size_t r) { return g_[c * stride_ + r]; }
  double g(size_t c, size_t r) const { return g_[c * stride_ + r]; }

  void set_nonbasic(int j, VarStatus preferred) {
    const bool lo_ok = std::isfinite(lo_[j]);
    const bool hi_ok = std::isfinite(hi_[j]);
    VarStatus s = preferred;
    if (lo_ok && hi_ok && lo_[j] == hi_[j]) s = VarStatus::kFixed;
    else if (s == VarStatus::kAtUpper && !hi_ok) s = lo_ok ? VarStatus::kAtLower : VarStatus::kFree;
    else if (s == VarStatus::kAtLower && !lo_ok) s = hi_ok ? VarStatus::kAtUpper : VarStatus::kFree;
    else if (s == VarStatus::kFree || s == VarStatus::kFixed || s == VarStatus::kBasic) {
      s = lo_ok ? VarStatus::kAtLower : (hi_ok ? VarStatus::kAtUpper : VarStatus::kFree);
    }
    status_[j] = s;
    x_[j] = s == VarStatus::kFixed || s == VarStatus::kAtLower ? lo_[j]
            : s == VarStatus::kAtUpper                         ? hi_[j]
                                                               : 0.0;
  }

  void slack_basis() {
    for (int j = 0; j < n_; ++j) set_nonbasic(j, VarStatus::kAtLower);
    for (int i = 0; i < m_; ++i) status_[n_ + i] = VarStatus::kBasic;
  }

  bool load_basis(const LpBasis& warm) {
    if (warm.status.size() != static_cast<size_t>(n_ + m_)) return false;
    const auto basic = std::count(warm.status.begin(), warm.status.end(), VarStatus::kBasic);
    if (basic != m_) return false;
    for (int j = 0; j < n_ + m_; ++j) {
      if (warm.status[j] == VarStatus::kBasic) {
        status_[j] = VarStatus::kBasic;
      } else {
        set_nonbasic(j, warm.status[j]);
      }
    }
    return true;
  }

  // Column j of [A  -I] dotted with y.
  double dot_column(const std::vector<double>& y, int j) const {
    if (j >= n_) return -y[j - n_];
    double s = 0.0;
    for (const auto& [i, v] : cols_[j]) s += y[i] * v;
    return s;
  }

  // alpha = B^-1 a_q, split into kernel columns (alpha_s_) and basic slack
  // rows (alpha_r_).
  void ftran(int q) {
    const size_t k = kcol_.size();
    alpha_s_.assign(k, 0.0);
    if (q >= n_) {
      const int r0 = row_pos_[q - n_];
      for (size_t c = 0; c < k; ++c) alpha_s_[c] = -g(c, static_cast<size_t>(r0));
    } else {
      for (const auto& [i, v] : cols_[q]) {
        const int r = row_pos_[i];
        if (r < 0) continue;
        for (size_t c = 0; c < k; ++c) alpha_s_[c] += g(c, static_cast<size_t>(r)) * v;
      }
    }
    std::fill(alpha_r_.begin(), alpha_r_.end(), 0.0);
    for (size_t c = 0; c < k; ++c) {
      if (alpha_s_[c] == 0.0) continue;
      for (const auto& [i, v] : cols_[kcol_[c]]) alpha_r_[i] += v * alpha_s_[c];
    }
    if (q < n_) {
      for (const auto& [i, v] : cols_[q]) alpha_r_[i] -= v;
    }
    for (int i = 0; i < m_; ++i) {
      if (row_pos_[i] >= 0) alpha_r_[i] = 0.0;
    }
  }

  // y' B = c_B.
  template <class Cost>
  void btran(const Cost& cost, std::vector<double>& y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 0; i < m_; ++i) {
      if (row_pos_[i] < 0) y[i] = -cost(n_ + i);
    }
    const size_t k = kcol_.size();
    std::vector<double> rhs(k);
    for (size_t c = 0; c < k; ++c) {
      const int j = kcol_[c];
      double s = cost(j);
      for (const auto& [i, v] : cols_[j]) {
        if (row_pos_[i] < 0) s -= v * y[i];
      }
      rhs[c] = s;
    }
    for (size_t c = 0; c < k; ++c) {
      if (rhs[c] == 0.0) continue;
      const double* gr = &g_[c * stride_];
      for (size_t r = 0; r < k; ++r) y[krow_[r]] += rhs[c] * gr[r];
    }
  }

  // z[r] = sum_c A[row, kcol_c] * G[c][r]
  void row_times_g(int row, std::vector<double>& z) const {
    const size_t k = kcol_.size();
    z.assign(k, 0.0);
    for (const auto& [j, v] : rows_[row]) {
      const int c = col_pos_[j];
      if (c < 0) continue;
      const double* gr = &g_[static_cast<size_t>(c) * stride_];
      for (size_t r = 0; r < k; ++r) z[r] += v * gr[r];
    }
  }

  // Basis exchange: q enters, `leave` exits. Returns false when the update
  // is numerically unsafe and a refactorization is needed instead.
  bool exchange(int q, int leave, double pivot) {
    if (std::abs(pivot) < 1e-11) {
      rebuild_maps_from_status();
      return false;
    }
    const size_t k = kcol_.size();
    if (q < n_ && leave < n_) {
      // Column replacement.
      const size_t p = static_cast<size_t>(col_pos_[leave]);
      double* gp = &g_[p * stride_];
      const double inv = 1.0 / alpha_s_[p];
      for (size_t r = 0; r < k; ++r) gp[r] *= inv;
      for (size_t c = 0; c < k; ++c) {
        if (c == p || alpha_s_[c] == 0.0) continue;
        double* gc = &g_[c * stride_];
        const double f = alpha_s_[c];
        for (size_t r = 0; r < k; ++r) gc[r] -= f * gp[r];
      }
      kcol_[p] = q;
      col_pos_[leave] = -1;
      col_pos_[q] = static_cast<int>(p);
      return true;
    }
    if (q < n_) {
      // Slack of row i1 leaves: border K with row i1 and column q.
      const int i1 = leave - n_;
      if (k >= stride_) {
        rebuild_maps_from_status();
        return false;
      }
      const double s = -alpha_r_[i1];
      std::vector<double> z;
      row_times_g(i1, z);
      for (size_t c = 0; c < k; ++c) {
        double* gc = &g_[c * stride_];
        const double f = alpha_s_[c] / s;
        if (f != 0.0) {
          for (size_t r = 0; r < k; ++r) gc[r] += f * z[r];
        }
        gc[k] = -f;
      }
      double* gn = &g_[k * stride_];
      for (size_t r = 0; r < k; ++r) gn[r] = -z[r] / s;
      gn[k] = 1.0 / s;
      kcol_.push_back(q);
      krow_.push_back(i1);
      col_pos_[q] = static_cast<int>(k);
      row_pos_[i1] = static_cast<int>(k);
      return true;
    }
    const int i0 = q - n_;
    const size_t r0 = static_cast<size_t>(row_pos_[i0]);
    if (leave < n_) {
      // Slack of kernel row i0 enters, structural leaves: shrink K.
      const size_t p = static_cast<size_t>(col_pos_[leave]);
      const double gp0 = g(p, r0);
      if (std::abs(gp0) < 1e-11) {
        rebuild_maps_from_status();
        return false;
      }
      for (size_t c = 0; c < k; ++c) {
        if (c == p) continue;
        const double f = g(c, r0) / gp0;
        if (f == 0.0) continue;
        double* gc = &g_[c * stride_];
        const double* gpr = &g_[p * stride_];
        for (size_t r = 0; r < k; ++r) gc[r] -= f * gpr[r];
      }
      const size_t last = k - 1;
      // Move the last kernel column into slot p and the last row into r0.
      if (p != last) {
        std::copy_n(&g_[last * stride_], k, &g_[p * stride_]);
        kcol_[p] = kcol_[last];
        col_pos_[kcol_[p]] = static_cast<int>(p);
      }
      if (r0 != last) {
        for (size_t c = 0; c < last; ++c) g(c, r0) = g(c, last);
        krow_[r0] = krow_[last];
        row_pos_[krow_[r0]] = static_cast<int>(r0);
      }
      kcol_.pop_back();
      krow_.pop_back();
      col_pos_[leave] = -1;
      row_pos_[i0] = -1;
      return true;
    }
    // Slack swap: kernel row i0 is replaced by row i1.
    const int i1 = leave - n_;
    std::vector<double> z;
    row_times_g(i1, z);
    const double d = z[r0];
    if (std::abs(d) < 1e-11) {
      rebuild_maps_from_status();
      return false;
    }
    z[r0] -= 1.0;
    std::vector<double> col(k);
    for (size_t c = 0; c < k; ++c) col[c] = g(c, r0);
    for (size_t c = 0; c < k; ++c) {
      const double f = col[c] / d;
      if (f == 0.0) continue;
      double* gc = &g_[c * stride_];
      for (size_t r = 0; r < k; ++r) gc[r] -= f * z[r];
    }
    krow_[r0] = i1;
    row_pos_[i0] = -1;
    row_pos_[i1] = static_cast<int>(r0);
    return true;
  }

  void rebuild_maps_from_status() {
    kcol_.clear();
    krow_.clear();
    std::fill(col_pos_.begin(), col_pos_.end(), -1);
    std::fill(row_pos_.begin(), row_pos_.end(), -1);
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::kBasic) {
        col_pos_[j] = static_cast<int>(kcol_.size());
        kcol_.push_back(j);
      }
    }
    for (int i = 0; i < m_; ++i) {
      if (status_[n_ + i] != VarStatus::kBasic) {
        row_pos_[i] = static_cast<int>(krow_.size());
        krow_.push_back(i);
      }
    }
  }

  // Gauss-Jordan inverse of the kernel. Dependent columns are swapped for
  // the slacks of the rows they failed to cover.
  void factor() {
    for (int attempt = 0; attempt <= m_; ++attempt) {
      rebuild_maps_from_status();
      const size_t k = kcol_.size();
      if (k != krow_.size()) throw std::logic_error("simplex basis has the wrong size");
      std::vector<double> M(k * k, 0.0);  // M[r][c] = A[krow_r, kcol_c]
      for (size_t c = 0; c < k; ++c) {
        for (const auto& [i, v] : cols_[kcol_[c]]) {
          const int r = row_pos_[i];
          if (r >= 0) M[static_cast<size_t>(r) * k + c] = v;
        }
      }
      std::vector<double> E(k * k, 0.0);
      for (size_t r = 0; r < k; ++r) E[r * k + r] = 1.0;
      std::vector<int> pivot_row(k, -1);
      std::vector<char> row_used(k, 0);
      std::vector<int> dropped;
      for (size_t c = 0; c < k; ++c) {
        size_t pr = k;
        double best = 1e-11;
        for (size_t r = 0; r < k; ++r) {
          if (row_used[r]) continue;
          const double a = std::abs(M[r * k + c]);
          if (a > best) {
            best = a;
            pr = r;
          }
        }
        if (pr == k) {
          dropped.push_back(kcol_[c]);
          continue;
        }
        row_used[pr] = 1;
        pivot_row[c] = static_cast<int>(pr);
        const double inv = 1.0 / M[pr * k + c];
        double* mr = &M[pr * k];
        double* er = &E[pr * k];
        for (size_t t = 0; t < k; ++t) {
          mr[t] *= inv;
          er[t] *= inv;
        }
        for (size_t r = 0; r < k; ++r) {
          if (r == pr) continue;
          const double f = M[r * k + c];
          if (f == 0.0) continue;
          double* mi = &M[r * k];
          double* ei = &E[r * k];
          for (size_t t = c; t < k; ++t) mi[t] -= f * mr[t];
          for (size_t t = 0; t < k; ++t) ei[t] -= f * er[t];
        }
      }
      if (dropped.empty()) {
        // Row pr of E is row c of K^-1.
        for (size_t c = 0; c < k; ++c) {
          std::copy_n(&E[static_cast<size_t>(pivot_row[c]) * k], k, &g_[c * stride_]);
        }
        recompute_basic();
        return;
      }
      for (int j : dropped) set_nonbasic(j, VarStatus::kAtLower);
      for (size_t r = 0; r < k; ++r) {
        if (!row_used[r]) status_[n_ + krow_[r]] = VarStatus::kBasic;
      }
    }
    throw std::logic_error("simplex basis could not be repaired");
  }

  // Basic values from the nonbasic ones: B x_B = -(N x_N).
  void recompute_basic() {
    std::vector<double> w(static_cast<size_t>(m_), 0.0);
    for (int j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::kBasic || x_[j] == 0.0) continue;
      if (j >= n_) {
        w[j - n_] -= x_[j];
      } else {
        for (const auto& [r, v] : cols_[j]) w[r] += v * x_[j];
      }
    }
    const size_t k = kcol_.size();
    for (size_t c = 0; c < k; ++c) {
      const double* gr = &g_[c * stride_];
      double s = 0.0;
      for (size_t r = 0; r < k; ++r) s -= gr[r] * w[krow_[r]];
      x_[kcol_[c]] = s;
    }
    // Basic slack i equals row activity.
    std::vector<double> act(static_cast<size_t>(m_), 0.0);
    for (int j = 0; j < n_; ++j) {
      if (x_[j] == 0.0) continue;
      for (const auto& [r, v] : cols_[j]) act[r] += v * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      if (row_pos_[i] < 0) x_[n_ + i] = act[i];
    }
  }

  // Snap basic values that sit within tolerance of a bound.
  void polish() {
    auto snap = [&](int j) {
      if (x_[j] < lo_[j] && x_[j] > lo_[j] - opt_.primal_tol) x_[j] = lo_[j];
      if (x_[j] > hi_[j] && x_[j] < hi_[j] + opt_.primal_tol) x_[j] = hi_[j];
    };
    for (int j : kcol_) snap(j);
    for (int i = 0; i < m_; ++i) {
      if (row_pos_[i] < 0) snap(n_ + i);
    }
  }

  LpOptions opt_;
  int n_;
  int m_;
  std::vector<Column> cols_;
  std::vector<Column> rows_;  // (column, value) per row
  std::vector<double> lo_, hi_, cost_, x_;
  std::vector<VarStatus> status_;
  // Kernel: K[r][c] = A[krow_[r], kcol_[c]]; g_ holds K^-1 indexed [c][r].
  std::vector<int> kcol_, krow_;
  std::vector<int> col_pos_, row_pos_;
  size_t stride_ = 1;
  std::vector<double> g_;
  std::vector<double> alpha_s_, alpha_r_;
  bool bound_conflict_ = false;
};

}  // namespace

LpResult solve_lp(const LpProblem& p, const LpOptions& opt, const LpBasis& warm) {
  if (p.col_lo.size() != p.cost.size() || p.col_hi.size() != p.cost.size() ||
      p.columns.size() != p.cost.size() || p.row_hi.size() != p.row_lo.size()) {
    throw std::invalid_argument("LP problem arrays have inconsistent sizes");
  }
  Simplex s(p, opt);
  return s.run(warm);
}

LpCertificate certify(const LpProblem& p, const LpResult& r) {
  LpCertificate c;
  const double tol = 1e-8;
  const auto ax = p.activity(r.x);
  auto viol = [](double v, double lo, double hi) {
    return std::max({0.0, lo - v, v - hi});
  };
  for (int j = 0; j < p.num_cols(); ++j) {
    c.max_primal_violation = std::max(c.max_primal_violation, viol(r.x[j], p.col_lo[j], p.col_hi[j]));
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    c.max_primal_violation = std::max(c.max_primal_violation, viol(ax[i], p.row_lo[i], p.row_hi[i]));
  }
  // Reduced costs from the duals, then complementary slackness by position.
  for (int j = 0; j < p.num_cols(); ++j) {
    double d = p.cost[j];
    for (const auto& [i, v] : p.columns[j]) d -= r.duals[i] * v;
    c.max_residual = std::max(c.max_residual, std::abs(d - r.reduced_costs[j]));
    if (r.x[j] > p.col_lo[j] + tol) c.max_dual_violation = std::max(c.max_dual_violation, d);
    if (r.x[j] < p.col_hi[j] - tol) c.max_dual_violation = std::max(c.max_dual_violation, -d);
  }
  for (int i = 0; i < p.num_rows(); ++i) {
    // The slack s_i = (A x)_i has reduced cost y_i.
    const double d = r.duals[i];
    if (ax[i] > p.row_lo[i] + tol) c.max_dual_violation = std::max(c.max_dual_violation, d);
    if (ax[i] < p.row_hi[i] - tol) c.max_dual_violation = std::max(c.max_dual_violation, -d);
  }
  return c;
}

namespace {

std::string lp_name(const std::vector<std::string>& names, int k, char prefix) {
  std::string s;
  if (static_cast<size_t>(k) < names.size() && !names[k].empty()) {
    for (char ch : names[k]) {
      const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.';
      s.push_back(ok ? ch : '_');
    }
    if (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.') s.insert(s.begin(), '_');
  } else {
    s = fmt::format("{}{}", prefix, k);
  }
  return s;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

void write_terms(std::ostream& os, const std::vector<std::pair<int, double>>& terms,
                 const std::vector<std::string>& names, const std::string& fallback) {
  if (terms.empty()) {
    os << " 0 " << fallback;
    return;
  }
  int count = 0;
  for (const auto& [j, v] : terms) {
    os << (v < 0 ? " - " : " + ") << num(std::abs(v)) << ' ' << names[j];
    if (++count % 6 == 0) os << "\n  ";
  }
}

}  // namespace

void write_lp_format(std::ostream& os, const LpProblem& p, const std::vector<bool>& integer,
                     const std::string& title) {
  std::vector<std::string> cn(static_cast<size_t>(p.num_cols()));
  for (int j = 0; j < p.num_cols(); ++j) cn[j] = lp_name(p.col_names, j, 'x');
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<size_t>(p.num_rows()));
  for (int j = 0; j < p.num_cols(); ++j) {
    for (const auto& [i, v] : p.columns[j]) rows[i].emplace_back(j, v);
  }
  const std::string fallback = cn.empty() ? "x0" : cn[0];

  if (!title.empty()) os << "\\ " << title << '\n';
  os << "Minimize\n obj:";
  std::vector<std::pair<int, double>> obj;
  for (int j = 0; j < p.num_cols(); ++j) {
    if (p.cost[j] != 0.0) obj.emplace_back(j, p.cost[j]);
  }
  write_terms(os, obj, cn, fallback);
  os << "\nSubject To\n";
  for (int i = 0; i < p.num_rows(); ++i) {
    const std::string name = lp_name(p.row_names, i, 'r');
    const double lo = p.row_lo[i];
    const double hi = p.row_hi[i];
    if (lo == hi) {
      os << ' ' << name << ':';
      write_terms(os, rows[i], cn, fallback);
      os << " = " << num(lo) << '\n';
      continue;
    }
    if (std::isfinite(lo)) {
      os << ' ' << name << (std::isfinite(hi) ? "_lo" : "") << ':';
      write_terms(os, rows[i], cn, fallback);
      os << " >= " << num(lo) << '\n';
    }
    if (std::isfinite(hi)) {
      os << ' ' << name << (std::isfinite(lo) ? "_hi" : "") << ':';
      write_terms(os, rows[i], cn, fallback);
      os << " <= " << num(hi) << '\n';
    }
  }
  os << "Bounds\n";
  for (int j = 0; j < p.num_cols(); ++j) {
    const double lo = p.col_lo[j];
    const double hi = p.col_hi[j];
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      os << ' ' << cn[j] << " free\n";
    } else if (lo == hi) {
      os << ' ' << cn[j] << " = " << num(lo) << '\n';
    } else {
      os << ' ' << (std::isfinite(lo) ? num(lo) : "-inf") << " <= " << cn[j] << " <= "
         << (std::isfinite(hi) ? num(hi) : "+inf") << '\n';
    }
  }
  bool any = false;
  for (int j = 0; j < p.num_cols() && static_cast<size_t>(j) < integer.size(); ++j) {
    if (!integer[j]) continue;
    if (!any) os << "General\n";
    any = true;
    os << ' ' << cn[j] << '\n';
  }
  os << "End\n";
}

}  // namespace gridmend
