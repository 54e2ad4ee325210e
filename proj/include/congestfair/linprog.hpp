#pragma once

#include <vector>

#include "congestfair/error.hpp"
#include "congestfair/rational.hpp"

namespace congestfair::detail {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  std::vector<Rational> x;
  Rational value;
};

// Dense two-phase simplex over exact rationals with Bland's rule.
// maximize c.x subject to A x <= b, x >= 0. Problems here have a handful of
// variables and constraints, so simplicity beats sparsity.
class Simplex {
 public:
  LpResult maximize(const std::vector<std::vector<Rational>>& A,
                    const std::vector<Rational>& b,
                    const std::vector<Rational>& c) {
    rows_ = static_cast<int>(A.size());
    structural_ = static_cast<int>(c.size());
    int slack = rows_;
    artificial_start_ = structural_ + slack;
    int artificial = 0;
    for (int i = 0; i < rows_; ++i)
      if (b[i] < 0) ++artificial;
    cols_ = structural_ + slack + artificial;

    tab_.assign(rows_, std::vector<Rational>(cols_, Rational(0)));
    rhs_.assign(rows_, Rational(0));
    basis_.assign(rows_, -1);
    int next_artificial = artificial_start_;
    for (int i = 0; i < rows_; ++i) {
      bool flip = b[i] < 0;
      for (int j = 0; j < structural_; ++j)
        tab_[i][j] = flip ? -A[i][j] : A[i][j];
      tab_[i][structural_ + i] = flip ? Rational(-1) : Rational(1);
      rhs_[i] = flip ? -b[i] : b[i];
      if (flip) {
        int a = next_artificial++;
        tab_[i][a] = 1;
        basis_[i] = a;
      } else {
        basis_[i] = structural_ + i;
      }
    }

    if (artificial > 0) {
      // Phase 1: maximize -(sum of artificials).
      cost_.assign(cols_, Rational(0));
      cost_value_ = 0;
      for (int j = artificial_start_; j < cols_; ++j) cost_[j] = -1;
      for (int i = 0; i < rows_; ++i)
        if (basis_[i] >= artificial_start_) add_row_to_cost(i, Rational(1));
      if (!run(/*allow_artificial=*/true)) return {LpStatus::unbounded, {}, 0};
      if (cost_value_ != 0) return {LpStatus::infeasible, {}, 0};
      purge_artificials();
    }

    // Phase 2 on the original objective.
    cost_.assign(cols_, Rational(0));
    cost_value_ = 0;
    for (int j = 0; j < structural_; ++j) cost_[j] = c[j];
    for (int i = 0; i < rows_; ++i)
      if (cost_[basis_[i]] != 0) add_row_to_cost(i, -cost_[basis_[i]]);
    if (!run(/*allow_artificial=*/false)) return {LpStatus::unbounded, {}, 0};

    LpResult res;
    res.status = LpStatus::optimal;
    res.value = cost_value_;
    res.x.assign(structural_, Rational(0));
    for (int i = 0; i < rows_; ++i)
      if (basis_[i] < structural_) res.x[basis_[i]] = rhs_[i];
    return res;
  }

 private:
  // Adds factor * (constraint row) to the z-row while preserving the
  // invariant z(x) = cost_value_ + cost_ . x on the feasible set.
  void add_row_to_cost(int row, const Rational& factor) {
    for (int j = 0; j < cols_; ++j) cost_[j] += factor * tab_[row][j];
    cost_value_ -= factor * rhs_[row];
  }

  void pivot(int row, int col) {
    Rational inv = Rational(1) / tab_[row][col];
    for (int j = 0; j < cols_; ++j) tab_[row][j] *= inv;
    rhs_[row] *= inv;
    tab_[row][col] = 1;  // guard against drift; exact anyway
    for (int i = 0; i < rows_; ++i) {
      if (i == row || tab_[i][col] == 0) continue;
      Rational f = tab_[i][col];
      for (int j = 0; j < cols_; ++j) tab_[i][j] -= f * tab_[row][j];
      rhs_[i] -= f * rhs_[row];
      tab_[i][col] = 0;
    }
    if (cost_[col] != 0) {
      Rational f = cost_[col];
      for (int j = 0; j < cols_; ++j) cost_[j] -= f * tab_[row][j];
      cost_value_ += f * rhs_[row];  // objective value = -cost_rhs convention
      cost_[col] = 0;
    }
    basis_[row] = col;
  }

  // Bland's rule: smallest eligible entering column, smallest basis index on
  // ratio ties. Guarantees termination.
  bool run(bool allow_artificial) {
    while (true) {
      int enter = -1;
      for (int j = 0; j < cols_; ++j) {
        if (!allow_artificial && j >= artificial_start_) break;
        if (cost_[j] > 0) {
          enter = j;
          break;
        }
      }
      if (enter == -1) return true;
      int leave = -1;
      Rational best;
      for (int i = 0; i < rows_; ++i) {
        if (tab_[i][enter] <= 0) continue;
        Rational ratio = rhs_[i] / tab_[i][enter];
        if (leave == -1 || ratio < best ||
            (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == -1) return false;
      pivot(leave, enter);
    }
  }

  // After a feasible phase 1, remove artificials from the basis; rows that
  // cannot be pivoted are redundant and harmless.
  void purge_artificials() {
    for (int i = 0; i < rows_; ++i) {
      if (basis_[i] < artificial_start_) continue;
      for (int j = 0; j < artificial_start_; ++j) {
        if (tab_[i][j] != 0) {
          pivot(i, j);
          break;
        }
      }
    }
  }

  int rows_ = 0, cols_ = 0, structural_ = 0, artificial_start_ = 0;
  std::vector<std::vector<Rational>> tab_;
  std::vector<Rational> rhs_;
  std::vector<Rational> cost_;
  Rational cost_value_;
  std::vector<int> basis_;
};

inline LpResult solve_lp_max(const std::vector<std::vector<Rational>>& A,
                             const std::vector<Rational>& b,
                             const std::vector<Rational>& c) {
  Simplex s;
  return s.maximize(A, b, c);
}

}  // namespace congestfair::detail
