// Two-phase bounded primal simplex on a dense tableau.
//
// Every original variable is mapped onto nonnegative columns y with an
// optional upper bound U. A column at its upper bound is stored complemented
// (y' = U - y) so that all nonbasic columns sit at zero; the tableau rhs is
// then the vector of basic values. Pricing is Dantzig's rule until
// 2*(n+m) consecutive degenerate steps, then Bland's rule until the next
// nondegenerate step.

#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "optisynth/error.hpp"

namespace optisynth::detail {

void Deadline::check() const {
  if (std::chrono::steady_clock::now() > end_)
    throw SolverLimitError("time limit reached");
}

namespace {

struct ColumnRef {
  std::size_t col;
  double sign; // x contribution = sign * z
};

struct VarMap {
  double offset = 0.0;
  std::vector<ColumnRef> cols;
};

enum class PhaseResult { Optimal, Unbounded };

class Tableau {
public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0),
        basis_(rows, 0), upper_(cols, kInf), complemented_(cols, false),
        enabled_(cols, true) {}

  double &at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
  double &rhs(std::size_t r) { return at(r, cols_); }
  double rhs(std::size_t r) const { return at(r, cols_); }
  double &cost(std::size_t c) { return at(rows_, c); }
  double cost(std::size_t c) const { return at(rows_, c); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t> &basis() { return basis_; }
  std::vector<double> &upper() { return upper_; }
  std::vector<bool> &complemented() { return complemented_; }
  std::vector<bool> &enabled() { return enabled_; }

  void pivot(std::size_t r, std::size_t c) {
    const std::size_t width = cols_ + 1;
    double *prow = &data_[r * width];
    const double inv = 1.0 / prow[c];
    for (std::size_t k = 0; k < width; ++k)
      prow[k] *= inv;
    prow[c] = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r)
        continue;
      double *row = &data_[i * width];
      const double f = row[c];
      if (f == 0.0)
        continue;
      for (std::size_t k = 0; k < width; ++k)
        row[k] -= f * prow[k];
      row[c] = 0.0;
    }
    basis_[r] = c;
  }

  /// Nonbasic column moves to its other bound.
  void flip_column(std::size_t c) {
    const double u = upper_[c];
    for (std::size_t i = 0; i <= rows_; ++i) {
      double &a = at(i, c);
      if (a == 0.0)
        continue;
      rhs(i) -= a * u;
      a = -a;
    }
    complemented_[c] = !complemented_[c];
  }

  /// Basic column of row r is replaced by its complement.
  void complement_basic(std::size_t r) {
    const std::size_t c = basis_[r];
    const double u = upper_[c];
    const double value = rhs(r);
    for (std::size_t k = 0; k < cols_; ++k)
      at(r, k) = -at(r, k);
    at(r, c) = 1.0;
    rhs(r) = u - value;
    complemented_[c] = !complemented_[c];
  }

  /// Removes row r (used for redundant rows left after phase one).
  void drop_row(std::size_t r) {
    const std::size_t width = cols_ + 1;
    data_.erase(data_.begin() + static_cast<std::ptrdiff_t>(r * width),
                data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    --rows_;
  }

private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
  std::vector<double> upper_;
  std::vector<bool> complemented_;
  std::vector<bool> enabled_;
};

class SimplexRun {
public:
  SimplexRun(Tableau &t, double tol, std::size_t bland_after,
             std::uint64_t &pivots, const Deadline &deadline)
      : t_(t), tol_(tol), bland_after_(bland_after), pivots_(pivots),
        deadline_(deadline) {}

  PhaseResult run() {
    const std::uint64_t limit =
        50ull * (t_.rows() + t_.cols()) + 10'000ull;
    std::size_t degenerate_streak = 0;
    for (std::uint64_t iter = 0;; ++iter) {
      if (iter >= limit)
        throw SolverLimitError("simplex iteration limit reached");
      if ((iter & 63u) == 0)
        deadline_.check();
      const bool bland = degenerate_streak >= bland_after_;

      std::size_t enter = t_.cols();
      double best = -tol_;
      for (std::size_t c = 0; c < t_.cols(); ++c) {
        if (!t_.enabled()[c])
          continue;
        const double d = t_.cost(c);
        if (d < best) {
          enter = c;
          if (bland)
            break;
          best = d;
        }
      }
      if (enter == t_.cols())
        return PhaseResult::Optimal;

      // Ratio test. leave == rows() means the entering column flips bounds.
      double step = t_.upper()[enter];
      std::size_t leave = t_.rows();
      bool leave_at_upper = false;
      double leave_pivot = 0.0;
      for (std::size_t r = 0; r < t_.rows(); ++r) {
        const double a = t_.at(r, enter);
        double ratio;
        bool at_upper = false;
        if (a > tol_) {
          ratio = std::max(0.0, t_.rhs(r)) / a;
        } else if (a < -tol_ && std::isfinite(t_.upper()[t_.basis()[r]])) {
          ratio = std::max(0.0, t_.upper()[t_.basis()[r]] - t_.rhs(r)) / -a;
          at_upper = true;
        } else {
          continue;
        }
        const double tie = std::isfinite(step) ? 1e-12 * (1.0 + step) : 0.0;
        bool take = false;
        if (ratio < step - tie) {
          take = true;
        } else if (leave != t_.rows() && ratio <= step + tie) {
          take = bland ? t_.basis()[r] < t_.basis()[leave]
                       : std::fabs(a) > std::fabs(leave_pivot);
        }
        if (take) {
          step = ratio;
          leave = r;
          leave_at_upper = at_upper;
          leave_pivot = a;
        }
      }
      if (!std::isfinite(step))
        return PhaseResult::Unbounded;

      if (step <= tol_)
        ++degenerate_streak;
      else
        degenerate_streak = 0;

      if (leave == t_.rows()) {
        t_.flip_column(enter);
        continue;
      }
      if (leave_at_upper)
        t_.complement_basic(leave);
      t_.pivot(leave, enter);
      ++pivots_;
    }
  }

private:
  Tableau &t_;
  double tol_;
  std::size_t bland_after_;
  std::uint64_t &pivots_;
  const Deadline &deadline_;
};

} // namespace

LpResult solve_relaxation(const Problem &canon, std::span<const double> lower,
                          std::span<const double> upper, const SolverConfig &cfg,
                          const Deadline &deadline) {
  const double tol = cfg.lp_tolerance;
  const std::size_t n = canon.variables.size();
  LpResult result;

  for (std::size_t j = 0; j < n; ++j)
    if (lower[j] > upper[j])
      return result; // Infeasible

  // Variable -> column mapping.
  std::vector<VarMap> vars(n);
  std::vector<double> col_upper;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lower[j];
    const double hi = upper[j];
    VarMap &vm = vars[j];
    if (lo == hi) {
      vm.offset = lo;
    } else if (std::isfinite(lo)) {
      vm.offset = lo;
      vm.cols.push_back({col_upper.size(), 1.0});
      col_upper.push_back(std::isfinite(hi) ? hi - lo : kInf);
    } else if (std::isfinite(hi)) {
      vm.offset = hi;
      vm.cols.push_back({col_upper.size(), -1.0});
      col_upper.push_back(kInf);
    } else {
      vm.cols.push_back({col_upper.size(), 1.0});
      col_upper.push_back(kInf);
      vm.cols.push_back({col_upper.size(), -1.0});
      col_upper.push_back(kInf);
    }
  }
  const std::size_t num_struct = col_upper.size();

  // Rows over structural columns.
  struct Row {
    std::vector<std::pair<std::size_t, double>> coefs;
    double rhs;
    double slack; // +1, -1 or 0
  };
  std::vector<Row> rows;
  double rhs_scale = 0.0;
  for (const Constraint &c : canon.constraints) {
    Row row;
    row.rhs = c.rhs;
    for (const Term &t : c.lhs.terms) {
      row.rhs -= t.coef * vars[t.var].offset;
      for (const ColumnRef &ref : vars[t.var].cols)
        row.coefs.push_back({ref.col, t.coef * ref.sign});
    }
    row.slack = c.relation == Relation::LE ? 1.0
                : c.relation == Relation::GE ? -1.0
                                              : 0.0;
    if (row.coefs.empty()) {
      const double r = row.rhs;
      const double slack_tol = 1e-9 * (1.0 + std::fabs(c.rhs));
      const bool ok = c.relation == Relation::LE ? r >= -slack_tol
                      : c.relation == Relation::GE ? r <= slack_tol
                                                    : std::fabs(r) <= slack_tol;
      if (!ok)
        return result; // Infeasible
      continue;
    }
    if (row.rhs < 0.0) {
      row.rhs = -row.rhs;
      row.slack = -row.slack;
      for (auto &[col, v] : row.coefs)
        v = -v;
    }
    rhs_scale = std::max(rhs_scale, row.rhs);
    rows.push_back(std::move(row));
  }

  std::size_t num_slack = 0;
  std::size_t num_art = 0;
  for (const Row &row : rows) {
    if (row.slack != 0.0)
      ++num_slack;
    if (row.slack != 1.0)
      ++num_art;
  }

  const std::size_t m = rows.size();
  const std::size_t total = num_struct + num_slack + num_art;
  Tableau t(m, total);
  for (std::size_t c = 0; c < num_struct; ++c)
    t.upper()[c] = col_upper[c];

  std::size_t next_slack = num_struct;
  std::size_t next_art = num_struct + num_slack;
  std::vector<bool> is_art(total, false);
  for (std::size_t r = 0; r < m; ++r) {
    const Row &row = rows[r];
    for (const auto &[col, v] : row.coefs)
      t.at(r, col) += v;
    t.rhs(r) = row.rhs;
    if (row.slack != 0.0) {
      t.at(r, next_slack) = row.slack;
      if (row.slack == 1.0)
        t.basis()[r] = next_slack;
      ++next_slack;
    }
    if (row.slack != 1.0) {
      t.at(r, next_art) = 1.0;
      is_art[next_art] = true;
      t.basis()[r] = next_art;
      ++next_art;
    }
  }

  const std::size_t bland_after = 2 * (n + canon.constraints.size());

  // Phase one: minimize the sum of artificials.
  if (num_art > 0) {
    for (std::size_t r = 0; r < m; ++r) {
      if (!is_art[t.basis()[r]])
        continue;
      for (std::size_t c = 0; c <= total; ++c)
        if (c == total || !is_art[c])
          t.at(m, c) -= t.at(r, c);
    }
    SimplexRun(t, tol, bland_after, result.pivots, deadline).run();
    const double infeasibility = -t.rhs(t.rows());
    if (infeasibility > 1e-7 * (1.0 + rhs_scale))
      return result; // Infeasible

    // Drive remaining artificials out of the basis; drop redundant rows.
    for (std::size_t r = 0; r < t.rows();) {
      if (!is_art[t.basis()[r]]) {
        ++r;
        continue;
      }
      std::size_t best = total;
      double best_abs = tol;
      for (std::size_t c = 0; c < total; ++c) {
        if (is_art[c])
          continue;
        const double a = std::fabs(t.at(r, c));
        if (a > best_abs) {
          best_abs = a;
          best = c;
        }
      }
      if (best == total) {
        t.drop_row(r);
        continue;
      }
      t.pivot(r, best);
      ++result.pivots;
      ++r;
    }
    for (std::size_t c = 0; c < total; ++c)
      if (is_art[c])
        t.enabled()[c] = false;
  }

  // Phase two costs in y-space.
  const double sense = canon.sense == Sense::Minimize ? 1.0 : -1.0;
  std::vector<double> cost(total, 0.0);
  for (const Term &term : canon.objective.terms)
    for (const ColumnRef &ref : vars[term.var].cols)
      cost[ref.col] += sense * term.coef * ref.sign;
  for (std::size_t c = 0; c < total; ++c)
    if (t.complemented()[c])
      cost[c] = -cost[c];
  const std::size_t mr = t.rows();
  for (std::size_t c = 0; c <= total; ++c)
    t.at(mr, c) = c < total && t.enabled()[c] ? cost[c] : 0.0;
  for (std::size_t r = 0; r < mr; ++r) {
    const double cb = cost[t.basis()[r]];
    if (cb == 0.0)
      continue;
    for (std::size_t c = 0; c <= total; ++c)
      t.at(mr, c) -= cb * t.at(r, c);
  }
  for (std::size_t c = 0; c < total; ++c)
    if (!t.enabled()[c])
      t.at(mr, c) = 0.0;

  if (SimplexRun(t, tol, bland_after, result.pivots, deadline).run() ==
      PhaseResult::Unbounded) {
    result.status = SolveStatus::Unbounded;
    return result;
  }

  std::vector<double> y(total, 0.0);
  for (std::size_t r = 0; r < mr; ++r)
    y[t.basis()[r]] = std::max(0.0, t.rhs(r));
  for (std::size_t c = 0; c < total; ++c)
    if (t.complemented()[c])
      y[c] = t.upper()[c] - y[c];

  result.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double v = vars[j].offset;
    for (const ColumnRef &ref : vars[j].cols)
      v += ref.sign * y[ref.col];
    result.x[j] = std::clamp(v, lower[j], upper[j]);
  }
  result.status = SolveStatus::Optimal;
  return result;
}

} // namespace optisynth::detail
