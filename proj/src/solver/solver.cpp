#include "optisynth/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "optisynth/error.hpp"
#include "simplex.hpp"

namespace optisynth {

std::string_view to_string(SolveStatus status) {
  switch (status) {
  case SolveStatus::Optimal:
    return "Optimal";
  case SolveStatus::Infeasible:
    return "Infeasible";
  case SolveStatus::Unbounded:
    return "Unbounded";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(lp_tolerance > 0.0))
    throw ConfigError("lp tolerance must be positive");
  if (!(integrality_tolerance > 0.0))
    throw ConfigError("integrality tolerance must be positive");
}

namespace {

SolveOutcome optimal_outcome(const Problem &problem, std::vector<double> x,
                             SolveStats stats) {
  SolveOutcome out;
  out.status = SolveStatus::Optimal;
  out.point = Assignment{std::move(x)};
  out.value = evaluate(problem, *out.point).objective;
  out.stats = stats;
  return out;
}

SolveOutcome lp_outcome(const Problem &canon, detail::LpResult lp,
                        SolveStats stats) {
  stats.pivots += lp.pivots;
  if (lp.status != SolveStatus::Optimal) {
    SolveOutcome out;
    out.status = lp.status;
    out.stats = stats;
    return out;
  }
  return optimal_outcome(canon, std::move(lp.x), stats);
}

/// An equality row over integral variables with integer coefficients has no
/// integer solution unless the gcd of the coefficients divides the rhs.
bool fails_gcd_test(const Problem &canon) {
  for (const Constraint &c : canon.constraints) {
    if (c.relation != Relation::EQ || c.lhs.terms.empty())
      continue;
    long long g = 0;
    bool applicable = c.rhs == std::round(c.rhs) && std::fabs(c.rhs) < 1e15;
    for (const Term &t : c.lhs.terms) {
      if (!applicable)
        break;
      applicable = canon.variables[t.var].integral && t.coef == std::round(t.coef) &&
                   std::fabs(t.coef) < 1e15;
      if (applicable)
        g = std::gcd(g, static_cast<long long>(std::fabs(t.coef)));
    }
    if (applicable && g > 0 && static_cast<long long>(std::fabs(c.rhs)) % g != 0)
      return true;
  }
  return false;
}

class BranchAndBound {
public:
  BranchAndBound(const Problem &canon, const SolverConfig &cfg,
                 const detail::Deadline &deadline, SolveStats &stats)
      : p_(canon), cfg_(cfg), deadline_(deadline), stats_(stats),
        sign_(canon.sense == Sense::Minimize ? 1.0 : -1.0) {
    integral_objective_ = std::all_of(
        p_.objective.terms.begin(), p_.objective.terms.end(),
        [&](const Term &t) {
          return p_.variables[t.var].integral && t.coef == std::round(t.coef);
        });
    integral_objective_ =
        integral_objective_ && p_.objective.constant == std::round(p_.objective.constant);
  }

  /// Returns the optimal point, std::nullopt when infeasible. Sets
  /// `unbounded` when the root relaxation is unbounded (the caller decides).
  std::optional<std::vector<double>> run(bool &unbounded) {
    unbounded = false;
    Node root;
    const std::size_t n = p_.variables.size();
    root.lower.resize(n);
    root.upper.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const DecisionVariable &v = p_.variables[j];
      root.lower[j] = v.lower;
      root.upper[j] = v.upper;
      if (v.integral) {
        root.lower[j] = std::ceil(v.lower - cfg_.integrality_tolerance);
        root.upper[j] = std::floor(v.upper + cfg_.integrality_tolerance);
      }
    }
    const SolveStatus rs = solve_node(root);
    if (rs == SolveStatus::Infeasible)
      return std::nullopt;
    if (rs == SolveStatus::Unbounded) {
      unbounded = true;
      return std::nullopt;
    }
    open_.push(std::move(root));

    while (!open_.empty()) {
      deadline_.check();
      Node node = open_.top();
      open_.pop();
      if (incumbent_ && !improves(node.bound))
        break;

      const std::optional<std::size_t> j = branching_variable(node.x);
      if (!j) {
        consider_candidate(node);
        continue;
      }
      const double xj = node.x[*j];
      Node down = node;
      down.upper[*j] = std::floor(xj);
      Node up = std::move(node);
      up.lower[*j] = std::ceil(xj);
      for (Node *child : {&down, &up}) {
        const SolveStatus cs = solve_node(*child);
        if (cs == SolveStatus::Unbounded)
          throw Error("unbounded subproblem below a bounded relaxation");
        if (cs == SolveStatus::Optimal && (!incumbent_ || improves(child->bound)))
          open_.push(std::move(*child));
      }
    }
    if (!incumbent_)
      return std::nullopt;
    return incumbent_point_;
  }

private:
  struct Node {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> x;
    double bound = 0.0; // minimization form
    std::uint64_t id = 0;
  };
  struct WorseFirst {
    bool operator()(const Node &a, const Node &b) const {
      if (a.bound != b.bound)
        return a.bound > b.bound;
      return a.id > b.id;
    }
  };

  double min_form(std::span<const double> x) const {
    return sign_ * p_.objective.value(x);
  }

  bool improves(double bound) const {
    const double slack = 1e-9 * std::max(1.0, std::fabs(*incumbent_));
    return bound < *incumbent_ - slack;
  }

  SolveStatus solve_node(Node &node) {
    if (stats_.nodes >= cfg_.node_limit)
      throw SolverLimitError("node limit reached");
    ++stats_.nodes;
    node.id = next_id_++;
    detail::LpResult lp = detail::solve_relaxation(p_, node.lower, node.upper,
                                                   cfg_, deadline_);
    stats_.pivots += lp.pivots;
    if (lp.status == SolveStatus::Optimal) {
      node.x = std::move(lp.x);
      node.bound = min_form(node.x);
      if (integral_objective_)
        node.bound = std::ceil(node.bound - 1e-6);
    }
    return lp.status;
  }

  std::optional<std::size_t> branching_variable(const std::vector<double> &x) const {
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!p_.variables[j].integral)
        continue;
      const double frac = x[j] - std::floor(x[j]);
      const double score = std::min(frac, 1.0 - frac);
      if (score > cfg_.integrality_tolerance && score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  void consider_candidate(const Node &node) {
    std::vector<double> point = node.x;
    bool has_continuous = false;
    std::vector<double> lo = node.lower, hi = node.upper;
    for (std::size_t j = 0; j < point.size(); ++j) {
      if (p_.variables[j].integral) {
        point[j] = std::round(point[j]);
        lo[j] = hi[j] = point[j];
      } else {
        has_continuous = true;
      }
    }
    if (has_continuous) {
      detail::LpResult fixed =
          detail::solve_relaxation(p_, lo, hi, cfg_, deadline_);
      stats_.pivots += fixed.pivots;
      if (fixed.status == SolveStatus::Optimal)
        point = std::move(fixed.x);
    }
    if (!evaluate(p_, Assignment{point}).feasible)
      return;
    const double value = min_form(point);
    if (!incumbent_ || value < *incumbent_) {
      incumbent_ = value;
      incumbent_point_ = std::move(point);
    }
  }

  const Problem &p_;
  const SolverConfig &cfg_;
  const detail::Deadline &deadline_;
  SolveStats &stats_;
  double sign_;
  bool integral_objective_ = false;
  std::uint64_t next_id_ = 0;
  std::priority_queue<Node, std::vector<Node>, WorseFirst> open_;
  std::optional<double> incumbent_;
  std::vector<double> incumbent_point_;
};

} // namespace

SolveOutcome solve_lp(const Problem &problem, const SolverConfig &cfg) {
  cfg.validate();
  validate(problem);
  const Problem canon = canonicalize(problem);
  const detail::Deadline deadline(cfg.time_limit);
  std::vector<double> lo, hi;
  for (const DecisionVariable &v : canon.variables) {
    lo.push_back(v.lower);
    hi.push_back(v.upper);
  }
  SolveStats stats;
  stats.nodes = 0;
  return lp_outcome(canon,
                    detail::solve_relaxation(canon, lo, hi, cfg, deadline),
                    stats);
}

SolveOutcome solve_milp(const Problem &problem, const SolverConfig &cfg) {
  cfg.validate();
  validate(problem);
  const Problem canon = canonicalize(problem);
  if (!canon.has_integral())
    return solve_lp(canon, cfg);

  SolveStats stats;
  if (fails_gcd_test(canon))
    return SolveOutcome{SolveStatus::Infeasible, std::nullopt, std::nullopt, stats};
  const detail::Deadline deadline(cfg.time_limit);
  bool unbounded = false;
  auto point = BranchAndBound(canon, cfg, deadline, stats).run(unbounded);
  if (unbounded) {
    // The relaxation is unbounded: with rational data the MILP is unbounded
    // iff it has an integer feasible point.
    Problem feas = canon;
    feas.objective = LinearExpr{};
    bool ignored = false;
    auto witness = BranchAndBound(feas, cfg, deadline, stats).run(ignored);
    SolveOutcome out;
    out.status = witness ? SolveStatus::Unbounded : SolveStatus::Infeasible;
    out.stats = stats;
    return out;
  }
  if (!point) {
    SolveOutcome out;
    out.status = SolveStatus::Infeasible;
    out.stats = stats;
    return out;
  }
  return optimal_outcome(canon, std::move(*point), stats);
}

SolveOutcome brute_force(const Problem &problem) {
  validate(problem);
  const Problem canon = canonicalize(problem);
  const std::size_t n = canon.variables.size();
  std::vector<long long> lo(n), hi(n);
  double grid = 1.0;
  bool empty = false;
  for (std::size_t j = 0; j < n; ++j) {
    const DecisionVariable &v = canon.variables[j];
    if (!v.integral)
      throw UnsupportedError("brute force needs integral variables; '" + v.name +
                             "' is continuous");
    if (!std::isfinite(v.lower) || !std::isfinite(v.upper))
      throw UnsupportedError("brute force needs finite bounds; '" + v.name +
                             "' is unbounded");
    lo[j] = static_cast<long long>(std::ceil(v.lower - 1e-9));
    hi[j] = static_cast<long long>(std::floor(v.upper + 1e-9));
    if (lo[j] > hi[j])
      empty = true;
    grid *= static_cast<double>(std::max(0LL, hi[j] - lo[j] + 1));
  }
  if (grid > kBruteForceGridLimit)
    throw UnsupportedError("brute force grid too large");

  SolveOutcome out;
  out.status = SolveStatus::Infeasible;
  if (empty)
    return out;

  const std::size_t m = canon.constraints.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> columns(n);
  for (std::size_t i = 0; i < m; ++i)
    for (const Term &t : canon.constraints[i].lhs.terms)
      columns[t.var].push_back({i, t.coef});
  std::vector<double> objective_col(n, 0.0);
  for (const Term &t : canon.objective.terms)
    objective_col[t.var] = t.coef;

  std::vector<long long> x = lo;
  std::vector<double> activity(m, 0.0);
  double obj = canon.objective.constant;
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto &[i, a] : columns[j])
      activity[i] += a * static_cast<double>(x[j]);
    obj += objective_col[j] * static_cast<double>(x[j]);
  }

  const double sign = canon.sense == Sense::Minimize ? 1.0 : -1.0;
  std::optional<double> best;
  std::vector<long long> best_x;
  for (;;) {
    ++out.stats.nodes;
    bool feasible = true;
    for (std::size_t i = 0; i < m && feasible; ++i) {
      const Constraint &c = canon.constraints[i];
      const double r = activity[i] - c.rhs;
      feasible = c.relation == Relation::LE   ? r <= kFeasibilityTolerance
                 : c.relation == Relation::GE ? r >= -kFeasibilityTolerance
                                              : std::fabs(r) <= kFeasibilityTolerance;
    }
    if (feasible && (!best || sign * obj < *best)) {
      best = sign * obj;
      best_x = x;
    }
    // Odometer step.
    std::size_t j = 0;
    for (; j < n; ++j) {
      if (x[j] < hi[j]) {
        ++x[j];
        for (const auto &[i, a] : columns[j])
          activity[i] += a;
        obj += objective_col[j];
        break;
      }
      const double span = static_cast<double>(hi[j] - lo[j]);
      for (const auto &[i, a] : columns[j])
        activity[i] -= a * span;
      obj -= objective_col[j] * span;
      x[j] = lo[j];
    }
    if (j == n)
      break;
    if (j > 0) {
      // Recompute after a carry so rounding drift stays bounded.
      std::fill(activity.begin(), activity.end(), 0.0);
      obj = canon.objective.constant;
      for (std::size_t k = 0; k < n; ++k) {
        for (const auto &[i, a] : columns[k])
          activity[i] += a * static_cast<double>(x[k]);
        obj += objective_col[k] * static_cast<double>(x[k]);
      }
    }
  }
  if (!best)
    return out;
  std::vector<double> point(best_x.begin(), best_x.end());
  return optimal_outcome(canon, std::move(point), out.stats);
}

bool verify_value(const Problem &problem, double claimed, double epsilon,
                  const SolverConfig &cfg) {
  if (!(epsilon > 0.0))
    throw ConfigError("epsilon must be positive");
  const SolveOutcome out = solve_milp(problem, cfg);
  return out.optimal() && std::fabs(*out.value - claimed) <= epsilon;
}

} // namespace optisynth
