#include "optisynth/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "optisynth/error.hpp"

namespace optisynth {

std::string_view to_string(Sense sense) {
  return sense == Sense::Minimize ? "min" : "max";
}

std::string_view to_string(Relation relation) {
  switch (relation) {
  case Relation::LE:
    return "<=";
  case Relation::EQ:
    return "=";
  case Relation::GE:
    return ">=";
  }
  return "?";
}

double LinearExpr::value(std::span<const double> point) const {
  double sum = 0.0;
  for (const Term &t : terms)
    sum += t.coef * point[t.var];
  return sum + constant;
}

bool LinearExpr::is_canonical() const {
  for (std::size_t k = 0; k < terms.size(); ++k) {
    if (terms[k].coef == 0.0)
      return false;
    if (k > 0 && terms[k - 1].var >= terms[k].var)
      return false;
  }
  return true;
}

LinearExpr LinearExpr::canonical() const {
  if (is_canonical())
    return *this;
  std::vector<Term> sorted = terms;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Term &a, const Term &b) { return a.var < b.var; });
  LinearExpr out;
  out.constant = constant;
  for (const Term &t : sorted) {
    if (!out.terms.empty() && out.terms.back().var == t.var)
      out.terms.back().coef += t.coef;
    else
      out.terms.push_back(t);
  }
  std::erase_if(out.terms, [](const Term &t) { return t.coef == 0.0; });
  return out;
}

std::optional<std::size_t> Problem::find_var(std::string_view name) const {
  for (std::size_t j = 0; j < variables.size(); ++j)
    if (variables[j].name == name)
      return j;
  return std::nullopt;
}

bool Problem::has_integral() const {
  return std::any_of(variables.begin(), variables.end(),
                     [](const DecisionVariable &v) { return v.integral; });
}

namespace {

void check_expr(const LinearExpr &expr, std::size_t n, const std::string &where) {
  for (const Term &t : expr.terms) {
    if (t.var >= n)
      throw ModelError(where + ": term references variable index " +
                       std::to_string(t.var) + " but only " +
                       std::to_string(n) + " variables exist");
    if (!std::isfinite(t.coef))
      throw ModelError(where + ": non-finite coefficient");
  }
  if (!std::isfinite(expr.constant))
    throw ModelError(where + ": non-finite constant");
}

} // namespace

void validate(const Problem &problem) {
  const std::size_t n = problem.variables.size();
  if (n == 0)
    throw ModelError("problem has no variables");
  std::set<std::string_view> names;
  for (const DecisionVariable &v : problem.variables) {
    if (v.name.empty())
      throw ModelError("variable with empty name");
    if (!names.insert(v.name).second)
      throw ModelError("duplicate variable name '" + v.name + "'");
    if (std::isnan(v.lower) || std::isnan(v.upper))
      throw ModelError("variable '" + v.name + "' has a NaN bound");
    if (v.lower > v.upper)
      throw ModelError("variable '" + v.name + "' has lower bound above upper");
    if (v.lower == kInf || v.upper == -kInf)
      throw ModelError("variable '" + v.name + "' has an empty domain");
  }
  check_expr(problem.objective, n, "objective");
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const Constraint &c = problem.constraints[i];
    check_expr(c.lhs, n, "constraint " + constraint_label(problem, i));
    if (!std::isfinite(c.rhs))
      throw ModelError("constraint " + constraint_label(problem, i) +
                       ": non-finite right-hand side");
  }
}

Problem canonicalize(const Problem &problem) {
  Problem out = problem;
  out.objective = problem.objective.canonical();
  for (Constraint &c : out.constraints) {
    c.lhs = c.lhs.canonical();
    c.rhs -= c.lhs.constant;
    c.lhs.constant = 0.0;
  }
  return out;
}

bool is_canonical(const Problem &problem) {
  if (!problem.objective.is_canonical())
    return false;
  return std::all_of(problem.constraints.begin(), problem.constraints.end(),
                     [](const Constraint &c) {
                       return c.lhs.is_canonical() && c.lhs.constant == 0.0;
                     });
}

std::string constraint_label(const Problem &problem, std::size_t index) {
  const Constraint &c = problem.constraints.at(index);
  return c.label.empty() ? "c" + std::to_string(index + 1) : c.label;
}

Evaluation evaluate(const Problem &problem, const Assignment &point,
                    double tolerance) {
  if (point.values.size() != problem.variables.size())
    throw ModelError("point has " + std::to_string(point.values.size()) +
                     " values but problem has " +
                     std::to_string(problem.variables.size()) + " variables");
  const Problem canon = canonicalize(problem);
  const std::span<const double> x(point.values);

  Evaluation ev;
  ev.objective = canon.objective.value(x);
  auto report = [&](std::string label, double magnitude) {
    if (magnitude > tolerance || std::isnan(magnitude)) {
      ev.feasible = false;
      ev.violations.push_back({std::move(label), magnitude});
    }
  };

  for (std::size_t i = 0; i < canon.constraints.size(); ++i) {
    const Constraint &c = canon.constraints[i];
    const double lhs = c.lhs.value(x);
    double magnitude = 0.0;
    switch (c.relation) {
    case Relation::LE:
      magnitude = std::max(0.0, lhs - c.rhs);
      break;
    case Relation::GE:
      magnitude = std::max(0.0, c.rhs - lhs);
      break;
    case Relation::EQ:
      magnitude = std::fabs(lhs - c.rhs);
      break;
    }
    report(constraint_label(canon, i), magnitude);
  }
  for (std::size_t j = 0; j < canon.variables.size(); ++j) {
    const DecisionVariable &v = canon.variables[j];
    const double xj = x[j];
    const double below = v.lower - xj;
    const double above = xj - v.upper;
    report("bound:" + v.name, std::max({0.0, below, above}));
    if (v.integral)
      report("int:" + v.name, std::fabs(xj - std::round(xj)));
  }
  return ev;
}

} // namespace optisynth
