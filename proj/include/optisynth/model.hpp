#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace optisynth {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Absolute tolerance on constraint residuals, bounds and integrality used
/// by evaluate().
inline constexpr double kFeasibilityTolerance = 1e-6;

enum class Sense { Minimize, Maximize };
enum class Relation { LE, EQ, GE };

std::string_view to_string(Sense sense);
std::string_view to_string(Relation relation);

struct DecisionVariable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  bool integral = false;

  bool is_binary() const { return integral && lower == 0.0 && upper == 1.0; }

  friend bool operator==(const DecisionVariable &, const DecisionVariable &) =
      default;
};

struct Term {
  double coef = 0.0;
  std::size_t var = 0;

  friend bool operator==(const Term &, const Term &) = default;
};

/// Sum of coefficient * variable terms plus a constant. Canonical form keeps
/// indices strictly increasing with no zero coefficients.
struct LinearExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  LinearExpr() = default;
  LinearExpr(std::vector<Term> t, double c = 0.0)
      : terms(std::move(t)), constant(c) {}

  double value(std::span<const double> point) const;
  bool is_canonical() const;
  /// Sorted, merged, zero-free copy. The constant is kept.
  LinearExpr canonical() const;

  friend bool operator==(const LinearExpr &, const LinearExpr &) = default;
};

struct Constraint {
  std::string label; // empty when unlabeled
  LinearExpr lhs;
  Relation relation = Relation::LE;
  double rhs = 0.0;

  friend bool operator==(const Constraint &, const Constraint &) = default;
};

struct Problem {
  Sense sense = Sense::Minimize;
  std::vector<DecisionVariable> variables;
  LinearExpr objective;
  std::vector<Constraint> constraints;
  std::string class_tag;
  std::map<std::string, std::string> metadata;

  std::size_t num_vars() const { return variables.size(); }
  std::size_t num_constraints() const { return constraints.size(); }
  std::optional<std::size_t> find_var(std::string_view name) const;
  bool has_integral() const;

  friend bool operator==(const Problem &, const Problem &) = default;
};

/// Point in variable space; values[j] belongs to problem.variables[j].
struct Assignment {
  std::vector<double> values;

  friend bool operator==(const Assignment &, const Assignment &) = default;
};

struct Violation {
  std::string label;
  double magnitude = 0.0;

  friend bool operator==(const Violation &, const Violation &) = default;
};

struct Evaluation {
  double objective = 0.0;
  bool feasible = true;
  std::vector<Violation> violations;
};

/// Throws ModelError when an invariant of Problem or DecisionVariable does not
/// hold (empty or duplicate names, lower > upper, term index out of range,
/// no variables, NaN data).
void validate(const Problem &problem);

/// Canonical copy: term lists sorted and merged, zero coefficients dropped,
/// constraint constants folded into the right-hand side. Idempotent.
Problem canonicalize(const Problem &problem);

bool is_canonical(const Problem &problem);

/// Objective value and feasibility report at `point`. Always evaluates the
/// canonical form, so evaluate(p, a) == evaluate(canonicalize(p), a) bit for
/// bit. Violation labels: the constraint label (or "c<i>" when unlabeled),
/// "bound:<var>" and "int:<var>".
Evaluation evaluate(const Problem &problem, const Assignment &point,
                    double tolerance = kFeasibilityTolerance);

/// Human readable label of constraint i, as used in violation reports.
std::string constraint_label(const Problem &problem, std::size_t index);

} // namespace optisynth
