#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string_view>

#include "optisynth/model.hpp"

namespace optisynth {

enum class SolveStatus { Optimal, Infeasible, Unbounded };

std::string_view to_string(SolveStatus status);

struct SolveStats {
  std::uint64_t pivots = 0;
  std::uint64_t nodes = 0;

  friend bool operator==(const SolveStats &, const SolveStats &) = default;
};

/// Result of an exact solve. `value` and `point` are set iff status is
/// Optimal; `value` is the objective evaluated at `point`.
struct SolveOutcome {
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<double> value;
  std::optional<Assignment> point;
  SolveStats stats;

  bool optimal() const { return status == SolveStatus::Optimal; }

  friend bool operator==(const SolveOutcome &, const SolveOutcome &) = default;
};

struct SolverConfig {
  double lp_tolerance = 1e-9;
  double integrality_tolerance = 1e-6;
  std::uint64_t node_limit = 1'000'000;
  std::chrono::milliseconds time_limit{30'000};

  /// Throws ConfigError unless tolerances are positive.
  void validate() const;
};

/// LP relaxation (integrality ignored) by two-phase bounded primal simplex.
/// Throws SolverLimitError on iteration or time limits.
SolveOutcome solve_lp(const Problem &problem, const SolverConfig &cfg = {});

/// Exact MILP optimum by best-first branch and bound over solve_lp.
/// Throws SolverLimitError on node or time limits.
SolveOutcome solve_milp(const Problem &problem, const SolverConfig &cfg = {});

/// Exhaustive enumeration of the integer grid. Requires every variable to be
/// integral with finite bounds and at most kBruteForceGridLimit grid points;
/// throws UnsupportedError otherwise. Never returns Unbounded.
inline constexpr double kBruteForceGridLimit = 1e7;
SolveOutcome brute_force(const Problem &problem);

/// True iff solve_milp reports Optimal with |value - claimed| <= epsilon.
bool verify_value(const Problem &problem, double claimed, double epsilon,
                  const SolverConfig &cfg = {});

} // namespace optisynth
