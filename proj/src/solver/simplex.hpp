#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "optisynth/solver.hpp"

namespace optisynth::detail {

class Deadline {
public:
  explicit Deadline(std::chrono::milliseconds budget)
      : end_(std::chrono::steady_clock::now() + budget) {}

  /// Throws SolverLimitError once the budget is spent.
  void check() const;

private:
  std::chrono::steady_clock::time_point end_;
};

struct LpResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> x; // original variable space, set iff Optimal
  std::uint64_t pivots = 0;
};

/// Solves the LP relaxation of a canonical problem with the variable bounds
/// replaced by [lower, upper].
LpResult solve_relaxation(const Problem &canon, std::span<const double> lower,
                          std::span<const double> upper, const SolverConfig &cfg,
                          const Deadline &deadline);

} // namespace optisynth::detail
