#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optisynth/model.hpp"
#include "optisynth/solver.hpp"

namespace optisynth {

/// The 18 seed application domains, in their canonical order.
const std::vector<std::string> &seed_domains();

/// Structural distributions for random linear instances. Every default is a
/// guess recorded here rather than hidden in the sampler.
struct SamplerConfig {
  long long n_min = 2;
  long long n_max = 8;
  long long m_min = 2;
  long long m_max = 8;
  double keep_probability = 0.7;     // per coefficient slot
  double bound_probability = 0.3;    // per variable, separately for each side
  double integral_probability = 0.5; // per variable
  double table_fraction = 0.4;       // share of instances rendered with a table
  int retry_budget = 25;             // coefficient resamples per structure
  std::vector<std::string> domains;  // empty means seed_domains()

  const std::vector<std::string> &domain_list() const;
  /// Throws ConfigError on empty ranges, probabilities outside [0,1] or an
  /// empty domain list.
  void validate() const;
};

struct StructureSpec {
  std::size_t n = 0;
  std::size_t m = 0;
  Sense sense = Sense::Maximize;
  std::vector<bool> has_lower;
  std::vector<bool> has_upper;
  std::vector<bool> integral;
  std::vector<bool> objective_mask;
  std::vector<std::vector<bool>> constraint_masks;
  std::vector<Relation> relations;
  std::string domain;

  friend bool operator==(const StructureSpec &, const StructureSpec &) = default;
};

/// Parameter names used for linear instances (1-based indices).
std::string objective_param(std::size_t j);
std::string matrix_param(std::size_t i, std::size_t j);
std::string rhs_param(std::size_t i);
std::string lower_param(std::size_t j);
std::string upper_param(std::size_t j);

/// A structure with one named parameter per active coefficient slot, in a
/// stable order: objective, then each row's matrix entries and rhs, then
/// bounds.
struct SymbolicProblem {
  StructureSpec spec;
  std::vector<std::string> parameters;

  friend bool operator==(const SymbolicProblem &, const SymbolicProblem &) = default;
};

struct ParamRange {
  double min = 0.0;
  double max = 0.0;
  bool integer = false;

  friend bool operator==(const ParamRange &, const ParamRange &) = default;
};

using ParameterRanges = std::map<std::string, ParamRange>;
using ParameterValues = std::map<std::string, double>;

/// Deterministic in (seed, cfg). Throws ConfigError for an invalid config.
StructureSpec sample_structure(std::uint64_t seed, const SamplerConfig &cfg);

/// Throws ModelError when the structure breaks its invariants (empty masks,
/// mismatched vector lengths).
SymbolicProblem build_symbolic(const StructureSpec &spec);

/// Ranges used by the offline template teacher.
ParameterRanges default_ranges(const SymbolicProblem &sym);

/// One uniform draw per parameter; integer-flagged ranges draw integers,
/// others are rounded to 2 decimals. Throws ConfigError naming the first
/// parameter without a range (or with an empty range).
ParameterValues sample_values(const SymbolicProblem &sym, const ParameterRanges &ranges,
                              std::uint64_t seed);

/// Canonical Problem for the given parameter values. Variables are named
/// x1..xn; missing bound parameters mean lower 0 and upper +inf. Throws
/// ConfigError naming a missing parameter and ModelError when a sampled lower
/// bound exceeds its upper bound.
Problem instantiate_symbolic(const SymbolicProblem &sym, const ParameterValues &values);

/// sample_values followed by instantiate_symbolic.
Problem sample_coefficients(const SymbolicProblem &sym, const ParameterRanges &ranges,
                            std::uint64_t seed);

struct FilteredInstance {
  Problem problem;
  double value = 0.0;
  std::size_t index = 0; // position in the candidate list
};

struct Discard {
  std::size_t index = 0;
  std::string reason; // "Infeasible", "Unbounded" or the solver limit message
};

struct FilterReport {
  std::vector<FilteredInstance> kept;
  std::vector<Discard> discarded;
};

/// Keeps the candidates whose MILP is Optimal, paired with the solve value.
/// Solver limit errors discard the candidate with the error text as reason.
FilterReport filter_feasible(const std::vector<Problem> &candidates,
                             const SolverConfig &cfg = {});

} // namespace optisynth
