#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "optisynth/model.hpp"
#include "optisynth/sampler.hpp"
#include "optisynth/solver.hpp"

namespace optisynth {

enum class ProblemClass {
  Linear,
  Knapsack,
  MdKnapsack,
  SetCover,
  BinPacking,
  Tsp,
  ShiftScheduling,
  Transportation,
  MaxFlow,
  MinCostFlow,
};

std::string_view to_string(ProblemClass cls);
/// Throws ConfigError for an unknown tag.
ProblemClass parse_class(std::string_view tag);
const std::array<ProblemClass, 10> &all_classes();

struct KnapsackData {
  double capacity = 0;
  std::vector<double> weights;
  std::vector<double> values;
};

struct MdKnapsackData {
  std::vector<double> capacities;         // one per dimension
  std::vector<std::vector<double>> weights; // [dimension][item]
  std::vector<double> values;
};

struct SetCoverData {
  std::size_t universe = 0;                   // elements 0..universe-1
  std::vector<std::vector<std::size_t>> sets; // sorted element lists
  std::vector<double> costs;
};

struct BinPackingData {
  double capacity = 0;
  std::vector<double> sizes;
};

struct TspData {
  std::vector<std::vector<double>> distance; // symmetric, zero diagonal
};

struct ShiftData {
  std::vector<double> demand;                   // workers needed per period
  std::vector<std::vector<std::size_t>> shifts; // periods covered by each shift
  std::vector<double> costs;                    // per worker on the shift
};

struct TransportationData {
  std::vector<double> supply;
  std::vector<double> demand;
  std::vector<std::vector<double>> cost; // [source][sink]
};

struct Arc {
  std::size_t from = 0;
  std::size_t to = 0;
  double capacity = 0;
  double cost = 0;
};

struct FlowNetwork {
  std::size_t nodes = 0;
  std::size_t source = 0;
  std::size_t sink = 0;
  std::vector<Arc> arcs;
};

struct MaxFlowData {
  FlowNetwork network;
};

struct MinCostFlowData {
  FlowNetwork network;
  double required_flow = 0; // shipped from source to sink
};

struct LinearData {
  Problem problem;
};

using ClassData =
    std::variant<LinearData, KnapsackData, MdKnapsackData, SetCoverData, BinPackingData, TspData,
                 ShiftData, TransportationData, MaxFlowData, MinCostFlowData>;

ProblemClass class_of(const ClassData &data);

/// Per-class instance sizes. Flow classes and transportation use fixed sizes.
struct ClassSizes {
  std::size_t knapsack_items = 10;
  std::size_t mdknapsack_items = 10;
  std::size_t mdknapsack_dimensions = 3;
  std::size_t set_cover_universe = 8;
  std::size_t set_cover_sets = 8;
  std::size_t bin_packing_items = 7;
  std::size_t tsp_cities = 6;
  std::size_t shift_periods = 6;
  std::size_t shift_patterns = 5;
  std::size_t transportation_sources = 3;
  std::size_t transportation_sinks = 3;
  std::size_t flow_nodes = 5;

  /// Throws ConfigError when a size is outside the supported range (the
  /// upper limits keep every class checkable by class_oracle).
  void validate() const;
};

/// Interpretable stand-ins for the decision variables of a class instance.
struct SemanticProxy {
  ProblemClass cls = ProblemClass::Linear;
  std::vector<std::string> labels; // unique, one per entity
  std::vector<std::string> roles;  // role of each entity, same length
};

struct ClassInstance {
  ProblemClass cls = ProblemClass::Linear;
  std::string domain;
  std::uint64_t seed = 0;
  ClassData data;
  Problem problem;
  SemanticProxy proxy;
  ParameterValues params;                 // named numeric data shown in descriptions
  std::optional<SymbolicProblem> symbolic; // linear instances only
  double value = 0;                       // solve_milp optimum
};

struct GenerationOptions {
  SamplerConfig sampler;
  ClassSizes sizes;
  SolverConfig solver;
};

/// Standard MILP formulation of the class data: MTZ for tsp, assignment plus
/// symmetry breaking for bin packing, arc flows for the network classes.
Problem formulate(const ClassData &data);

/// Named numeric parameters of the data (e.g. w_1, v_1, C for knapsack).
ParameterValues class_parameters(const ClassData &data);

/// Random instance of the class drawn from (seed, opts), solved with
/// solve_milp. Structured classes are feasible by construction; linear
/// instances come from the sampler with its resample budget. Throws
/// ConfigError on invalid sizes and Error when no feasible linear instance is
/// found.
ClassInstance generate_class_instance(ProblemClass cls, std::uint64_t seed,
                                      const GenerationOptions &opts = {});

/// Exact optimum by a classical method that does not use the simplex engine:
/// subset enumeration (knapsack, mdknapsack, set cover), set partition
/// enumeration (bin packing), permutation enumeration (tsp), bounded
/// enumeration (shift scheduling), successive shortest paths (transportation,
/// min cost flow), augmenting paths (max flow), and vertex or grid
/// enumeration for linear data. Throws UnsupportedError above the oracle size
/// limits and for mixed linear problems.
double class_oracle(const ClassData &data);

} // namespace optisynth
