#include "optisynth/classes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracle_detail.hpp"
#include "optisynth/error.hpp"
#include "optisynth/resources.hpp"
#include "optisynth/rng.hpp"

namespace optisynth {

namespace {

constexpr std::array<std::string_view, 10> kTags = {
    "linear", "knapsack",         "mdknapsack",     "set_cover", "bin_packing",
    "tsp",    "shift_scheduling", "transportation", "max_flow",  "min_cost_flow"};

std::string idx(std::size_t k) { return std::to_string(k + 1); }

double draw(Rng &rng, long long lo, long long hi) {
  return static_cast<double>(rng.uniform_int(lo, hi));
}

void check_range(std::size_t v, std::size_t lo, std::size_t hi, const char *what) {
  if (v < lo || v > hi)
    throw ConfigError(std::string(what) + " must lie in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "], got " + std::to_string(v));
}

DecisionVariable binary(std::string name) { return {std::move(name), 0.0, 1.0, true}; }

} // namespace

std::string_view to_string(ProblemClass cls) { return kTags[static_cast<std::size_t>(cls)]; }

ProblemClass parse_class(std::string_view tag) {
  for (std::size_t k = 0; k < kTags.size(); ++k)
    if (kTags[k] == tag)
      return static_cast<ProblemClass>(k);
  throw ConfigError("unknown problem class '" + std::string(tag) + "'");
}

const std::array<ProblemClass, 10> &all_classes() {
  static const std::array<ProblemClass, 10> classes = [] {
    std::array<ProblemClass, 10> out{};
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = static_cast<ProblemClass>(k);
    return out;
  }();
  return classes;
}

ProblemClass class_of(const ClassData &data) { return static_cast<ProblemClass>(data.index()); }

void ClassSizes::validate() const {
  check_range(knapsack_items, 1, 15, "knapsack_items");
  check_range(mdknapsack_items, 1, 15, "mdknapsack_items");
  check_range(mdknapsack_dimensions, 1, 5, "mdknapsack_dimensions");
  check_range(set_cover_universe, 1, 10, "set_cover_universe");
  check_range(set_cover_sets, 1, 12, "set_cover_sets");
  check_range(bin_packing_items, 1, 8, "bin_packing_items");
  check_range(tsp_cities, 3, 9, "tsp_cities");
  check_range(shift_periods, 2, 12, "shift_periods");
  check_range(shift_patterns, 1, 6, "shift_patterns");
  check_range(transportation_sources, 1, 5, "transportation_sources");
  check_range(transportation_sinks, 1, 5, "transportation_sinks");
  check_range(flow_nodes, 3, 8, "flow_nodes");
}

// ---------------------------------------------------------------------------
// Formulations

namespace {

Problem formulate_knapsack(const KnapsackData &d) {
  Problem p;
  p.sense = Sense::Maximize;
  Constraint cap{"capacity", {}, Relation::LE, d.capacity};
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    p.variables.push_back(binary("x" + idx(i)));
    p.objective.terms.push_back({d.values[i], i});
    cap.lhs.terms.push_back({d.weights[i], i});
  }
  p.constraints.push_back(std::move(cap));
  return p;
}

Problem formulate_mdknapsack(const MdKnapsackData &d) {
  Problem p;
  p.sense = Sense::Maximize;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    p.variables.push_back(binary("x" + idx(i)));
    p.objective.terms.push_back({d.values[i], i});
  }
  for (std::size_t k = 0; k < d.capacities.size(); ++k) {
    Constraint c{"capacity" + idx(k), {}, Relation::LE, d.capacities[k]};
    for (std::size_t i = 0; i < d.values.size(); ++i)
      c.lhs.terms.push_back({d.weights[k][i], i});
    p.constraints.push_back(std::move(c));
  }
  return p;
}

Problem formulate_set_cover(const SetCoverData &d) {
  Problem p;
  p.sense = Sense::Minimize;
  for (std::size_t s = 0; s < d.sets.size(); ++s) {
    p.variables.push_back(binary("y" + idx(s)));
    p.objective.terms.push_back({d.costs[s], s});
  }
  for (std::size_t e = 0; e < d.universe; ++e) {
    Constraint c{"cover" + idx(e), {}, Relation::GE, 1.0};
    for (std::size_t s = 0; s < d.sets.size(); ++s)
      if (std::binary_search(d.sets[s].begin(), d.sets[s].end(), e))
        c.lhs.terms.push_back({1.0, s});
    p.constraints.push_back(std::move(c));
  }
  return p;
}

/// First-fit decreasing bin count; an upper bound on the optimum.
std::size_t first_fit_decreasing(const BinPackingData &d) {
  std::vector<double> sizes = d.sizes;
  std::sort(sizes.rbegin(), sizes.rend());
  std::vector<double> load;
  for (double s : sizes) {
    auto it = std::find_if(load.begin(), load.end(),
                           [&](double l) { return l + s <= d.capacity; });
    if (it == load.end())
      load.push_back(s);
    else
      *it += s;
  }
  return load.size();
}

Problem formulate_bin_packing(const BinPackingData &d) {
  Problem p;
  p.sense = Sense::Minimize;
  const std::size_t n = d.sizes.size();
  const std::size_t bins = first_fit_decreasing(d);
  for (std::size_t b = 0; b < bins; ++b) {
    p.variables.push_back(binary("y" + idx(b)));
    p.objective.terms.push_back({1.0, b});
  }
  const auto x = [&](std::size_t i, std::size_t b) { return bins + i * bins + b; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < bins; ++b)
      p.variables.push_back(binary("x" + idx(i) + "_" + idx(b)));
  for (std::size_t i = 0; i < n; ++i) {
    Constraint c{"assign" + idx(i), {}, Relation::EQ, 1.0};
    for (std::size_t b = 0; b < bins; ++b)
      c.lhs.terms.push_back({1.0, x(i, b)});
    p.constraints.push_back(std::move(c));
  }
  for (std::size_t b = 0; b < bins; ++b) {
    Constraint c{"load" + idx(b), {}, Relation::LE, 0.0};
    for (std::size_t i = 0; i < n; ++i)
      c.lhs.terms.push_back({d.sizes[i], x(i, b)});
    c.lhs.terms.push_back({-d.capacity, b});
    p.constraints.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < bins; ++b)
      p.constraints.push_back(
          {"link" + idx(i) + "_" + idx(b), LinearExpr({{1.0, x(i, b)}, {-1.0, b}}), Relation::LE, 0.0});
  for (std::size_t b = 0; b + 1 < bins; ++b)
    p.constraints.push_back(
        {"order" + idx(b), LinearExpr({{1.0, b}, {-1.0, b + 1}}), Relation::GE, 0.0});
  return p;
}

Problem formulate_tsp(const TspData &d) {
  Problem p;
  p.sense = Sense::Minimize;
  const std::size_t n = d.distance.size();
  std::vector<std::vector<std::size_t>> x(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j)
        continue;
      x[i][j] = p.variables.size();
      p.variables.push_back(binary("x" + idx(i) + "_" + idx(j)));
      p.objective.terms.push_back({d.distance[i][j], x[i][j]});
    }
  std::vector<std::size_t> u(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    u[i] = p.variables.size();
    p.variables.push_back({"u" + idx(i), 1.0, static_cast<double>(n - 1), false});
  }
  for (std::size_t i = 0; i < n; ++i) {
    Constraint out{"leave" + idx(i), {}, Relation::EQ, 1.0};
    Constraint in{"enter" + idx(i), {}, Relation::EQ, 1.0};
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) {
        out.lhs.terms.push_back({1.0, x[i][j]});
        in.lhs.terms.push_back({1.0, x[j][i]});
      }
    p.constraints.push_back(std::move(out));
    p.constraints.push_back(std::move(in));
  }
  const double big = static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 1; j < n; ++j)
      if (i != j)
        p.constraints.push_back({"order" + idx(i) + "_" + idx(j),
                                 LinearExpr({{1.0, u[i]}, {-1.0, u[j]}, {big, x[i][j]}}),
                                 Relation::LE, big - 1.0});
  return p;
}

Problem formulate_shift(const ShiftData &d) {
  Problem p;
  p.sense = Sense::Minimize;
  const double cap = *std::max_element(d.demand.begin(), d.demand.end());
  for (std::size_t s = 0; s < d.shifts.size(); ++s) {
    p.variables.push_back({"z" + idx(s), 0.0, cap, true});
    p.objective.terms.push_back({d.costs[s], s});
  }
  for (std::size_t t = 0; t < d.demand.size(); ++t) {
    Constraint c{"period" + idx(t), {}, Relation::GE, d.demand[t]};
    for (std::size_t s = 0; s < d.shifts.size(); ++s)
      if (std::binary_search(d.shifts[s].begin(), d.shifts[s].end(), t))
        c.lhs.terms.push_back({1.0, s});
    p.constraints.push_back(std::move(c));
  }
  p.metadata["worker_variables"] = "general integer";
  return p;
}

Problem formulate_transportation(const TransportationData &d) {
  Problem p;
  p.sense = Sense::Minimize;
  const std::size_t S = d.supply.size(), K = d.demand.size();
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      p.variables.push_back({"x" + idx(i) + "_" + idx(j), 0.0, kInf, true});
      p.objective.terms.push_back({d.cost[i][j], i * K + j});
    }
  for (std::size_t i = 0; i < S; ++i) {
    Constraint c{"supply" + idx(i), {}, Relation::LE, d.supply[i]};
    for (std::size_t j = 0; j < K; ++j)
      c.lhs.terms.push_back({1.0, i * K + j});
    p.constraints.push_back(std::move(c));
  }
  for (std::size_t j = 0; j < K; ++j) {
    Constraint c{"demand" + idx(j), {}, Relation::EQ, d.demand[j]};
    for (std::size_t i = 0; i < S; ++i)
      c.lhs.terms.push_back({1.0, i * K + j});
    p.constraints.push_back(std::move(c));
  }
  return p;
}

Problem formulate_network(const FlowNetwork &net, std::optional<double> required_flow) {
  Problem p;
  p.sense = required_flow ? Sense::Minimize : Sense::Maximize;
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const Arc &arc = net.arcs[a];
    p.variables.push_back({"f" + idx(arc.from) + "_" + idx(arc.to), 0.0, arc.capacity, true});
    if (required_flow)
      p.objective.terms.push_back({arc.cost, a});
    else if (arc.from == net.source)
      p.objective.terms.push_back({1.0, a});
    else if (arc.to == net.source)
      p.objective.terms.push_back({-1.0, a});
  }
  for (std::size_t v = 0; v < net.nodes; ++v) {
    double balance = 0.0;
    if (required_flow && v == net.source)
      balance = *required_flow;
    else if (required_flow && v == net.sink)
      balance = -*required_flow;
    else if (v == net.source || v == net.sink)
      continue;
    Constraint c{"node" + idx(v), {}, Relation::EQ, balance};
    for (std::size_t a = 0; a < net.arcs.size(); ++a) {
      if (net.arcs[a].from == v)
        c.lhs.terms.push_back({1.0, a});
      else if (net.arcs[a].to == v)
        c.lhs.terms.push_back({-1.0, a});
    }
    p.constraints.push_back(std::move(c));
  }
  return p;
}

} // namespace

Problem formulate(const ClassData &data) {
  Problem p = std::visit(
      [](const auto &d) -> Problem {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LinearData>)
          return d.problem;
        else if constexpr (std::is_same_v<T, KnapsackData>)
          return formulate_knapsack(d);
        else if constexpr (std::is_same_v<T, MdKnapsackData>)
          return formulate_mdknapsack(d);
        else if constexpr (std::is_same_v<T, SetCoverData>)
          return formulate_set_cover(d);
        else if constexpr (std::is_same_v<T, BinPackingData>)
          return formulate_bin_packing(d);
        else if constexpr (std::is_same_v<T, TspData>)
          return formulate_tsp(d);
        else if constexpr (std::is_same_v<T, ShiftData>)
          return formulate_shift(d);
        else if constexpr (std::is_same_v<T, TransportationData>)
          return formulate_transportation(d);
        else if constexpr (std::is_same_v<T, MaxFlowData>)
          return formulate_network(d.network, std::nullopt);
        else
          return formulate_network(d.network, d.required_flow);
      },
      data);
  p.class_tag = std::string(to_string(class_of(data)));
  validate(p);
  return canonicalize(p);
}

ParameterValues class_parameters(const ClassData &data) {
  ParameterValues v;
  std::visit(
      [&](const auto &d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, KnapsackData>) {
          v["C"] = d.capacity;
          for (std::size_t i = 0; i < d.values.size(); ++i) {
            v["w_" + idx(i)] = d.weights[i];
            v["v_" + idx(i)] = d.values[i];
          }
        } else if constexpr (std::is_same_v<T, MdKnapsackData>) {
          for (std::size_t k = 0; k < d.capacities.size(); ++k) {
            v["C_" + idx(k)] = d.capacities[k];
            for (std::size_t i = 0; i < d.values.size(); ++i)
              v["w_" + idx(k) + "_" + idx(i)] = d.weights[k][i];
          }
          for (std::size_t i = 0; i < d.values.size(); ++i)
            v["v_" + idx(i)] = d.values[i];
        } else if constexpr (std::is_same_v<T, SetCoverData>) {
          for (std::size_t s = 0; s < d.costs.size(); ++s)
            v["f_" + idx(s)] = d.costs[s];
        } else if constexpr (std::is_same_v<T, BinPackingData>) {
          v["C"] = d.capacity;
          for (std::size_t i = 0; i < d.sizes.size(); ++i)
            v["s_" + idx(i)] = d.sizes[i];
        } else if constexpr (std::is_same_v<T, TspData>) {
          for (std::size_t i = 0; i < d.distance.size(); ++i)
            for (std::size_t j = i + 1; j < d.distance.size(); ++j)
              v["d_" + idx(i) + "_" + idx(j)] = d.distance[i][j];
        } else if constexpr (std::is_same_v<T, ShiftData>) {
          for (std::size_t t = 0; t < d.demand.size(); ++t)
            v["r_" + idx(t)] = d.demand[t];
          for (std::size_t s = 0; s < d.costs.size(); ++s)
            v["p_" + idx(s)] = d.costs[s];
        } else if constexpr (std::is_same_v<T, TransportationData>) {
          for (std::size_t i = 0; i < d.supply.size(); ++i)
            v["s_" + idx(i)] = d.supply[i];
          for (std::size_t j = 0; j < d.demand.size(); ++j)
            v["d_" + idx(j)] = d.demand[j];
          for (std::size_t i = 0; i < d.supply.size(); ++i)
            for (std::size_t j = 0; j < d.demand.size(); ++j)
              v["c_" + idx(i) + "_" + idx(j)] = d.cost[i][j];
        } else if constexpr (std::is_same_v<T, MaxFlowData> ||
                             std::is_same_v<T, MinCostFlowData>) {
          for (const Arc &a : d.network.arcs) {
            const std::string key = idx(a.from) + "_" + idx(a.to);
            v["k_" + key] = a.capacity;
            if constexpr (std::is_same_v<T, MinCostFlowData>)
              v["c_" + key] = a.cost;
          }
          if constexpr (std::is_same_v<T, MinCostFlowData>)
            v["F"] = d.required_flow;
        }
        // Linear parameters come from the sampler, not from the data.
      },
      data);
  return v;
}

// ---------------------------------------------------------------------------
// Random data

namespace {

KnapsackData sample_knapsack(Rng &rng, std::size_t n) {
  KnapsackData d;
  for (std::size_t i = 0; i < n; ++i) {
    d.weights.push_back(draw(rng, 1, 20));
    d.values.push_back(draw(rng, 5, 60));
  }
  const double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
  const double heaviest = *std::max_element(d.weights.begin(), d.weights.end());
  const auto lo = static_cast<long long>(std::max(heaviest, std::ceil(0.3 * total)));
  const auto hi = static_cast<long long>(std::max(heaviest, std::floor(0.6 * total)));
  d.capacity = draw(rng, lo, std::max(lo, hi));
  return d;
}

MdKnapsackData sample_mdknapsack(Rng &rng, std::size_t n, std::size_t dims) {
  MdKnapsackData d;
  for (std::size_t i = 0; i < n; ++i)
    d.values.push_back(draw(rng, 5, 60));
  for (std::size_t k = 0; k < dims; ++k) {
    KnapsackData row = sample_knapsack(rng, n);
    d.weights.push_back(row.weights);
    d.capacities.push_back(row.capacity);
  }
  return d;
}

SetCoverData sample_set_cover(Rng &rng, std::size_t universe, std::size_t count) {
  SetCoverData d;
  d.universe = universe;
  d.sets.resize(count);
  for (auto &s : d.sets) {
    for (std::size_t e = 0; e < universe; ++e)
      if (rng.bernoulli(0.35))
        s.push_back(e);
    if (s.empty())
      s.push_back(rng.index(universe));
  }
  for (std::size_t e = 0; e < universe; ++e) {
    const bool covered = std::any_of(d.sets.begin(), d.sets.end(), [&](const auto &s) {
      return std::find(s.begin(), s.end(), e) != s.end();
    });
    if (!covered)
      d.sets[rng.index(count)].push_back(e);
  }
  for (auto &s : d.sets)
    std::sort(s.begin(), s.end());
  for (std::size_t s = 0; s < count; ++s)
    d.costs.push_back(draw(rng, 1, 20));
  return d;
}

BinPackingData sample_bin_packing(Rng &rng, std::size_t n) {
  BinPackingData d;
  d.capacity = draw(rng, 10, 30);
  const auto lo = static_cast<long long>(std::ceil(0.1 * d.capacity));
  const auto hi = static_cast<long long>(std::ceil(0.7 * d.capacity));
  for (std::size_t i = 0; i < n; ++i)
    d.sizes.push_back(draw(rng, lo, hi));
  return d;
}

TspData sample_tsp(Rng &rng, std::size_t n) {
  TspData d;
  d.distance.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d.distance[i][j] = d.distance[j][i] = draw(rng, 5, 60);
  return d;
}

ShiftData sample_shift(Rng &rng, std::size_t periods, std::size_t patterns) {
  ShiftData d;
  for (std::size_t t = 0; t < periods; ++t)
    d.demand.push_back(draw(rng, 1, 6));
  for (std::size_t s = 0; s < patterns; ++s) {
    const std::size_t start = rng.index(periods);
    const auto length = static_cast<std::size_t>(
        rng.uniform_int(2, static_cast<long long>(std::min<std::size_t>(4, periods))));
    std::vector<std::size_t> cover;
    for (std::size_t k = 0; k < length; ++k)
      cover.push_back((start + k) % periods);
    d.shifts.push_back(std::move(cover));
    d.costs.push_back(draw(rng, 3, 12));
  }
  for (std::size_t t = 0; t < periods; ++t) {
    const bool covered = std::any_of(d.shifts.begin(), d.shifts.end(), [&](const auto &s) {
      return std::find(s.begin(), s.end(), t) != s.end();
    });
    if (!covered)
      d.shifts[rng.index(patterns)].push_back(t);
  }
  for (auto &s : d.shifts)
    std::sort(s.begin(), s.end());
  return d;
}

TransportationData sample_transportation(Rng &rng, std::size_t sources, std::size_t sinks) {
  TransportationData d;
  for (std::size_t i = 0; i < sources; ++i)
    d.supply.push_back(draw(rng, 20, 60));
  for (std::size_t j = 0; j < sinks; ++j)
    d.demand.push_back(draw(rng, 10, 40));
  const double deficit = std::accumulate(d.demand.begin(), d.demand.end(), 0.0) -
                         std::accumulate(d.supply.begin(), d.supply.end(), 0.0);
  if (deficit > 0)
    d.supply[rng.index(sources)] += deficit;
  d.cost.assign(sources, std::vector<double>(sinks, 0.0));
  for (auto &row : d.cost)
    for (double &c : row)
      c = draw(rng, 1, 20);
  return d;
}

FlowNetwork sample_network(Rng &rng, std::size_t nodes, bool with_costs) {
  FlowNetwork net;
  net.nodes = nodes;
  net.source = 0;
  net.sink = nodes - 1;
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = 0; j < nodes; ++j) {
      if (i == j || i == net.sink || j == net.source)
        continue;
      const bool chain = j == i + 1;
      if (!chain && !rng.bernoulli(0.45))
        continue;
      Arc a{i, j, draw(rng, 1, 20), 0.0};
      if (with_costs)
        a.cost = draw(rng, 1, 10);
      net.arcs.push_back(a);
    }
  return net;
}

std::vector<std::string> numbered(const std::string &stem, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(stem + " " + idx(k));
  return out;
}

SemanticProxy make_proxy(const ClassData &data, const std::string &domain) {
  const DomainVocabulary &vocab = domain_vocabulary(domain);
  SemanticProxy proxy;
  proxy.cls = class_of(data);
  const auto add = [&](std::vector<std::string> labels, const std::string &role) {
    for (auto &l : labels) {
      proxy.labels.push_back(std::move(l));
      proxy.roles.push_back(role);
    }
  };
  std::visit(
      [&](const auto &d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LinearData>) {
          add(take_labels(vocab.items, d.problem.num_vars()), "decision");
        } else if constexpr (std::is_same_v<T, KnapsackData>) {
          add(take_labels(vocab.items, d.values.size()), "item");
        } else if constexpr (std::is_same_v<T, MdKnapsackData>) {
          add(take_labels(vocab.items, d.values.size()), "item");
          add(take_labels(vocab.resources, d.capacities.size()), "resource");
        } else if constexpr (std::is_same_v<T, SetCoverData>) {
          std::vector<std::string> centers;
          for (const auto &place : take_labels(place_names(), d.sets.size()))
            centers.push_back(place + " center");
          add(std::move(centers), "option");
          add(numbered("district", d.universe), "requirement");
        } else if constexpr (std::is_same_v<T, BinPackingData>) {
          add(take_labels(vocab.items, d.sizes.size()), "item");
        } else if constexpr (std::is_same_v<T, TspData>) {
          add(take_labels(place_names(), d.distance.size()), "city");
        } else if constexpr (std::is_same_v<T, ShiftData>) {
          add(numbered("shift", d.shifts.size()), "shift");
          add(numbered("period", d.demand.size()), "period");
        } else if constexpr (std::is_same_v<T, TransportationData>) {
          const auto places = take_labels(place_names(), d.supply.size() + d.demand.size());
          for (std::size_t k = 0; k < places.size(); ++k) {
            const bool source = k < d.supply.size();
            proxy.labels.push_back(places[k] + (source ? " warehouse" : " store"));
            proxy.roles.push_back(source ? "source" : "destination");
          }
        } else {
          const FlowNetwork &net = d.network;
          for (std::size_t v = 0; v < net.nodes; ++v) {
            proxy.labels.push_back(place_names()[v % place_names().size()] + " hub");
            proxy.roles.push_back(v == net.source ? "source"
                                  : v == net.sink ? "sink"
                                                  : "relay");
          }
        }
      },
      data);
  return proxy;
}

ClassData sample_data(ProblemClass cls, Rng &rng, const ClassSizes &z) {
  switch (cls) {
  case ProblemClass::Knapsack:
    return sample_knapsack(rng, z.knapsack_items);
  case ProblemClass::MdKnapsack:
    return sample_mdknapsack(rng, z.mdknapsack_items, z.mdknapsack_dimensions);
  case ProblemClass::SetCover:
    return sample_set_cover(rng, z.set_cover_universe, z.set_cover_sets);
  case ProblemClass::BinPacking:
    return sample_bin_packing(rng, z.bin_packing_items);
  case ProblemClass::Tsp:
    return sample_tsp(rng, z.tsp_cities);
  case ProblemClass::ShiftScheduling:
    return sample_shift(rng, z.shift_periods, z.shift_patterns);
  case ProblemClass::Transportation:
    return sample_transportation(rng, z.transportation_sources, z.transportation_sinks);
  case ProblemClass::MaxFlow:
    return MaxFlowData{sample_network(rng, z.flow_nodes, false)};
  case ProblemClass::MinCostFlow: {
    MinCostFlowData d{sample_network(rng, z.flow_nodes, true), 0.0};
    const double most = detail::max_flow_value(d.network);
    d.required_flow = draw(rng, 1, static_cast<long long>(most));
    return d;
  }
  case ProblemClass::Linear:
    break;
  }
  throw Error("linear data is produced by the sampler");
}

constexpr int kMaxLinearStructures = 400;

void generate_linear(ClassInstance &inst, const GenerationOptions &opts) {
  for (int attempt = 0; attempt < kMaxLinearStructures; ++attempt) {
    const std::uint64_t base = derive_seed(inst.seed, static_cast<std::uint64_t>(attempt));
    const SymbolicProblem sym = build_symbolic(sample_structure(derive_seed(base, 0), opts.sampler));
    const ParameterRanges ranges = default_ranges(sym);
    for (int retry = 0; retry < opts.sampler.retry_budget; ++retry) {
      const ParameterValues values =
          sample_values(sym, ranges, derive_seed(base, static_cast<std::uint64_t>(retry) + 1));
      Problem p;
      try {
        p = instantiate_symbolic(sym, values);
      } catch (const ModelError &) {
        continue;
      }
      SolveOutcome out;
      try {
        out = solve_milp(p, opts.solver);
      } catch (const SolverLimitError &) {
        continue;
      }
      if (out.status == SolveStatus::Unbounded)
        break; // coefficient draws keep the sign pattern; resample the structure
      if (!out.optimal())
        continue;
      inst.domain = sym.spec.domain;
      inst.data = LinearData{p};
      inst.problem = std::move(p);
      inst.params = values;
      inst.symbolic = sym;
      inst.value = *out.value;
      return;
    }
  }
  throw Error("no feasible linear instance found for seed " + std::to_string(inst.seed));
}

} // namespace

ClassInstance generate_class_instance(ProblemClass cls, std::uint64_t seed,
                                      const GenerationOptions &opts) {
  opts.sampler.validate();
  opts.sizes.validate();
  ClassInstance inst;
  inst.cls = cls;
  inst.seed = seed;
  if (cls == ProblemClass::Linear) {
    generate_linear(inst, opts);
  } else {
    Rng rng(seed);
    const auto &domains = opts.sampler.domain_list();
    inst.domain = domains[rng.index(domains.size())];
    inst.data = sample_data(cls, rng, opts.sizes);
    inst.problem = formulate(inst.data);
    inst.params = class_parameters(inst.data);
    const SolveOutcome out = solve_milp(inst.problem, opts.solver);
    if (!out.optimal())
      throw Error(std::string(to_string(cls)) + " instance is not optimal: " +
                  std::string(to_string(out.status)));
    inst.value = *out.value;
  }
  inst.problem.metadata["domain"] = inst.domain;
  inst.problem.metadata["seed"] = std::to_string(seed);
  inst.proxy = make_proxy(inst.data, inst.domain);
  return inst;
}

} // namespace optisynth
