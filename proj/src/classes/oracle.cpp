// Independent combinatorial oracles for each problem class. Nothing here
// calls the simplex engine.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "oracle_detail.hpp"
#include "optisynth/error.hpp"
#include "optisynth/solver.hpp"

namespace optisynth {

namespace detail {

/// Max flow value by breadth-first augmenting paths on a dense residual graph.
double max_flow_value(const FlowNetwork &net) {
  const std::size_t n = net.nodes;
  std::vector<std::vector<double>> residual(n, std::vector<double>(n, 0.0));
  for (const Arc &a : net.arcs)
    residual[a.from][a.to] += a.capacity;
  double total = 0;
  for (;;) {
    std::vector<std::size_t> parent(n, n);
    parent[net.source] = net.source;
    std::vector<std::size_t> queue{net.source};
    for (std::size_t head = 0; head < queue.size() && parent[net.sink] == n; ++head) {
      const std::size_t u = queue[head];
      for (std::size_t v = 0; v < n; ++v)
        if (parent[v] == n && residual[u][v] > 0) {
          parent[v] = u;
          queue.push_back(v);
        }
    }
    if (parent[net.sink] == n)
      return total;
    double push = kInf;
    for (std::size_t v = net.sink; v != net.source; v = parent[v])
      push = std::min(push, residual[parent[v]][v]);
    for (std::size_t v = net.sink; v != net.source; v = parent[v]) {
      residual[parent[v]][v] -= push;
      residual[v][parent[v]] += push;
    }
    total += push;
  }
}

} // namespace detail

namespace {

constexpr std::size_t kMaxSubsetItems = 22;

void require(bool ok, const std::string &what) {
  if (!ok)
    throw UnsupportedError("instance exceeds the oracle limit: " + what);
}

/// Best value over all subsets of n items; `fits` and `value` take a bitmask.
double best_subset(std::size_t n, bool maximize,
                   const std::function<bool(std::uint32_t)> &fits,
                   const std::function<double(std::uint32_t)> &value) {
  require(n <= kMaxSubsetItems, std::to_string(n) + " items");
  double best = maximize ? -kInf : kInf;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (!fits(mask))
      continue;
    const double v = value(mask);
    best = maximize ? std::max(best, v) : std::min(best, v);
  }
  if (!std::isfinite(best))
    throw Error("no feasible subset");
  return best;
}

double masked_sum(const std::vector<double> &w, std::uint32_t mask) {
  double s = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (mask >> i & 1u)
      s += w[i];
  return s;
}

double knapsack_oracle(const KnapsackData &d) {
  return best_subset(
      d.values.size(), true, [&](std::uint32_t m) { return masked_sum(d.weights, m) <= d.capacity; },
      [&](std::uint32_t m) { return masked_sum(d.values, m); });
}

double mdknapsack_oracle(const MdKnapsackData &d) {
  return best_subset(
      d.values.size(), true,
      [&](std::uint32_t m) {
        for (std::size_t k = 0; k < d.capacities.size(); ++k)
          if (masked_sum(d.weights[k], m) > d.capacities[k])
            return false;
        return true;
      },
      [&](std::uint32_t m) { return masked_sum(d.values, m); });
}

double set_cover_oracle(const SetCoverData &d) {
  require(d.universe <= 32, "universe of " + std::to_string(d.universe));
  std::vector<std::uint32_t> covers;
  for (const auto &s : d.sets) {
    std::uint32_t bits = 0;
    for (std::size_t e : s)
      bits |= 1u << e;
    covers.push_back(bits);
  }
  const std::uint32_t all = d.universe == 32 ? ~0u : (1u << d.universe) - 1;
  return best_subset(
      d.sets.size(), false,
      [&](std::uint32_t m) {
        std::uint32_t got = 0;
        for (std::size_t s = 0; s < covers.size(); ++s)
          if (m >> s & 1u)
            got |= covers[s];
        return got == all;
      },
      [&](std::uint32_t m) { return masked_sum(d.costs, m); });
}

/// Enumerates set partitions of the items in restricted-growth order,
/// skipping blocks over capacity and partitions no better than the best.
double bin_packing_oracle(const BinPackingData &d) {
  const std::size_t n = d.sizes.size();
  require(n <= 12, std::to_string(n) + " items");
  for (double s : d.sizes)
    if (s > d.capacity)
      throw Error("item larger than the bin capacity");
  std::size_t best = n;
  std::vector<double> load;
  std::function<void(std::size_t)> place = [&](std::size_t i) {
    if (load.size() >= best)
      return;
    if (i == n) {
      best = load.size();
      return;
    }
    for (std::size_t b = 0; b < load.size(); ++b) {
      if (load[b] + d.sizes[i] > d.capacity)
        continue;
      load[b] += d.sizes[i];
      place(i + 1);
      load[b] -= d.sizes[i];
    }
    load.push_back(d.sizes[i]);
    place(i + 1);
    load.pop_back();
  };
  place(0);
  return static_cast<double>(best);
}

double tsp_oracle(const TspData &d) {
  const std::size_t n = d.distance.size();
  require(n <= 10, std::to_string(n) + " cities");
  std::vector<std::size_t> order(n - 1);
  std::iota(order.begin(), order.end(), 1);
  double best = kInf;
  do {
    double len = d.distance[0][order.front()] + d.distance[order.back()][0];
    for (std::size_t k = 0; k + 1 < order.size(); ++k)
      len += d.distance[order[k]][order[k + 1]];
    best = std::min(best, len);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

double shift_oracle(const ShiftData &d) {
  const double cap = *std::max_element(d.demand.begin(), d.demand.end());
  const std::size_t P = d.shifts.size();
  require(std::pow(cap + 1, static_cast<double>(P)) <= 1e7, "shift grid too large");
  std::vector<int> z(P, 0);
  double best = kInf;
  for (;;) {
    bool ok = true;
    for (std::size_t t = 0; t < d.demand.size() && ok; ++t) {
      double staffed = 0;
      for (std::size_t s = 0; s < P; ++s)
        if (std::binary_search(d.shifts[s].begin(), d.shifts[s].end(), t))
          staffed += z[s];
      ok = staffed >= d.demand[t];
    }
    if (ok) {
      double cost = 0;
      for (std::size_t s = 0; s < P; ++s)
        cost += d.costs[s] * z[s];
      best = std::min(best, cost);
    }
    std::size_t s = 0;
    while (s < P && z[s] == static_cast<int>(cap))
      z[s++] = 0;
    if (s == P)
      break;
    ++z[s];
  }
  if (!std::isfinite(best))
    throw Error("demand cannot be covered");
  return best;
}

/// Minimum cost of sending `flow` units from s to t by successive
/// Bellman-Ford shortest paths on the residual graph.
double min_cost_flow(std::size_t nodes, const std::vector<Arc> &arcs, std::size_t s,
                     std::size_t t, double flow) {
  struct Edge {
    std::size_t to;
    double cap;
    double cost;
    std::size_t rev;
  };
  std::vector<std::vector<Edge>> g(nodes);
  for (const Arc &a : arcs) {
    g[a.from].push_back({a.to, a.capacity, a.cost, g[a.to].size()});
    g[a.to].push_back({a.from, 0.0, -a.cost, g[a.from].size() - 1});
  }
  double cost = 0;
  while (flow > 0) {
    std::vector<double> dist(nodes, kInf);
    std::vector<std::pair<std::size_t, std::size_t>> prev(nodes, {nodes, 0});
    dist[s] = 0;
    for (std::size_t round = 0; round + 1 < nodes; ++round) {
      bool changed = false;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (!std::isfinite(dist[u]))
          continue;
        for (std::size_t k = 0; k < g[u].size(); ++k) {
          const Edge &e = g[u][k];
          if (e.cap > 0 && dist[u] + e.cost < dist[e.to]) {
            dist[e.to] = dist[u] + e.cost;
            prev[e.to] = {u, k};
            changed = true;
          }
        }
      }
      if (!changed)
        break;
    }
    if (!std::isfinite(dist[t]))
      throw Error("required flow exceeds the network capacity");
    double push = flow;
    for (std::size_t v = t; v != s; v = prev[v].first)
      push = std::min(push, g[prev[v].first][prev[v].second].cap);
    for (std::size_t v = t; v != s; v = prev[v].first) {
      Edge &e = g[prev[v].first][prev[v].second];
      e.cap -= push;
      g[e.to][e.rev].cap += push;
    }
    flow -= push;
    cost += push * dist[t];
  }
  return cost;
}

double transportation_oracle(const TransportationData &d) {
  const std::size_t S = d.supply.size(), K = d.demand.size();
  const std::size_t source = S + K, sink = S + K + 1;
  const double total = std::accumulate(d.demand.begin(), d.demand.end(), 0.0);
  std::vector<Arc> arcs;
  for (std::size_t i = 0; i < S; ++i)
    arcs.push_back({source, i, d.supply[i], 0.0});
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < K; ++j)
      arcs.push_back({i, S + j, total, d.cost[i][j]});
  for (std::size_t j = 0; j < K; ++j)
    arcs.push_back({S + j, sink, d.demand[j], 0.0});
  return min_cost_flow(S + K + 2, arcs, source, sink, total);
}

/// Optimum of an all-continuous problem over the vertices of its feasible
/// region: every choice of n tight hyperplanes among rows and finite bounds.
double vertex_enumeration(const Problem &p) {
  const std::size_t n = p.num_vars();
  struct Plane {
    std::vector<double> a;
    double b;
  };
  std::vector<Plane> planes;
  for (const Constraint &c : p.constraints) {
    Plane pl{std::vector<double>(n, 0.0), c.rhs - c.lhs.constant};
    for (const Term &t : c.lhs.terms)
      pl.a[t.var] += t.coef;
    planes.push_back(std::move(pl));
  }
  for (std::size_t j = 0; j < n; ++j)
    for (double bound : {p.variables[j].lower, p.variables[j].upper})
      if (std::isfinite(bound)) {
        Plane pl{std::vector<double>(n, 0.0), bound};
        pl.a[j] = 1.0;
        planes.push_back(std::move(pl));
      }
  const std::size_t H = planes.size();
  require(H >= n, "fewer hyperplanes than variables");
  double combos = 1;
  for (std::size_t k = 0; k < n; ++k)
    combos = combos * static_cast<double>(H - k) / static_cast<double>(k + 1);
  require(combos <= 2e6, "too many vertex candidates");

  double best = p.sense == Sense::Maximize ? -kInf : kInf;
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  for (;;) {
    std::vector<std::vector<double>> m(n, std::vector<double>(n + 1));
    for (std::size_t r = 0; r < n; ++r) {
      std::copy(planes[pick[r]].a.begin(), planes[pick[r]].a.end(), m[r].begin());
      m[r][n] = planes[pick[r]].b;
    }
    bool singular = false;
    for (std::size_t col = 0; col < n && !singular; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < n; ++r)
        if (std::fabs(m[r][col]) > std::fabs(m[piv][col]))
          piv = r;
      if (std::fabs(m[piv][col]) < 1e-10) {
        singular = true;
        break;
      }
      std::swap(m[piv], m[col]);
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col)
          continue;
        const double f = m[r][col] / m[col][col];
        for (std::size_t k = col; k <= n; ++k)
          m[r][k] -= f * m[col][k];
      }
    }
    if (!singular) {
      Assignment x;
      for (std::size_t r = 0; r < n; ++r)
        x.values.push_back(m[r][n] / m[r][r]);
      const Evaluation ev = evaluate(p, x, 1e-7);
      if (ev.feasible)
        best = p.sense == Sense::Maximize ? std::max(best, ev.objective)
                                          : std::min(best, ev.objective);
    }
    std::size_t k = n;
    while (k > 0 && pick[k - 1] == H - n + k - 1)
      --k;
    if (k == 0)
      break;
    ++pick[k - 1];
    for (std::size_t r = k; r < n; ++r)
      pick[r] = pick[r - 1] + 1;
  }
  if (!std::isfinite(best))
    throw Error("no feasible vertex");
  return best;
}

double linear_oracle(const Problem &p) {
  const bool all_int = std::all_of(p.variables.begin(), p.variables.end(),
                                   [](const DecisionVariable &v) { return v.integral; });
  const bool none_int = !p.has_integral();
  if (none_int)
    return vertex_enumeration(p);
  if (all_int) {
    const SolveOutcome out = brute_force(p);
    if (!out.optimal())
      throw Error("integer grid has no feasible point");
    return *out.value;
  }
  throw UnsupportedError("mixed linear instances have no independent oracle");
}

} // namespace

double class_oracle(const ClassData &data) {
  return std::visit(
      [](const auto &d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LinearData>)
          return linear_oracle(d.problem);
        else if constexpr (std::is_same_v<T, KnapsackData>)
          return knapsack_oracle(d);
        else if constexpr (std::is_same_v<T, MdKnapsackData>)
          return mdknapsack_oracle(d);
        else if constexpr (std::is_same_v<T, SetCoverData>)
          return set_cover_oracle(d);
        else if constexpr (std::is_same_v<T, BinPackingData>)
          return bin_packing_oracle(d);
        else if constexpr (std::is_same_v<T, TspData>)
          return tsp_oracle(d);
        else if constexpr (std::is_same_v<T, ShiftData>)
          return shift_oracle(d);
        else if constexpr (std::is_same_v<T, TransportationData>)
          return transportation_oracle(d);
        else if constexpr (std::is_same_v<T, MaxFlowData>)
          return detail::max_flow_value(d.network);
        else
          return min_cost_flow(d.network.nodes, d.network.arcs, d.network.source,
                               d.network.sink, d.required_flow);
      },
      data);
}

} // namespace optisynth
