#include "optisynth/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "optisynth/error.hpp"
#include "optisynth/rng.hpp"

namespace optisynth {

const std::vector<std::string> &seed_domains() {
  static const std::vector<std::string> domains = {
      "manufacturing and production",
      "supply chain management",
      "food and beverage",
      "transportation and logistics",
      "healthcare and medical",
      "retail and e-commerce",
      "environmental and sustainability",
      "agriculture and forestry",
      "science and research",
      "energy and power systems",
      "finance and banking",
      "sports and entertainment",
      "government and public sector",
      "education",
      "human resources",
      "telecommunications",
      "marketing and media",
      "aerospace and defense",
  };
  return domains;
}

const std::vector<std::string> &SamplerConfig::domain_list() const {
  return domains.empty() ? seed_domains() : domains;
}

void SamplerConfig::validate() const {
  if (n_min < 1 || n_min > n_max)
    throw ConfigError("variable count range must satisfy 1 <= n_min <= n_max");
  if (m_min < 1 || m_min > m_max)
    throw ConfigError("constraint count range must satisfy 1 <= m_min <= m_max");
  for (double p : {keep_probability, bound_probability, integral_probability, table_fraction})
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError("probabilities must lie in [0, 1]");
  if (retry_budget < 1)
    throw ConfigError("retry budget must be at least 1");
  if (domain_list().empty())
    throw ConfigError("domain list is empty");
}

std::string objective_param(std::size_t j) { return "c_" + std::to_string(j + 1); }
std::string matrix_param(std::size_t i, std::size_t j) {
  return "a_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}
std::string rhs_param(std::size_t i) { return "b_" + std::to_string(i + 1); }
std::string lower_param(std::size_t j) { return "l_" + std::to_string(j + 1); }
std::string upper_param(std::size_t j) { return "u_" + std::to_string(j + 1); }

namespace {

std::vector<bool> sample_mask(Rng &rng, std::size_t n, double keep) {
  std::vector<bool> mask(n);
  for (std::size_t j = 0; j < n; ++j)
    mask[j] = rng.bernoulli(keep);
  if (std::find(mask.begin(), mask.end(), true) == mask.end())
    mask[rng.index(n)] = true;
  return mask;
}

Relation sample_relation(Rng &rng, Sense sense) {
  const double r = rng.uniform();
  const Relation primary = sense == Sense::Maximize ? Relation::LE : Relation::GE;
  const Relation secondary = sense == Sense::Maximize ? Relation::GE : Relation::LE;
  if (r < 0.7)
    return primary;
  return r < 0.9 ? secondary : Relation::EQ;
}

double lookup(const ParameterValues &values, const std::string &name) {
  const auto it = values.find(name);
  if (it == values.end())
    throw ConfigError("missing value for parameter '" + name + "'");
  return it->second;
}

} // namespace

StructureSpec sample_structure(std::uint64_t seed, const SamplerConfig &cfg) {
  cfg.validate();
  Rng rng(seed);
  StructureSpec s;
  s.n = static_cast<std::size_t>(rng.uniform_int(cfg.n_min, cfg.n_max));
  s.m = static_cast<std::size_t>(rng.uniform_int(cfg.m_min, cfg.m_max));
  s.sense = rng.bernoulli(0.5) ? Sense::Maximize : Sense::Minimize;
  const auto &domains = cfg.domain_list();
  s.domain = domains[rng.index(domains.size())];
  for (std::size_t j = 0; j < s.n; ++j) {
    s.has_lower.push_back(rng.bernoulli(cfg.bound_probability));
    s.has_upper.push_back(rng.bernoulli(cfg.bound_probability));
    s.integral.push_back(rng.bernoulli(cfg.integral_probability));
  }
  s.objective_mask = sample_mask(rng, s.n, cfg.keep_probability);
  for (std::size_t i = 0; i < s.m; ++i) {
    s.constraint_masks.push_back(sample_mask(rng, s.n, cfg.keep_probability));
    s.relations.push_back(sample_relation(rng, s.sense));
  }
  return s;
}

SymbolicProblem build_symbolic(const StructureSpec &spec) {
  const std::size_t n = spec.n;
  if (n == 0 || spec.m == 0)
    throw ModelError("structure needs at least one variable and one constraint");
  if (spec.has_lower.size() != n || spec.has_upper.size() != n || spec.integral.size() != n ||
      spec.objective_mask.size() != n || spec.constraint_masks.size() != spec.m ||
      spec.relations.size() != spec.m)
    throw ModelError("structure vectors do not match n and m");
  const auto any = [](const std::vector<bool> &mask) {
    return std::find(mask.begin(), mask.end(), true) != mask.end();
  };
  if (!any(spec.objective_mask))
    throw ModelError("objective mask has no active entry");

  SymbolicProblem sym;
  sym.spec = spec;
  for (std::size_t j = 0; j < n; ++j)
    if (spec.objective_mask[j])
      sym.parameters.push_back(objective_param(j));
  for (std::size_t i = 0; i < spec.m; ++i) {
    const auto &mask = spec.constraint_masks[i];
    if (mask.size() != n || !any(mask))
      throw ModelError("constraint mask " + std::to_string(i + 1) + " is empty or misshapen");
    for (std::size_t j = 0; j < n; ++j)
      if (mask[j])
        sym.parameters.push_back(matrix_param(i, j));
    sym.parameters.push_back(rhs_param(i));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (spec.has_lower[j])
      sym.parameters.push_back(lower_param(j));
    if (spec.has_upper[j])
      sym.parameters.push_back(upper_param(j));
  }
  return sym;
}

ParameterRanges default_ranges(const SymbolicProblem &sym) {
  ParameterRanges ranges;
  for (const std::string &p : sym.parameters) {
    switch (p[0]) {
    case 'c':
      ranges[p] = {2.0, 40.0, false};
      break;
    case 'a':
      ranges[p] = {1.0, 12.0, true};
      break;
    case 'b':
      ranges[p] = {30.0, 300.0, true};
      break;
    case 'l':
      ranges[p] = {1.0, 10.0, true};
      break;
    default:
      ranges[p] = {15.0, 60.0, true};
      break;
    }
  }
  return ranges;
}

ParameterValues sample_values(const SymbolicProblem &sym, const ParameterRanges &ranges,
                              std::uint64_t seed) {
  Rng rng(seed);
  ParameterValues values;
  for (const std::string &p : sym.parameters) {
    const auto it = ranges.find(p);
    if (it == ranges.end())
      throw ConfigError("no range for parameter '" + p + "'");
    const ParamRange &r = it->second;
    if (!(r.min <= r.max))
      throw ConfigError("empty range for parameter '" + p + "'");
    if (r.integer) {
      const double lo = std::ceil(r.min);
      const double hi = std::floor(r.max);
      if (lo > hi)
        throw ConfigError("range for parameter '" + p + "' contains no integer");
      values[p] = static_cast<double>(
          rng.uniform_int(static_cast<long long>(lo), static_cast<long long>(hi)));
    } else {
      const double v = std::round(rng.uniform(r.min, r.max) * 100.0) / 100.0;
      values[p] = std::clamp(v, r.min, r.max);
    }
  }
  return values;
}

Problem instantiate_symbolic(const SymbolicProblem &sym, const ParameterValues &values) {
  const StructureSpec &s = sym.spec;
  Problem p;
  p.sense = s.sense;
  p.class_tag = "linear";
  p.metadata["domain"] = s.domain;
  for (std::size_t j = 0; j < s.n; ++j) {
    DecisionVariable v;
    v.name = "x" + std::to_string(j + 1);
    v.lower = s.has_lower[j] ? lookup(values, lower_param(j)) : 0.0;
    v.upper = s.has_upper[j] ? lookup(values, upper_param(j)) : kInf;
    v.integral = s.integral[j];
    if (v.lower > v.upper)
      throw ModelError("sampled bounds of " + v.name + " are inverted");
    p.variables.push_back(std::move(v));
    if (s.objective_mask[j])
      p.objective.terms.push_back({lookup(values, objective_param(j)), j});
  }
  for (std::size_t i = 0; i < s.m; ++i) {
    Constraint c;
    c.label = "r" + std::to_string(i + 1);
    for (std::size_t j = 0; j < s.n; ++j)
      if (s.constraint_masks[i][j])
        c.lhs.terms.push_back({lookup(values, matrix_param(i, j)), j});
    c.relation = s.relations[i];
    c.rhs = lookup(values, rhs_param(i));
    p.constraints.push_back(std::move(c));
  }
  return canonicalize(p);
}

Problem sample_coefficients(const SymbolicProblem &sym, const ParameterRanges &ranges,
                            std::uint64_t seed) {
  return instantiate_symbolic(sym, sample_values(sym, ranges, seed));
}

FilterReport filter_feasible(const std::vector<Problem> &candidates, const SolverConfig &cfg) {
  FilterReport report;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    try {
      const SolveOutcome out = solve_milp(candidates[k], cfg);
      if (out.optimal())
        report.kept.push_back({candidates[k], *out.value, k});
      else
        report.discarded.push_back({k, std::string(to_string(out.status))});
    } catch (const SolverLimitError &e) {
      report.discarded.push_back({k, e.what()});
    }
  }
  return report;
}

} // namespace optisynth
