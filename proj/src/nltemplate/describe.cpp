#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "optisynth/nltemplate.hpp"
#include "optisynth/resources.hpp"

namespace optisynth {

namespace {

using Bindings = std::map<std::string, std::string>;

std::string P(const std::string &name) { return "\\parameter{" + name + "}"; }
std::string idx(std::size_t k) { return std::to_string(k + 1); }

/// "a", "a and b", "a, b and c"
std::string join_list(const std::vector<std::string> &items) {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k > 0)
      out += (k + 1 == items.size()) ? " and " : ", ";
    out += items[k];
  }
  return out;
}

std::vector<std::string> labels_with_role(const SemanticProxy &proxy, const std::string &role) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < proxy.labels.size(); ++k)
    if (proxy.roles[k] == role)
      out.push_back(proxy.labels[k]);
  return out;
}

/// Collects sentences into paragraphs.
class Composer {
public:
  Composer(const DescriptionTemplate &t, Bindings common) : t_(t), common_(std::move(common)) {}

  void sentence(const std::string &block, const Bindings &extra = {}) {
    Bindings b = common_;
    for (const auto &[k, v] : extra)
      b[k] = v;
    const std::string s = t_.fill(block, b);
    if (!current_.empty())
      current_ += ' ';
    current_ += s;
  }
  std::string piece(const std::string &block, const Bindings &extra = {}) const {
    Bindings b = common_;
    for (const auto &[k, v] : extra)
      b[k] = v;
    return t_.fill(block, b);
  }
  void paragraph() {
    if (current_.empty())
      return;
    if (!text_.empty())
      text_ += "\n\n";
    text_ += current_;
    current_.clear();
  }
  std::string text() {
    paragraph();
    return text_;
  }

private:
  const DescriptionTemplate &t_;
  Bindings common_;
  std::string current_;
  std::string text_;
};

SymbolicDescription describe_linear(const ClassInstance &inst, const DescriptionTemplate &t,
                                    bool table) {
  const SymbolicProblem &sym = *inst.symbolic;
  const StructureSpec &s = sym.spec;
  const DomainVocabulary &vocab = domain_vocabulary(inst.domain);
  const std::vector<std::string> items = labels_with_role(inst.proxy, "decision");
  const std::vector<std::string> resources = take_labels(vocab.resources, s.m);
  const bool maximize = s.sense == Sense::Maximize;

  Composer c(t, {{"actor", vocab.actor}, {"domain", inst.domain}, {"items", join_list(items)}});
  c.sentence("intro");
  std::vector<TableSpec> tables;

  if (table) {
    TableSpec spec;
    spec.caption = c.piece("caption");
    spec.corner = c.piece("corner");
    spec.col_labels = items;
    spec.row_labels.push_back(c.piece(maximize ? "objective_row_max" : "objective_row_min"));
    std::vector<std::string> row;
    for (std::size_t j = 0; j < s.n; ++j)
      row.push_back(s.objective_mask[j] ? objective_param(j) : "");
    spec.cells.push_back(row);
    for (std::size_t i = 0; i < s.m; ++i) {
      spec.row_labels.push_back(resources[i]);
      row.clear();
      for (std::size_t j = 0; j < s.n; ++j)
        row.push_back(s.constraint_masks[i][j] ? matrix_param(i, j) : "");
      spec.cells.push_back(row);
    }
    tables.push_back(std::move(spec));
    c.sentence(maximize ? "objective_max" : "objective_min");
  } else {
    std::vector<std::string> terms;
    for (std::size_t j = 0; j < s.n; ++j)
      if (s.objective_mask[j])
        terms.push_back(c.piece("objective_term", {{"item", items[j]}, {"param", P(objective_param(j))}}));
    if (!terms.empty())
      c.sentence(maximize ? "objective_max" : "objective_min", {{"terms", join_list(terms)}});
  }
  c.paragraph();

  for (std::size_t i = 0; i < s.m; ++i) {
    const char *block = s.relations[i] == Relation::LE   ? "constraint_le"
                        : s.relations[i] == Relation::GE ? "constraint_ge"
                                                         : "constraint_eq";
    Bindings b{{"resource", resources[i]}, {"rhs", P(rhs_param(i))}};
    if (!table) {
      std::vector<std::string> terms;
      for (std::size_t j = 0; j < s.n; ++j)
        if (s.constraint_masks[i][j])
          terms.push_back(c.piece("constraint_term", {{"item", items[j]}, {"param", P(matrix_param(i, j))}}));
      b["terms"] = join_list(terms);
    }
    c.sentence(block, b);
  }
  c.paragraph();

  std::vector<std::string> integral_items;
  for (std::size_t j = 0; j < s.n; ++j) {
    if (s.has_lower[j])
      c.sentence("lower", {{"item", items[j]}, {"bound", P(lower_param(j))}});
    if (s.has_upper[j])
      c.sentence("upper", {{"item", items[j]}, {"bound", P(upper_param(j))}});
    if (s.integral[j])
      integral_items.push_back(items[j]);
  }
  if (!integral_items.empty())
    c.sentence("integral", {{"items", join_list(integral_items)}});
  c.paragraph();
  c.sentence(maximize ? "closing_max" : "closing_min");
  return make_description(c.text(), std::move(tables));
}

SymbolicDescription describe_structured(const ClassInstance &inst, const DescriptionTemplate &t,
                                        bool table) {
  const DomainVocabulary &vocab = domain_vocabulary(inst.domain);
  const SemanticProxy &proxy = inst.proxy;
  std::vector<TableSpec> tables;
  std::string text;

  const auto make_table = [&](const Composer &c, std::vector<std::string> rows,
                              std::vector<std::string> cols) {
    TableSpec spec;
    spec.caption = c.piece("caption");
    spec.corner = c.piece("corner");
    spec.row_labels = std::move(rows);
    spec.col_labels = std::move(cols);
    spec.cells.assign(spec.row_labels.size(), std::vector<std::string>(spec.col_labels.size()));
    return spec;
  };

  std::visit(
      [&](const auto &d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, KnapsackData>) {
          const auto items = labels_with_role(proxy, "item");
          Composer c(t, {{"actor", vocab.actor}, {"domain", inst.domain},
                         {"count", std::to_string(items.size())}, {"capacity", P("C")}});
          c.sentence("intro");
          if (table) {
            TableSpec spec = make_table(c, items, {c.piece("col_weight"), c.piece("col_value")});
            for (std::size_t i = 0; i < items.size(); ++i)
              spec.cells[i] = {"w_" + idx(i), "v_" + idx(i)};
            tables.push_back(std::move(spec));
          } else {
            c.paragraph();
            for (std::size_t i = 0; i < items.size(); ++i)
              c.sentence("item", {{"item", items[i]}, {"weight", P("w_" + idx(i))},
                                  {"value", P("v_" + idx(i))}});
          }
          c.paragraph();
          c.sentence("closing");
          text = c.text();
        } else if constexpr (std::is_same_v<T, MdKnapsackData>) {
          const auto items = labels_with_role(proxy, "item");
          const auto resources = labels_with_role(proxy, "resource");
          Composer c(t, {{"actor", vocab.actor}, {"domain", inst.domain},
                         {"count", std::to_string(items.size())}});
          c.sentence("intro");
          c.paragraph();
          if (table) {
            std::vector<std::string> cols = resources;
            cols.push_back(c.piece("col_value"));
            TableSpec spec = make_table(c, items, cols);
            for (std::size_t i = 0; i < items.size(); ++i) {
              for (std::size_t k = 0; k < resources.size(); ++k)
                spec.cells[i][k] = "w_" + idx(k) + "_" + idx(i);
              spec.cells[i][resources.size()] = "v_" + idx(i);
            }
            tables.push_back(std::move(spec));
          } else {
            for (std::size_t i = 0; i < items.size(); ++i) {
              std::vector<std::string> terms;
              for (std::size_t k = 0; k < resources.size(); ++k)
                terms.push_back(c.piece("usage", {{"param", P("w_" + idx(k) + "_" + idx(i))},
                                                  {"resource", resources[k]}}));
              c.sentence("item", {{"item", items[i]}, {"value", P("v_" + idx(i))},
                                  {"terms", join_list(terms)}});
            }
            c.paragraph();
          }
          for (std::size_t k = 0; k < resources.size(); ++k)
            c.sentence("limit", {{"resource", resources[k]}, {"capacity", P("C_" + idx(k))}});
          c.paragraph();
          c.sentence("closing");
          text = c.text();
        } else if constexpr (std::is_same_v<T, SetCoverData>) {
          const auto options = labels_with_role(proxy, "option");
          const auto districts = labels_with_role(proxy, "requirement");
          Composer c(t, {{"domain", inst.domain},
                         {"count", std::to_string(options.size())},
                         {"requirements", std::to_string(districts.size()) + " districts"}});
          c.sentence("intro");
          c.paragraph();
          for (std::size_t s = 0; s < options.size(); ++s) {
            std::vector<std::string> covered;
            for (std::size_t e : d.sets[s])
              covered.push_back(districts[e]);
            Bindings b{{"option", options[s]}, {"covered", join_list(covered)}};
            if (!table)
              b["cost"] = P("f_" + idx(s));
            c.sentence("option", b);
          }
          c.paragraph();
          if (table) {
            TableSpec spec = make_table(c, options, {c.piece("col_cost")});
            for (std::size_t s = 0; s < options.size(); ++s)
              spec.cells[s][0] = "f_" + idx(s);
            tables.push_back(std::move(spec));
          }
          c.sentence("closing");
          text = c.text();
        } else if constexpr (std::is_same_v<T, BinPackingData>) {
          const auto items = labels_with_role(proxy, "item");
          Composer c(t, {{"actor", vocab.actor}, {"domain", inst.domain},
                         {"count", std::to_string(items.size())}, {"capacity", P("C")}});
          c.sentence("intro");
          c.paragraph();
          if (table) {
            TableSpec spec = make_table(c, items, {c.piece("col_size")});
            for (std::size_t i = 0; i < items.size(); ++i)
              spec.cells[i][0] = "s_" + idx(i);
            tables.push_back(std::move(spec));
          } else {
            for (std::size_t i = 0; i < items.size(); ++i)
              c.sentence("item", {{"item", items[i]}, {"size", P("s_" + idx(i))}});
            c.paragraph();
          }
          c.sentence("closing");
          text = c.text();
        } else if constexpr (std::is_same_v<T, TspData>) {
          const auto cities = labels_with_role(proxy, "city");
          const std::vector<std::string> others(cities.begin() + 1, cities.end());
          Composer c(t, {{"domain", inst.domain},
                         {"count", std::to_string(others.size())},
                         {"cities", join_list(others)},
                         {"start", cities[0]}});
          c.sentence("intro");
          c.paragraph();
          const auto key = [](std::size_t i, std::size_t j) {
            return i < j ? "d_" + idx(i) + "_" + idx(j) : "d_" + idx(j) + "_" + idx(i);
          };
          if (table) {
            TableSpec spec = make_table(c, cities, cities);
            for (std::size_t i = 0; i < cities.size(); ++i)
              for (std::size_t j = 0; j < cities.size(); ++j)
                spec.cells[i][j] = i == j ? "" : key(i, j);
            tables.push_back(std::move(spec));
          } else {
            for (std::size_t i = 0; i < cities.size(); ++i)
              for (std::size_t j = i + 1; j < cities.size(); ++j)
                c.sentence("distance", {{"a", cities[i]}, {"b", cities[j]}, {"distance", P(key(i, j))}});
            c.paragraph();
          }
          c.sentence("closing");
          text = c.text();
        } else if constexpr (std::is_same_v<T, ShiftData>) {
          const auto shifts = labels_with_role(proxy, "shift");
          const auto periods = labels_with_role(proxy, "period");
          Composer c(t, {{"actor", vocab.actor}, {"domain", inst.domain},
                         {"periods", std::to_string(periods.size())},
                         {"count", std::to_string(shifts.size())}});
          c.sentence("intro");
          c.paragraph();
          if (table) {
            TableSpec spec = make_table(c, periods, {c.piece("col_demand")});
            for (std::size_t p = 0; p < periods.size(); ++p)
              spec.cells[p][0] = "r_" + idx(p);
            tables.push_back(std::move(spec));
          } else {
            for (std::size_t p = 0; p < periods.size(); ++p)
              c.sentence("demand", {{"period", periods[p]}, {"demand", P("r_" + idx(p))}});
            c.paragraph();
          }
          for (std::size_t s = 0; s < shifts.size(); ++s) {
            std::vector<std::string> covered;
            for (std::size_t p : d.shifts[s])
              covered.push_back(periods[p]);
            c.sentence("shift", {{"shift", shifts[s]}, {"covered", join_list(covered)},
                                 {"cost", P("p_" + idx(s))}});
          }
          c.paragraph();
          c.sentence("closing");
          text = c.text();
        } else if constexpr (std::is_same_v<T, TransportationData>) {
          const auto sources = labels_with_role(proxy, "source");
          const auto dests = labels_with_role(proxy, "destination");
          Composer c(t, {{"domain", inst.domain}});
          c.sentence("intro");
          c.paragraph();
          for (std::size_t i = 0; i < sources.size(); ++i)
            c.sentence("supply", {{"source", sources[i]}, {"amount", P("s_" + idx(i))}});
          for (std::size_t j = 0; j < dests.size(); ++j)
            c.sentence("demand", {{"destination", dests[j]}, {"amount", P("d_" + idx(j))}});
          c.paragraph();
          if (table) {
            TableSpec spec = make_table(c, sources, dests);
            for (std::size_t i = 0; i < sources.size(); ++i)
              for (std::size_t j = 0; j < dests.size(); ++j)
                spec.cells[i][j] = "c_" + idx(i) + "_" + idx(j);
            tables.push_back(std::move(spec));
          } else {
            for (std::size_t i = 0; i < sources.size(); ++i)
              for (std::size_t j = 0; j < dests.size(); ++j)
                c.sentence("cost", {{"source", sources[i]}, {"destination", dests[j]},
                                    {"cost", P("c_" + idx(i) + "_" + idx(j))}});
            c.paragraph();
          }
          c.sentence("closing");
          text = c.text();
        } else if constexpr (std::is_same_v<T, MaxFlowData> || std::is_same_v<T, MinCostFlowData>) {
          constexpr bool costed = std::is_same_v<T, MinCostFlowData>;
          const FlowNetwork &net = d.network;
          const auto &nodes = proxy.labels;
          Bindings common{{"domain", inst.domain},
                          {"source", nodes[net.source]},
                          {"sink", nodes[net.sink]}};
          if constexpr (costed)
            common["amount"] = P("F");
          Composer c(t, common);
          c.sentence("intro");
          c.paragraph();
          if (table) {
            if constexpr (costed) {
              std::vector<std::string> rows;
              for (const Arc &a : net.arcs)
                rows.push_back(nodes[a.from] + " to " + nodes[a.to]);
              TableSpec spec = make_table(c, rows, {c.piece("col_capacity"), c.piece("col_cost")});
              for (std::size_t k = 0; k < net.arcs.size(); ++k) {
                const std::string key = idx(net.arcs[k].from) + "_" + idx(net.arcs[k].to);
                spec.cells[k] = {"k_" + key, "c_" + key};
              }
              tables.push_back(std::move(spec));
            } else {
              TableSpec spec = make_table(c, nodes, nodes);
              for (const Arc &a : net.arcs)
                spec.cells[a.from][a.to] = "k_" + idx(a.from) + "_" + idx(a.to);
              tables.push_back(std::move(spec));
            }
          } else {
            for (const Arc &a : net.arcs) {
              const std::string key = idx(a.from) + "_" + idx(a.to);
              Bindings b{{"from", nodes[a.from]}, {"to", nodes[a.to]}, {"capacity", P("k_" + key)}};
              if constexpr (costed)
                b["cost"] = P("c_" + key);
              c.sentence("arc", b);
            }
            c.paragraph();
          }
          c.sentence("closing");
          text = c.text();
        }
      },
      inst.data);
  return make_description(std::move(text), std::move(tables));
}

} // namespace

SymbolicDescription describe_instance(const ClassInstance &inst, const std::string &variant,
                                      const TemplateLibrary &library) {
  const DescriptionTemplate &t = library.get(to_string(inst.cls), variant);
  const bool table = variant == "table";
  if (inst.cls == ProblemClass::Linear) {
    if (!inst.symbolic)
      throw ModelError("linear instance has no symbolic form");
    return describe_linear(inst, t, table);
  }
  return describe_structured(inst, t, table);
}

FormatRules format_rules_for(const ClassInstance &inst) {
  FormatRules rules;
  if (inst.cls == ProblemClass::Linear && inst.symbolic) {
    for (const auto &[name, range] : default_ranges(*inst.symbolic))
      if (range.integer)
        rules.integer_params.insert(name);
  } else {
    for (const auto &[name, value] : inst.params)
      rules.integer_params.insert(name);
  }
  return rules;
}

} // namespace optisynth
