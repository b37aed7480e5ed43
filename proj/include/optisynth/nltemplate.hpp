#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "optisynth/classes.hpp"
#include "optisynth/error.hpp"
#include "optisynth/sampler.hpp"

namespace optisynth {

/// Coefficient table whose cells name parameters. An empty cell name marks a
/// structurally absent coefficient and renders as "-".
struct TableSpec {
  std::string caption;
  std::string corner; // header of the row-label column
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::string>> cells; // [row][col]

  /// Throws ModelError unless cells is row_labels x col_labels.
  void validate() const;
  std::set<std::string> parameters() const;
};

/// Text with `\parameter{name}` placeholders plus optional tables.
struct SymbolicDescription {
  std::string text;
  std::set<std::string> referenced; // placeholders present in text
  std::vector<TableSpec> tables;
};

/// Builds a description and fills `referenced` from the text.
SymbolicDescription make_description(std::string text, std::vector<TableSpec> tables = {});

/// Names of all `\parameter{...}` occurrences. Names match
/// [A-Za-z][A-Za-z0-9_]*. Throws ParseError (line 0, byte offset of the
/// placeholder) when a placeholder is unterminated or its name is invalid.
std::set<std::string> extract_placeholders(std::string_view text);

struct FormatRules {
  std::set<std::string> integer_params; // rendered without decimals
  int max_decimals = 2;
};

/// Rounds to `max_decimals` (0 for integer-flagged values) and trims
/// trailing zeros: 5.0 -> "5", 2.50 -> "2.5".
std::string format_value(double value, bool integer, int max_decimals = 2);

/// Raised when values do not cover every referenced parameter.
class MissingParametersError : public Error {
public:
  explicit MissingParametersError(std::set<std::string> missing);
  const std::set<std::string> &missing() const { return missing_; }

private:
  std::set<std::string> missing_;
};

/// Replaces every placeholder of the text by its formatted value.
std::string instantiate(const SymbolicDescription &desc, const ParameterValues &values,
                        const FormatRules &rules = {});

/// Parameters of `required` referenced neither in the text nor in a table.
std::set<std::string> coverage_check(const SymbolicDescription &desc,
                                     const std::vector<std::string> &required);
std::set<std::string> coverage_check(const SymbolicDescription &desc, const SymbolicProblem &sym);

/// Plain-text aligned table. Row and column orders are a permutation drawn
/// from `seed`; seed 0 keeps the original order.
std::string render_table(const TableSpec &spec, const ParameterValues &values,
                         std::uint64_t seed, const FormatRules &rules = {});

/// instantiate() followed by every table rendered with a seed derived from
/// (seed, table index), separated by blank lines.
std::string render_description(const SymbolicDescription &desc, const ParameterValues &values,
                               std::uint64_t seed, const FormatRules &rules = {});

/// One template file: front matter plus named blocks.
///
///   ---
///   class: knapsack
///   variant: prose
///   params: w_*, v_*, C
///   slots: actor, domain, item
///   ---
///   @@ intro
///   text with {{slot}} references
///
/// Text before the first `@@` line belongs to the block "body".
struct DescriptionTemplate {
  std::string cls;
  std::string variant;
  std::vector<std::string> param_patterns; // "name" or "prefix*"
  std::set<std::string> slots;
  std::map<std::string, std::string> blocks;

  /// Block text with `{{slot}}` replaced. Throws ConfigError for an unknown
  /// block, a slot not declared in the front matter, or a missing binding.
  std::string fill(const std::string &block,
                   const std::map<std::string, std::string> &bindings) const;
  bool allows_param(std::string_view name) const;
};

/// Throws ParseError with the line of the problem.
DescriptionTemplate parse_template(std::string_view text);

class TemplateLibrary {
public:
  /// Reads every <dir>/<class>/<variant>.tmpl.
  static TemplateLibrary load(const std::filesystem::path &dir);
  /// Library under data_dir()/templates, loaded once.
  static const TemplateLibrary &bundled();

  const DescriptionTemplate &get(std::string_view cls, std::string_view variant) const;
  std::vector<std::string> variants(std::string_view cls) const;
  std::size_t size() const { return templates_.size(); }

private:
  std::map<std::pair<std::string, std::string>, DescriptionTemplate, std::less<>> templates_;
};

/// Deterministic template teacher: symbolic description of an instance from
/// the bundled templates. `variant` is "prose" or "table".
SymbolicDescription describe_instance(const ClassInstance &inst, const std::string &variant,
                                      const TemplateLibrary &library = TemplateLibrary::bundled());

/// Integer-valued parameters of an instance (every structured parameter and
/// integer-ranged linear parameters).
FormatRules format_rules_for(const ClassInstance &inst);

} // namespace optisynth
