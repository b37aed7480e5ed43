#include "optisynth/nltemplate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "optisynth/resources.hpp"
#include "optisynth/rng.hpp"

namespace optisynth {

namespace {

constexpr std::string_view kOpen = "\\parameter{";

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

/// Calls visit(offset, length, name) for every placeholder.
template <typename Visit> void scan_placeholders(std::string_view text, Visit visit) {
  std::size_t pos = 0;
  while ((pos = text.find(kOpen, pos)) != std::string_view::npos) {
    const std::size_t start = pos + kOpen.size();
    const std::size_t close = text.find('}', start);
    if (close == std::string_view::npos)
      throw ParseError(0, pos, "unterminated \\parameter placeholder");
    const std::string_view name = text.substr(start, close - start);
    if (name.empty() || !name_start(name.front()) ||
        !std::all_of(name.begin(), name.end(), name_char))
      throw ParseError(0, pos, "invalid parameter name '" + std::string(name) + "'");
    visit(pos, close + 1 - pos, name);
    pos = close + 1;
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    std::string item = trim(s.substr(pos, comma - pos));
    if (!item.empty())
      out.push_back(std::move(item));
    pos = comma + 1;
  }
  return out;
}

std::vector<std::size_t> permutation(std::size_t n, Rng *rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (rng != nullptr)
    rng->shuffle(std::span<std::size_t>(order));
  return order;
}

} // namespace

void TableSpec::validate() const {
  if (cells.size() != row_labels.size())
    throw ModelError("table '" + caption + "' has a row count mismatch");
  for (const auto &row : cells)
    if (row.size() != col_labels.size())
      throw ModelError("table '" + caption + "' has a column count mismatch");
}

std::set<std::string> TableSpec::parameters() const {
  std::set<std::string> out;
  for (const auto &row : cells)
    for (const auto &name : row)
      if (!name.empty())
        out.insert(name);
  return out;
}

SymbolicDescription make_description(std::string text, std::vector<TableSpec> tables) {
  SymbolicDescription d;
  d.referenced = extract_placeholders(text);
  d.text = std::move(text);
  d.tables = std::move(tables);
  return d;
}

std::set<std::string> extract_placeholders(std::string_view text) {
  std::set<std::string> names;
  scan_placeholders(text, [&](std::size_t, std::size_t, std::string_view name) {
    names.emplace(name);
  });
  return names;
}

std::string format_value(double value, bool integer, int max_decimals) {
  const int decimals = integer ? 0 : std::max(0, max_decimals);
  const double scale = std::pow(10.0, decimals);
  double rounded = std::round(value * scale) / scale;
  if (rounded == 0.0)
    rounded = 0.0; // drop the sign of negative zero
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(decimals);
  ss << rounded;
  std::string s = ss.str();
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0')
      s.pop_back();
    if (s.back() == '.')
      s.pop_back();
  }
  return s;
}

namespace {

std::string join_names(const std::set<std::string> &names) {
  std::string out;
  for (const auto &n : names)
    out += (out.empty() ? "" : ", ") + n;
  return out;
}

std::string formatted(const std::string &name, const ParameterValues &values,
                      const FormatRules &rules) {
  return format_value(values.at(name), rules.integer_params.count(name) > 0, rules.max_decimals);
}

} // namespace

MissingParametersError::MissingParametersError(std::set<std::string> missing)
    : Error("missing parameter values: " + join_names(missing)), missing_(std::move(missing)) {}

std::string instantiate(const SymbolicDescription &desc, const ParameterValues &values,
                        const FormatRules &rules) {
  std::set<std::string> missing;
  for (const auto &name : extract_placeholders(desc.text))
    if (!values.count(name))
      missing.insert(name);
  if (!missing.empty())
    throw MissingParametersError(std::move(missing));
  std::string out;
  std::size_t copied = 0;
  scan_placeholders(desc.text, [&](std::size_t pos, std::size_t len, std::string_view name) {
    out.append(desc.text, copied, pos - copied);
    out += formatted(std::string(name), values, rules);
    copied = pos + len;
  });
  out.append(desc.text, copied, std::string::npos);
  return out;
}

std::set<std::string> coverage_check(const SymbolicDescription &desc,
                                     const std::vector<std::string> &required) {
  std::set<std::string> covered = extract_placeholders(desc.text);
  for (const auto &t : desc.tables)
    covered.merge(t.parameters());
  std::set<std::string> missing;
  for (const auto &name : required)
    if (!covered.count(name))
      missing.insert(name);
  return missing;
}

std::set<std::string> coverage_check(const SymbolicDescription &desc, const SymbolicProblem &sym) {
  return coverage_check(desc, sym.parameters);
}

std::string render_table(const TableSpec &spec, const ParameterValues &values,
                         std::uint64_t seed, const FormatRules &rules) {
  spec.validate();
  std::set<std::string> missing;
  for (const auto &name : spec.parameters())
    if (!values.count(name))
      missing.insert(name);
  if (!missing.empty())
    throw MissingParametersError(std::move(missing));

  Rng rng(seed);
  Rng *shuffler = seed == 0 ? nullptr : &rng;
  const auto rows = permutation(spec.row_labels.size(), shuffler);
  const auto cols = permutation(spec.col_labels.size(), shuffler);

  std::vector<std::vector<std::string>> grid;
  grid.emplace_back();
  grid.back().push_back(spec.corner);
  for (std::size_t c : cols)
    grid.back().push_back(spec.col_labels[c]);
  for (std::size_t r : rows) {
    grid.emplace_back();
    grid.back().push_back(spec.row_labels[r]);
    for (std::size_t c : cols) {
      const std::string &name = spec.cells[r][c];
      grid.back().push_back(name.empty() ? "-" : formatted(name, values, rules));
    }
  }
  std::vector<std::size_t> width(grid.front().size(), 0);
  for (const auto &row : grid)
    for (std::size_t k = 0; k < row.size(); ++k)
      width[k] = std::max(width[k], row[k].size());

  std::string out;
  if (!spec.caption.empty())
    out += spec.caption + "\n";
  const auto emit = [&](const std::vector<std::string> &row) {
    std::string line = "|";
    for (std::size_t k = 0; k < row.size(); ++k)
      line += " " + row[k] + std::string(width[k] - row[k].size(), ' ') + " |";
    out += line + "\n";
  };
  emit(grid.front());
  std::string rule = "|";
  for (std::size_t w : width)
    rule += std::string(w + 2, '-') + "|";
  out += rule + "\n";
  for (std::size_t r = 1; r < grid.size(); ++r)
    emit(grid[r]);
  return out;
}

std::string render_description(const SymbolicDescription &desc, const ParameterValues &values,
                               std::uint64_t seed, const FormatRules &rules) {
  std::string out = instantiate(desc, values, rules);
  for (std::size_t k = 0; k < desc.tables.size(); ++k) {
    const std::uint64_t table_seed = seed == 0 ? 0 : derive_seed(seed, k);
    out += "\n\n" + render_table(desc.tables[k], values, table_seed, rules);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Templates

std::string DescriptionTemplate::fill(const std::string &block,
                                      const std::map<std::string, std::string> &bindings) const {
  const auto it = blocks.find(block);
  if (it == blocks.end())
    throw ConfigError("template " + cls + "/" + variant + " has no block '" + block + "'");
  const std::string &text = it->second;
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string::npos)
      break;
    const std::size_t close = text.find("}}", open);
    if (close == std::string::npos)
      throw ConfigError("unterminated slot in " + cls + "/" + variant + ":" + block);
    const std::string slot = text.substr(open + 2, close - open - 2);
    if (!slots.count(slot))
      throw ConfigError("slot '" + slot + "' is not declared by " + cls + "/" + variant);
    const auto b = bindings.find(slot);
    if (b == bindings.end())
      throw ConfigError("no binding for slot '" + slot + "' in " + cls + "/" + variant);
    out.append(text, pos, open - pos);
    out += b->second;
    pos = close + 2;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

bool DescriptionTemplate::allows_param(std::string_view name) const {
  return std::any_of(param_patterns.begin(), param_patterns.end(), [&](const std::string &p) {
    if (!p.empty() && p.back() == '*')
      return name.substr(0, p.size() - 1) == std::string_view(p).substr(0, p.size() - 1);
    return name == p;
  });
}

DescriptionTemplate parse_template(std::string_view text) {
  DescriptionTemplate t;
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.empty() || trim(lines[0]) != "---")
    throw ParseError(1, 1, "template must start with a '---' front matter line");
  std::size_t k = 1;
  for (; k < lines.size() && trim(lines[k]) != "---"; ++k) {
    const std::string line = trim(lines[k]);
    if (line.empty())
      continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw ParseError(k + 1, 1, "expected 'key: value' in front matter");
    const std::string key = trim(std::string_view(line).substr(0, colon));
    const std::string value = trim(std::string_view(line).substr(colon + 1));
    if (key == "class")
      t.cls = value;
    else if (key == "variant")
      t.variant = value;
    else if (key == "params")
      t.param_patterns = split_list(value);
    else if (key == "slots") {
      for (auto &s : split_list(value))
        t.slots.insert(std::move(s));
    } else
      throw ParseError(k + 1, 1, "unknown front matter key '" + key + "'");
  }
  if (k == lines.size())
    throw ParseError(k, 1, "front matter is not closed");
  if (t.cls.empty() || t.variant.empty())
    throw ParseError(1, 1, "front matter needs class and variant");

  std::string current = "body";
  std::string buffer;
  bool any_line = false;
  const auto flush = [&] {
    while (!buffer.empty() && buffer.back() == '\n')
      buffer.pop_back();
    if (any_line || !buffer.empty())
      t.blocks[current] = buffer;
    buffer.clear();
    any_line = false;
  };
  for (++k; k < lines.size(); ++k) {
    const std::string_view line = lines[k];
    if (line.substr(0, 3) == "@@ ") {
      flush();
      current = trim(line.substr(3));
      if (current.empty())
        throw ParseError(k + 1, 4, "block name missing");
      if (t.blocks.count(current))
        throw ParseError(k + 1, 4, "duplicate block '" + current + "'");
      any_line = true;
      continue;
    }
    buffer += line;
    buffer += '\n';
  }
  flush();
  return t;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path &dir) {
  TemplateLibrary lib;
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("template directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".tmpl")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto &file : files) {
    DescriptionTemplate t;
    try {
      t = parse_template(read_file(file));
    } catch (const ParseError &e) {
      throw ConfigError(file.string() + ": " + e.what());
    }
    if (t.cls != file.parent_path().filename().string() || t.variant != file.stem().string())
      throw ConfigError(file.string() + ": front matter does not match the file location");
    auto key = std::make_pair(t.cls, t.variant);
    lib.templates_.emplace(std::move(key), std::move(t));
  }
  return lib;
}

const TemplateLibrary &TemplateLibrary::bundled() {
  static const TemplateLibrary lib = load(data_dir() / "templates");
  return lib;
}

const DescriptionTemplate &TemplateLibrary::get(std::string_view cls,
                                                std::string_view variant) const {
  const auto it = templates_.find(std::make_pair(std::string(cls), std::string(variant)));
  if (it == templates_.end())
    throw ConfigError("no template " + std::string(cls) + "/" + std::string(variant));
  return it->second;
}

std::vector<std::string> TemplateLibrary::variants(std::string_view cls) const {
  std::vector<std::string> out;
  for (const auto &[key, t] : templates_)
    if (key.first == cls)
      out.push_back(key.second);
  return out;
}

} // namespace optisynth
