#include <algorithm>
#include <cctype>

#include <json.hpp>

#include "optisynth/resources.hpp"
#include "optisynth/teacher.hpp"

namespace optisynth {

namespace {

bool slot_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

/// Calls visit(pos, len, name) for each `{name}` in body.
template <typename Visit> void scan_slots(std::string_view body, Visit visit) {
  for (std::size_t pos = body.find('{'); pos != std::string_view::npos;
       pos = body.find('{', pos + 1)) {
    std::size_t end = pos + 1;
    while (end < body.size() && slot_char(body[end]))
      ++end;
    if (end > pos + 1 && end < body.size() && body[end] == '}')
      visit(pos, end + 1 - pos, body.substr(pos + 1, end - pos - 1));
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

} // namespace

std::set<std::string> prompt_slots(std::string_view body) {
  std::set<std::string> out;
  scan_slots(body, [&](std::size_t, std::size_t, std::string_view name) { out.emplace(name); });
  return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path &dir) {
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_file(dir / "index.json"));
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("bad prompt index in " + dir.string() + ": " + e.what());
  }
  PromptLibrary lib;
  for (const auto &entry : index.at("templates")) {
    PromptTemplate t;
    t.id = entry.at("id").get<std::string>();
    t.title = entry.value("title", t.id);
    t.partial = entry.value("partial", false);
    t.body = read_file(dir / entry.at("file").get<std::string>());
    t.required = prompt_slots(t.body);
    lib.templates_.push_back(std::move(t));
  }
  return lib;
}

const PromptLibrary &PromptLibrary::bundled() {
  static const PromptLibrary lib = load(prompts_dir());
  return lib;
}

const PromptTemplate &PromptLibrary::get(std::string_view id) const {
  const auto it = std::find_if(templates_.begin(), templates_.end(),
                               [&](const PromptTemplate &t) { return t.id == id; });
  if (it == templates_.end())
    throw ConfigError("unknown prompt '" + std::string(id) + "'");
  return *it;
}

std::vector<std::string> PromptLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto &t : templates_)
    out.push_back(t.id);
  return out;
}

std::string PromptLibrary::render(std::string_view id, const Bindings &bindings) const {
  const PromptTemplate &t = get(id);
  for (const auto &slot : t.required)
    if (!bindings.count(slot))
      throw ConfigError("prompt '" + t.id + "' needs a binding for {" + slot + "}");
  std::string out;
  std::size_t copied = 0;
  scan_slots(t.body, [&](std::size_t pos, std::size_t len, std::string_view name) {
    out.append(t.body, copied, pos - copied);
    out += bindings.at(std::string(name));
    copied = pos + len;
  });
  out.append(t.body, copied, std::string::npos);
  return out;
}

std::string render_prompt(std::string_view id, const Bindings &bindings) {
  return PromptLibrary::bundled().render(id, bindings);
}

FencedOutput split_fenced(std::string_view response) {
  struct Line {
    std::size_t begin, end; // end excludes the newline
  };
  std::vector<Line> lines;
  for (std::size_t pos = 0; pos <= response.size();) {
    std::size_t nl = response.find('\n', pos);
    if (nl == std::string_view::npos)
      nl = response.size();
    lines.push_back({pos, nl});
    pos = nl + 1;
  }
  const auto is_fence = [&](const Line &l) {
    std::string_view s = response.substr(l.begin, l.end - l.begin);
    const auto b = s.find_first_not_of(" \t");
    return b != std::string_view::npos && s.substr(b, 3) == "```";
  };
  // Pair fences in order; the last complete pair wins.
  std::optional<std::pair<std::size_t, std::size_t>> last;
  std::optional<std::size_t> open;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (!is_fence(lines[k]))
      continue;
    if (open) {
      last = std::make_pair(*open, k);
      open.reset();
    } else {
      open = k;
    }
  }
  if (!last)
    throw ExtractionError("response has no block enclosed between ``` lines");
  const auto [first, close] = *last;
  FencedOutput out;
  if (close > first + 1) {
    const std::size_t b = lines[first + 1].begin;
    std::size_t e = lines[close - 1].end;
    out.content = std::string(response.substr(b, e - b));
  }
  out.reasoning = trim(response.substr(0, lines[first].begin));
  return out;
}

std::string extract_fenced(std::string_view response) { return split_fenced(response).content; }

} // namespace optisynth
