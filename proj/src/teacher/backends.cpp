#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "optisynth/resources.hpp"
#include "optisynth/teacher.hpp"

namespace optisynth {

void ChatExchange::validate() const {
  if (messages.empty())
    throw ConfigError("chat exchange has no messages");
  for (const auto &m : messages)
    if (m.role != "system" && m.role != "user" && m.role != "assistant")
      throw ConfigError("invalid chat role '" + m.role + "'");
}

ChatExchange make_exchange(std::string_view prompt_id, const Bindings &bindings) {
  ChatExchange ex;
  ex.messages.push_back({"user", render_prompt(prompt_id, bindings)});
  ex.prompt_id = std::string(prompt_id);
  ex.bindings = bindings;
  return ex;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t &h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  h ^= 0xff; // field separator outside the byte range of text
  h *= kFnvPrime;
}

std::string normalize(std::string_view s) {
  std::string out;
  std::string line;
  const auto flush = [&] {
    const auto e = line.find_last_not_of(" \t");
    out += e == std::string::npos ? "" : line.substr(0, e + 1);
  };
  for (std::size_t k = 0; k < s.size(); ++k) {
    const char c = s[k];
    if (c == '\r' && k + 1 < s.size() && s[k + 1] == '\n')
      continue;
    if (c == '\n') {
      flush();
      out += '\n';
      line.clear();
    } else {
      line += c;
    }
  }
  flush();
  while (!out.empty() && out.back() == '\n')
    out.pop_back();
  return out;
}

} // namespace

std::uint64_t request_hash(const ChatExchange &exchange) {
  std::uint64_t h = kFnvOffset;
  fnv(h, exchange.prompt_id);
  for (const auto &[key, value] : exchange.bindings) { // std::map iterates sorted
    fnv(h, key);
    fnv(h, normalize(value));
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
  return buf;
}

ReplayMismatchError::ReplayMismatchError(std::string expected, std::string actual)
    : Error("replay mismatch: expected request " + expected + ", got " + actual),
      expected_(std::move(expected)), actual_(std::move(actual)) {}

std::vector<TranscriptRecord> read_transcript(const std::filesystem::path &path) {
  std::istringstream in(read_file(path));
  std::vector<TranscriptRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("request_hash").get<std::string>(), j.value("prompt_id", ""),
                     j.at("response").get<std::string>()});
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(lineno, 1, "bad transcript record in " + path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_transcript(const std::filesystem::path &path,
                      const std::vector<TranscriptRecord> &records) {
  std::string out;
  for (const auto &r : records) {
    nlohmann::ordered_json j;
    j["request_hash"] = r.request_hash;
    j["prompt_id"] = r.prompt_id;
    j["response"] = r.response;
    out += j.dump() + "\n";
  }
  write_file(path, out);
}

ReplayBackend::ReplayBackend(std::vector<TranscriptRecord> records)
    : records_(std::move(records)), used_(records_.size(), false) {}

std::unique_ptr<ReplayBackend> ReplayBackend::open(const std::filesystem::path &path) {
  return std::make_unique<ReplayBackend>(read_transcript(path));
}

ChatReply ReplayBackend::complete(const ChatExchange &exchange) {
  exchange.validate();
  const std::string actual = hash_hex(request_hash(exchange));
  std::lock_guard lock(mu_);
  std::optional<std::size_t> next_unused;
  for (std::size_t k = 0; k < records_.size(); ++k) {
    if (used_[k])
      continue;
    if (!next_unused)
      next_unused = k;
    if (records_[k].request_hash == actual) {
      used_[k] = true;
      return {records_[k].response, 1};
    }
  }
  throw ReplayMismatchError(next_unused ? records_[*next_unused].request_hash : "<exhausted>",
                            actual + " (" + exchange.prompt_id + ")");
}

std::size_t ReplayBackend::remaining() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count(used_.begin(), used_.end(), false));
}

void ReplayBackend::check_exhausted() const {
  std::lock_guard lock(mu_);
  for (std::size_t k = 0; k < records_.size(); ++k)
    if (!used_[k])
      throw Error("replay transcript not exhausted: record " + std::to_string(k + 1) + " (" +
                  records_[k].request_hash + " " + records_[k].prompt_id + ") was never requested");
}

ChatReply RecordingBackend::complete(const ChatExchange &exchange) {
  ChatReply reply = inner_.complete(exchange);
  std::lock_guard lock(mu_);
  records_.push_back({hash_hex(request_hash(exchange)), exchange.prompt_id, reply.text});
  return reply;
}

std::vector<TranscriptRecord> RecordingBackend::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

ChatReply FunctionBackend::complete(const ChatExchange &exchange) {
  exchange.validate();
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  return {handler_(exchange), 1};
}

std::size_t FunctionBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::unique_ptr<ChatBackend> make_backend(const BackendSpec &spec) {
  if (spec.kind == "replay") {
    if (spec.transcript.empty())
      throw ConfigError("replay backend needs a transcript path");
    return ReplayBackend::open(spec.transcript);
  }
  if (spec.kind == "live") {
    if (spec.endpoint.empty())
      throw ConfigError("live backend needs an endpoint");
    LiveConfig cfg;
    cfg.endpoint = spec.endpoint;
    cfg.model = spec.model;
    cfg.credential_env = spec.credential_env;
    return std::make_unique<LiveBackend>(cfg, make_http_transport());
  }
  throw ConfigError("unknown backend kind '" + spec.kind + "'");
}

namespace {

constexpr const char *kReask =
    "Your answer did not contain a block enclosed between the \"```\" lines. Repeat your final "
    "answer and enclose it between the \"```\" lines.";

} // namespace

FencedReply complete_fenced(ChatBackend &backend, const ChatExchange &exchange) {
  FencedReply out;
  const ChatReply first = backend.complete(exchange);
  out.calls = 1;
  try {
    out.output = split_fenced(first.text);
    out.raw = first.text;
    return out;
  } catch (const ExtractionError &) {
  }
  ChatExchange again = exchange;
  again.messages.push_back({"assistant", first.text});
  again.messages.push_back({"user", kReask});
  again.prompt_id += "/reask";
  again.bindings["previous_response"] = first.text;
  const ChatReply second = backend.complete(again);
  out.calls = 2;
  out.reasked = true;
  try {
    out.output = split_fenced(second.text);
  } catch (const ExtractionError &) {
    throw ExtractionError("no block enclosed between ``` lines after one re-ask (" +
                          exchange.prompt_id + ")");
  }
  out.raw = second.text;
  return out;
}

std::string_view to_string(RepairKind kind) {
  switch (kind) {
  case RepairKind::Variables:
    return "variables";
  case RepairKind::Objective:
    return "objective";
  case RepairKind::Constraint:
    return "constraint";
  case RepairKind::Ranges:
    return "ranges";
  case RepairKind::Description:
    return "description";
  }
  return "?";
}

std::string_view repair_prompt(RepairKind kind) {
  switch (kind) {
  case RepairKind::Variables:
    return "variable_definition_debugging";
  case RepairKind::Objective:
    return "objective_definition_debugging";
  case RepairKind::Constraint:
    return "constraint_definition_debugging";
  case RepairKind::Ranges:
    return "parameter_range_debugging";
  case RepairKind::Description:
    return "symbolic_debugging";
  }
  return "?";
}

RepairResult repair_loop(ChatBackend &backend, RepairKind kind, const Bindings &context,
                         std::string text, std::set<std::string> missing, int budget,
                         const CoverageCheck &check) {
  if (budget < 1)
    throw ConfigError("repair budget must be at least 1");
  const PromptTemplate &prompt = PromptLibrary::bundled().get(repair_prompt(kind));
  const std::string missing_slot =
      prompt.required.count("missing_params") ? "missing_params" : "missing_components";
  RepairResult result;
  result.text = std::move(text);
  result.missing = std::move(missing);
  while (!result.missing.empty() && result.calls < budget) {
    Bindings b = context;
    std::string list;
    for (const auto &name : result.missing)
      list += (list.empty() ? "" : ", ") + name;
    b[missing_slot] = list;
    if (prompt.required.count("previous_description"))
      b["previous_description"] = result.text;
    ++result.calls;
    const ChatReply reply = backend.complete(make_exchange(prompt.id, b));
    try {
      result.text = extract_fenced(reply.text);
    } catch (const ExtractionError &) {
      continue; // an unusable answer still spends budget
    }
    result.missing = check(result.text);
  }
  result.passed = result.missing.empty();
  return result;
}

} // namespace optisynth
