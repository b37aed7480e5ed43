#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "optisynth/resources.hpp"
#include "optisynth/trajectory.hpp"

namespace optisynth {

namespace {

struct Schema {
  std::vector<std::string> instruction;
  std::vector<std::string> output;
};

const Schema &schema(PairKind kind) {
  static const Schema da{{"problem_description", "decomposition_prompt"},
                         {"reasoning_step_1", "extracted_components"}};
  static const Schema fa{{"problem_description", "extracted_components", "formulation_prompt"},
                         {"reasoning_step_2", "math_formulation"}};
  static const Schema ca{{"problem_description", "math_formulation", "coding_prompt"},
                         {"reasoning_step_3", "code"}};
  static const Schema debug{
      {"problem_description", "code_w_error", "error_message", "debugging_prompt"},
      {"reasoning", "code"}};
  switch (kind) {
  case PairKind::DA:
    return da;
  case PairKind::FA:
    return fa;
  case PairKind::CA:
    return ca;
  case PairKind::Debug:
    return debug;
  }
  return da;
}

std::vector<NamedPart> parts(PairKind kind, bool instruction, std::vector<std::string> texts) {
  const auto &names = instruction ? schema(kind).instruction : schema(kind).output;
  std::vector<NamedPart> out;
  for (std::size_t k = 0; k < names.size(); ++k)
    out.push_back({names[k], std::move(texts[k])});
  return out;
}

bool names_match(const std::vector<NamedPart> &parts, const std::vector<std::string> &names) {
  if (parts.size() != names.size())
    return false;
  for (std::size_t k = 0; k < names.size(); ++k)
    if (parts[k].name != names[k])
      return false;
  return true;
}

int kind_rank(PairKind k) { return static_cast<int>(k); }

int tag_rank(const std::optional<LanguageTag> &t) { return t ? static_cast<int>(*t) + 1 : 0; }

} // namespace

std::string_view to_string(PairKind kind) {
  switch (kind) {
  case PairKind::DA:
    return "DA";
  case PairKind::FA:
    return "FA";
  case PairKind::CA:
    return "CA";
  case PairKind::Debug:
    return "DEBUG";
  }
  return "?";
}

PairKind parse_pair_kind(std::string_view text) {
  for (PairKind k : {PairKind::DA, PairKind::FA, PairKind::CA, PairKind::Debug})
    if (text == to_string(k))
      return k;
  throw ParseError(0, 0, "unknown pair kind '" + std::string(text) + "'");
}

void TrajectoryPair::validate() const {
  const Schema &s = schema(kind);
  if (!names_match(instruction, s.instruction) || !names_match(output, s.output))
    throw ModelError(std::string("part names do not fit a ") + std::string(to_string(kind)) +
                     " pair");
  const bool tagged = kind == PairKind::CA || kind == PairKind::Debug;
  if (tagged != tag.has_value())
    throw ModelError(std::string(to_string(kind)) + " pair " +
                     (tagged ? "needs a language tag" : "must not carry a language tag"));
  if (tagged != value.has_value())
    throw ModelError(std::string(to_string(kind)) + " pair " +
                     (tagged ? "needs an executor value" : "must not carry a value"));
}

std::optional<Trajectory> assemble(const WorkflowTrace &trace, double ground_truth, double epsilon) {
  if (!trace.error.empty() || trace.decomposition.empty() || trace.formulation.empty())
    return std::nullopt;

  Trajectory t;
  t.instance_id = trace.instance_id;
  t.ground_truth = ground_truth;
  for (const TagTrace &tag : trace.tags) {
    const ExecutorResult *r = tag.final_result();
    if (!r || !r->is_ok() || std::abs(*r->value - ground_truth) > epsilon)
      continue;
    t.matched.insert(tag.tag);
    TrajectoryPair ca;
    ca.kind = PairKind::CA;
    ca.tag = tag.tag;
    ca.value = r->value;
    ca.instruction = parts(PairKind::CA, true,
                           {trace.description, trace.formulation_text, tag.coding.prompt});
    ca.output = parts(PairKind::CA, false, {tag.coding.reasoning, tag.code_versions.back()});
    t.pair_ca.push_back(std::move(ca));

    if (!tag.debug_steps.empty()) {
      const DebugStep &step = tag.debug_steps.back();
      const std::size_t k = tag.code_versions.size() - 2; // version the step repaired
      TrajectoryPair d;
      d.kind = PairKind::Debug;
      d.tag = tag.tag;
      d.value = r->value;
      d.instruction = parts(PairKind::Debug, true,
                            {trace.description, tag.code_versions[k], step.trigger.message,
                             step.stage.prompt});
      d.output = parts(PairKind::Debug, false, {step.stage.reasoning, step.stage.output});
      t.debug.push_back(std::move(d));
    }
  }
  if (t.matched.empty())
    return std::nullopt;

  const StageTrace &dec = trace.decomposition.front();
  t.pair_da.kind = PairKind::DA;
  t.pair_da.instruction = parts(PairKind::DA, true, {trace.description, dec.prompt});
  t.pair_da.output = parts(PairKind::DA, false, {dec.reasoning, trace.components});

  const StageTrace &form = trace.formulation.front();
  t.pair_fa.kind = PairKind::FA;
  t.pair_fa.instruction =
      parts(PairKind::FA, true, {trace.description, trace.components, form.prompt});
  t.pair_fa.output = parts(PairKind::FA, false, {form.reasoning, trace.formulation_text});
  return t;
}

std::vector<SftRecord> sft_records(const std::vector<Trajectory> &trajectories) {
  std::vector<SftRecord> out;
  for (const Trajectory &t : trajectories) {
    out.push_back({kSftSchemaVersion, t.instance_id, t.pair_da});
    out.push_back({kSftSchemaVersion, t.instance_id, t.pair_fa});
    for (const auto &p : t.pair_ca)
      out.push_back({kSftSchemaVersion, t.instance_id, p});
    for (const auto &p : t.debug)
      out.push_back({kSftSchemaVersion, t.instance_id, p});
  }
  std::stable_sort(out.begin(), out.end(), [](const SftRecord &a, const SftRecord &b) {
    if (a.instance_id != b.instance_id)
      return a.instance_id < b.instance_id;
    if (a.pair.kind != b.pair.kind)
      return kind_rank(a.pair.kind) < kind_rank(b.pair.kind);
    return tag_rank(a.pair.tag) < tag_rank(b.pair.tag);
  });
  for (const auto &r : out)
    r.pair.validate();
  return out;
}

std::string sft_line(const SftRecord &r) {
  nlohmann::ordered_json j;
  j["schema_version"] = r.schema_version;
  j["instance_id"] = r.instance_id;
  j["kind"] = std::string(to_string(r.pair.kind));
  if (r.pair.tag)
    j["tag"] = std::string(to_string(*r.pair.tag));
  nlohmann::ordered_json in = nlohmann::ordered_json::object();
  for (const auto &p : r.pair.instruction)
    in[p.name] = p.text;
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto &p : r.pair.output)
    out[p.name] = p.text;
  j["instruction"] = std::move(in);
  j["output"] = std::move(out);
  if (r.pair.value)
    j["value"] = *r.pair.value;
  return j.dump();
}

SftRecord parse_sft_line(std::string_view line, std::size_t line_no) {
  try {
    const auto j = nlohmann::ordered_json::parse(line);
    SftRecord r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kSftSchemaVersion)
      throw ModelError("unsupported SFT schema version " + std::to_string(r.schema_version));
    r.instance_id = j.at("instance_id").get<std::string>();
    r.pair.kind = parse_pair_kind(j.at("kind").get<std::string>());
    if (j.contains("tag"))
      r.pair.tag = parse_tag(j["tag"].get<std::string>());
    for (const auto &[k, v] : j.at("instruction").items())
      r.pair.instruction.push_back({k, v.get<std::string>()});
    for (const auto &[k, v] : j.at("output").items())
      r.pair.output.push_back({k, v.get<std::string>()});
    if (j.contains("value"))
      r.pair.value = j["value"].get<double>();
    r.pair.validate();
    return r;
  } catch (const std::exception &e) {
    throw ParseError(line_no, line_no ? 1 : 0, std::string("malformed SFT record: ") + e.what());
  }
}

std::size_t export_sft(const std::vector<Trajectory> &trajectories, const std::filesystem::path &path) {
  const auto records = sft_records(trajectories);
  std::string text;
  for (const auto &r : records)
    text += sft_line(r) + "\n";
  write_file(path, text);
  return records.size();
}

std::vector<SftRecord> read_sft(const std::filesystem::path &path) {
  std::istringstream in(read_file(path));
  std::vector<SftRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty())
      continue;
    out.push_back(parse_sft_line(line, n));
  }
  return out;
}

} // namespace optisynth
