#include "optisynth/agent.hpp"

namespace optisynth {

namespace {

using json = nlohmann::ordered_json;

json stage_json(const StageTrace &s) {
  return {{"prompt_id", s.prompt_id}, {"prompt", s.prompt},   {"reasoning", s.reasoning},
          {"output", s.output},       {"calls", s.calls},     {"reasks", s.reasks}};
}

StageTrace stage_from(const nlohmann::json &j) {
  StageTrace s;
  s.prompt_id = j.at("prompt_id").get<std::string>();
  s.prompt = j.value("prompt", "");
  s.reasoning = j.value("reasoning", "");
  s.output = j.at("output").get<std::string>();
  s.calls = j.value("calls", 0);
  s.reasks = j.value("reasks", 0);
  return s;
}

json result_json(const ExecutorResult &r) {
  json j{{"status", std::string(to_string(r.status))}};
  j["value"] = r.value ? json(*r.value) : json(nullptr);
  j["message"] = r.message;
  return j;
}

ExecutorResult result_from(const nlohmann::json &j) {
  ExecutorResult r;
  r.status = parse_exec_status(j.at("status").get<std::string>());
  if (j.contains("value") && !j["value"].is_null())
    r.value = j["value"].get<double>();
  r.message = j.value("message", "");
  r.validate();
  return r;
}

} // namespace

nlohmann::json to_json(const WorkflowTrace &t) {
  json j;
  j["instance_id"] = t.instance_id;
  j["description"] = t.description;
  j["decomposition"] = json::array();
  for (const auto &s : t.decomposition)
    j["decomposition"].push_back(stage_json(s));
  j["formulation"] = json::array();
  for (const auto &s : t.formulation)
    j["formulation"].push_back(stage_json(s));
  j["components"] = t.components;
  j["formulation_text"] = t.formulation_text;
  j["tags"] = json::array();
  for (const auto &tag : t.tags) {
    json tj;
    tj["tag"] = std::string(to_string(tag.tag));
    tj["coding"] = stage_json(tag.coding);
    tj["code_versions"] = tag.code_versions;
    tj["results"] = json::array();
    for (const auto &r : tag.results)
      tj["results"].push_back(result_json(r));
    tj["debug_steps"] = json::array();
    for (const auto &d : tag.debug_steps)
      tj["debug_steps"].push_back(
          {{"prompt_id", d.prompt_id}, {"trigger", result_json(d.trigger)}, {"stage", stage_json(d.stage)}});
    tj["debug_rounds"] = tag.debug_rounds;
    tj["error"] = tag.error;
    j["tags"].push_back(tj);
  }
  json clusters = json::array();
  for (const auto &c : t.consensus.clusters) {
    json members = json::array();
    for (LanguageTag m : c.members)
      members.push_back(std::string(to_string(m)));
    clusters.push_back({{"representative", c.representative}, {"members", members}});
  }
  j["consensus"] = {{"clusters", clusters},
                    {"winner", t.consensus.winner ? json(*t.consensus.winner) : json(nullptr)},
                    {"reason", std::string(to_string(t.consensus.reason))}};
  j["answer"] = t.answer ? json(*t.answer) : json(nullptr);
  j["error"] = t.error;
  // ordered_json keeps insertion order; convert for the public type.
  return nlohmann::json::parse(j.dump());
}

WorkflowTrace trace_from_json(const nlohmann::json &j) {
  try {
    WorkflowTrace t;
    t.instance_id = j.value("instance_id", "");
    t.description = j.at("description").get<std::string>();
    for (const auto &s : j.at("decomposition"))
      t.decomposition.push_back(stage_from(s));
    for (const auto &s : j.at("formulation"))
      t.formulation.push_back(stage_from(s));
    t.components = j.value("components", "");
    t.formulation_text = j.value("formulation_text", "");
    for (const auto &tj : j.at("tags")) {
      TagTrace tag;
      tag.tag = parse_tag(tj.at("tag").get<std::string>());
      tag.coding = stage_from(tj.at("coding"));
      tag.code_versions = tj.at("code_versions").get<std::vector<std::string>>();
      for (const auto &r : tj.at("results"))
        tag.results.push_back(result_from(r));
      for (const auto &d : tj.at("debug_steps"))
        tag.debug_steps.push_back({d.at("prompt_id").get<std::string>(), result_from(d.at("trigger")),
                                   stage_from(d.at("stage"))});
      tag.debug_rounds = tj.value("debug_rounds", 0);
      tag.error = tj.value("error", "");
      t.tags.push_back(std::move(tag));
    }
    const auto &c = j.at("consensus");
    for (const auto &cl : c.at("clusters")) {
      ConsensusCluster cluster;
      cluster.representative = cl.at("representative").get<double>();
      for (const auto &m : cl.at("members"))
        cluster.members.push_back(parse_tag(m.get<std::string>()));
      t.consensus.clusters.push_back(std::move(cluster));
    }
    if (!c.at("winner").is_null())
      t.consensus.winner = c["winner"].get<double>();
    t.consensus.reason = parse_vote_reason(c.at("reason").get<std::string>());
    if (!j.at("answer").is_null())
      t.answer = j["answer"].get<double>();
    t.error = j.value("error", "");
    return t;
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(0, 0, std::string("malformed workflow trace: ") + e.what());
  }
}

} // namespace optisynth
