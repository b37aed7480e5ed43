#include <algorithm>
#include <future>

#include "optisynth/agent.hpp"
#include "optisynth/resources.hpp"

namespace optisynth {

void AgentOptions::validate() const {
  if (verifier_rounds < 0)
    throw ConfigError("verifier rounds must be nonnegative");
  if (max_debug_rounds < 0)
    throw ConfigError("max debug rounds must be nonnegative");
  if (!(vote_epsilon > 0))
    throw ConfigError("vote epsilon must be positive");
  if (timeout.count() <= 0)
    throw ConfigError("executor timeout must be positive");
}

int WorkflowTrace::backend_calls() const {
  int n = 0;
  const auto add = [&](const StageTrace &s) { n += s.calls - s.reasks; };
  for (const auto &s : decomposition)
    add(s);
  for (const auto &s : formulation)
    add(s);
  for (const auto &t : tags) {
    add(t.coding);
    for (const auto &d : t.debug_steps)
      add(d.stage);
  }
  return n;
}

int WorkflowTrace::reasks() const {
  int n = 0;
  for (const auto &s : decomposition)
    n += s.reasks;
  for (const auto &s : formulation)
    n += s.reasks;
  for (const auto &t : tags) {
    n += t.coding.reasks;
    for (const auto &d : t.debug_steps)
      n += d.stage.reasks;
  }
  return n;
}

namespace {

StageTrace run_stage(ChatBackend &backend, const std::string &prompt_id, const Bindings &bindings) {
  const ChatExchange ex = make_exchange(prompt_id, bindings);
  StageTrace s;
  s.prompt_id = prompt_id;
  s.prompt = ex.messages.front().content;
  const FencedReply reply = complete_fenced(backend, ex);
  s.reasoning = reply.output.reasoning;
  s.output = reply.output.content;
  s.calls = reply.calls;
  s.reasks = reply.reasked ? 1 : 0;
  return s;
}

void require_description(const std::string &description) {
  if (description.find_first_not_of(" \t\r\n") == std::string::npos)
    throw StageError("empty problem description");
}

const std::string &bundled_infeasibility_demo() {
  static const std::string demo = read_file(data_dir() / "demos" / "infeasibility_debugging.txt");
  return demo;
}

} // namespace

std::vector<StageTrace> decompose(ChatBackend &backend, const std::string &description,
                                  int verifier_rounds) {
  require_description(description);
  std::vector<StageTrace> stages;
  stages.push_back(run_stage(backend, "decomposition", {{"description", description}}));
  for (int k = 0; k < verifier_rounds; ++k)
    stages.push_back(run_stage(backend, "decomposition_verifier",
                               {{"description", description},
                                {"previous_components", stages.back().output}}));
  return stages;
}

std::vector<StageTrace> formulate(ChatBackend &backend, const std::string &description,
                                  const std::string &components, int verifier_rounds) {
  require_description(description);
  std::vector<StageTrace> stages;
  stages.push_back(
      run_stage(backend, "formulation", {{"description", description}, {"components", components}}));
  for (int k = 0; k < verifier_rounds; ++k)
    stages.push_back(run_stage(backend, "formulation_verifier",
                               {{"description", description},
                                {"components", components},
                                {"previous_formulation", stages.back().output}}));
  return stages;
}

StageTrace write_code(ChatBackend &backend, const std::string &description,
                      const std::string &components, const std::string &formulation,
                      LanguageTag tag) {
  require_description(description);
  if (components.empty() || formulation.empty())
    throw StageError("coding needs components and a formulation");
  return run_stage(backend, "programmer",
                   {{"solver", std::string(solver_name(tag))},
                    {"description", description},
                    {"components", components},
                    {"formulation", formulation}});
}

void execute_with_debug(Executor &executor, ChatBackend &backend, const std::string &description,
                        const std::string &code, TagTrace &track, const AgentOptions &opts) {
  const std::string solver(solver_name(track.tag));
  std::string current = code;
  for (;;) {
    ExecutorResult r;
    try {
      r = executor.run(track.tag, current, opts.timeout);
      r.validate();
    } catch (const std::exception &e) {
      r = ExecutorResult::failure(ExecStatus::RuntimeError, e.what());
    }
    track.code_versions.push_back(current);
    track.results.push_back(r);
    if (r.is_ok() || track.debug_rounds >= opts.max_debug_rounds)
      return;
    ++track.debug_rounds;
    std::string prompt_id;
    Bindings b{{"solver", solver}, {"description", description}, {"code_w_error", current}};
    if (r.status == ExecStatus::InfeasibleModel) {
      prompt_id = "infeasibility_debugging";
      b["code_examples"] =
          opts.infeasibility_demo.empty() ? bundled_infeasibility_demo() : opts.infeasibility_demo;
    } else {
      prompt_id = "code_debugging";
      b["error_message"] = r.status == ExecStatus::Timeout
                               ? "Execution timed out: " + r.message
                               : r.message;
    }
    try {
      StageTrace s = run_stage(backend, prompt_id, b);
      current = s.output;
      track.debug_steps.push_back({prompt_id, r, std::move(s)});
    } catch (const Error &e) {
      track.error = std::string("debugging: ") + e.what();
      return;
    }
  }
}

WorkflowTrace run_pipeline(ChatBackend &backend, const ExecutorSet &executors,
                           const std::string &description, const AgentOptions &opts,
                           std::string instance_id) {
  opts.validate();
  WorkflowTrace trace;
  trace.instance_id = std::move(instance_id);
  trace.description = description;
  try {
    trace.decomposition = decompose(backend, description, opts.verifier_rounds);
    trace.components = trace.decomposition.back().output;
  } catch (const Error &e) {
    trace.error = std::string("decomposition: ") + e.what();
    return trace;
  }
  try {
    trace.formulation = formulate(backend, description, trace.components, opts.verifier_rounds);
    trace.formulation_text = trace.formulation.back().output;
  } catch (const Error &e) {
    trace.error = std::string("formulation: ") + e.what();
    return trace;
  }

  std::vector<LanguageTag> tags;
  for (LanguageTag t : all_tags())
    if (std::find(opts.tags.begin(), opts.tags.end(), t) != opts.tags.end())
      tags.push_back(t);

  const auto run_track = [&](LanguageTag tag) {
    TagTrace track;
    track.tag = tag;
    const auto ex = executors.find(tag);
    if (ex == executors.end() || ex->second == nullptr) {
      track.error = "no executor for " + std::string(to_string(tag));
      return track;
    }
    try {
      track.coding = write_code(backend, description, trace.components, trace.formulation_text, tag);
    } catch (const Error &e) {
      track.error = std::string("coding: ") + e.what();
      return track;
    }
    try {
      execute_with_debug(*ex->second, backend, description, track.coding.output, track, opts);
    } catch (const std::exception &e) {
      track.error = std::string("execution: ") + e.what();
    }
    return track;
  };

  if (opts.parallel_tags) {
    std::vector<std::future<TagTrace>> futures;
    for (LanguageTag t : tags)
      futures.push_back(std::async(std::launch::async, run_track, t));
    for (auto &f : futures)
      trace.tags.push_back(f.get());
  } else {
    for (LanguageTag t : tags)
      trace.tags.push_back(run_track(t));
  }

  std::map<LanguageTag, ExecutorResult> finals;
  for (const auto &t : trace.tags)
    if (const ExecutorResult *r = t.final_result())
      finals[t.tag] = *r;
  trace.consensus = majority_vote(finals, opts.vote_epsilon);
  trace.answer = trace.consensus.winner;
  return trace;
}

} // namespace optisynth
