#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "optisynth/model.hpp"
#include "optisynth/solver.hpp"
#include "optisynth/teacher.hpp"

namespace optisynth {

// ---------------------------------------------------------------------------
// Modeling-language tags

enum class LanguageTag { Pyomo, Gurobipy, Docplex, Cvxpy, Pyscipopt };

/// Fixed priority order used for voting and reporting.
const std::array<LanguageTag, 5> &all_tags();
std::string_view to_string(LanguageTag tag);   // "pyomo", ...
std::string_view solver_name(LanguageTag tag); // "Pyomo", ... as named in prompts
/// Accepts the tag or the solver name. Throws ConfigError otherwise.
LanguageTag parse_tag(std::string_view text);

// ---------------------------------------------------------------------------
// Executors

enum class ExecStatus { Ok, RuntimeError, InfeasibleModel, Timeout };

std::string_view to_string(ExecStatus status); // wire names: ok, runtime_error, ...
ExecStatus parse_exec_status(std::string_view text);

struct ExecutorResult {
  ExecStatus status = ExecStatus::RuntimeError;
  std::optional<double> value; // present iff ok
  std::string message;

  static ExecutorResult ok(double value, std::string message = {});
  static ExecutorResult failure(ExecStatus status, std::string message);
  bool is_ok() const { return status == ExecStatus::Ok; }
  /// Throws ModelError unless ok comes with a finite value and only ok does.
  void validate() const;

  friend bool operator==(const ExecutorResult &, const ExecutorResult &) = default;
};

/// Runs generated code for one modeling ecosystem.
class Executor {
public:
  virtual ~Executor() = default;
  virtual ExecutorResult run(LanguageTag tag, const std::string &code,
                             std::chrono::seconds timeout) = 0;
};

/// Returns queued results per tag, repeating the last one when the queue
/// runs dry. Records every request.
class ScriptedExecutor : public Executor {
public:
  void script(LanguageTag tag, std::vector<ExecutorResult> results);
  ExecutorResult run(LanguageTag tag, const std::string &code, std::chrono::seconds timeout) override;
  std::size_t runs(LanguageTag tag) const;
  const std::vector<std::string> &codes(LanguageTag tag) const;

private:
  mutable std::mutex mu_;
  std::map<LanguageTag, std::vector<ExecutorResult>> script_;
  std::map<LanguageTag, std::size_t> cursor_;
  std::map<LanguageTag, std::vector<std::string>> codes_;
};

/// Ignores the code and solves the paired problem with the internal engine.
class OracleExecutor : public Executor {
public:
  explicit OracleExecutor(Problem problem, SolverConfig cfg = {});
  ExecutorResult run(LanguageTag tag, const std::string &code, std::chrono::seconds timeout) override;

private:
  Problem problem_;
  SolverConfig cfg_;
  std::mutex mu_;
  std::optional<ExecutorResult> cached_;
};

/// Adds a constant to every ok value of another executor.
class ShiftedExecutor : public Executor {
public:
  ShiftedExecutor(Executor &inner, double shift) : inner_(inner), shift_(shift) {}
  ExecutorResult run(LanguageTag tag, const std::string &code, std::chrono::seconds timeout) override;

private:
  Executor &inner_;
  double shift_;
};

/// One request line: {"tag","code","timeout_s"}.
std::string encode_run_request(LanguageTag tag, const std::string &code, std::chrono::seconds timeout);
/// One response line: {"status","value","message"}. Malformed lines become
/// runtime_error results describing the problem.
ExecutorResult decode_run_response(std::string_view line);

/// Starts `argv` once per request, writes the request line to its stdin and
/// reads one response line from its stdout. The process is killed when it
/// outlives the timeout plus `grace`.
class SubprocessExecutor : public Executor {
public:
  explicit SubprocessExecutor(std::vector<std::string> argv,
                              std::chrono::seconds grace = std::chrono::seconds(5));
  ExecutorResult run(LanguageTag tag, const std::string &code, std::chrono::seconds timeout) override;

private:
  std::vector<std::string> argv_;
  std::chrono::seconds grace_;
};

/// Executor per tag. Entries may be shared.
using ExecutorSet = std::map<LanguageTag, Executor *>;
ExecutorSet same_executor(Executor &executor);

// ---------------------------------------------------------------------------
// Consensus

enum class VoteReason { Majority, TieBroken, NoValidResults };
std::string_view to_string(VoteReason reason);
VoteReason parse_vote_reason(std::string_view text);

struct ConsensusCluster {
  double representative = 0;
  std::vector<LanguageTag> members;
  friend bool operator==(const ConsensusCluster &, const ConsensusCluster &) = default;
};

struct ConsensusReport {
  std::vector<ConsensusCluster> clusters;
  std::optional<double> winner;
  VoteReason reason = VoteReason::NoValidResults;
  friend bool operator==(const ConsensusReport &, const ConsensusReport &) = default;
};

inline constexpr double kDefaultVoteEpsilon = 1e-4;

/// Ok values visited in tag priority order; each joins the first cluster
/// whose representative is within epsilon, or starts a new one. The largest
/// cluster wins; among equally large clusters the earliest wins (tie_broken).
ConsensusReport majority_vote(const std::map<LanguageTag, ExecutorResult> &results,
                              double epsilon = kDefaultVoteEpsilon);

// ---------------------------------------------------------------------------
// Stages and traces

class StageError : public Error {
public:
  using Error::Error;
};

/// One prompt-and-extract step.
struct StageTrace {
  std::string prompt_id;
  std::string prompt;    // rendered instruction
  std::string reasoning; // text before the fenced block
  std::string output;    // fenced content
  int calls = 0;
  int reasks = 0;
};

struct DebugStep {
  std::string prompt_id; // code_debugging or infeasibility_debugging
  ExecutorResult trigger;
  StageTrace stage; // output is the revised code
};

struct TagTrace {
  LanguageTag tag = LanguageTag::Pyomo;
  StageTrace coding;
  std::vector<std::string> code_versions; // code_versions[k] produced results[k]
  std::vector<ExecutorResult> results;
  std::vector<DebugStep> debug_steps;
  int debug_rounds = 0;
  std::string error; // stage failure, empty when none

  const ExecutorResult *final_result() const { return results.empty() ? nullptr : &results.back(); }
};

struct WorkflowTrace {
  std::string instance_id;
  std::string description;
  std::vector<StageTrace> decomposition; // first call, then verifier rounds
  std::vector<StageTrace> formulation;
  std::string components;
  std::string formulation_text;
  std::vector<TagTrace> tags; // all_tags() order, only tags that ran
  ConsensusReport consensus;
  std::optional<double> answer;
  std::string error; // first stage failure before coding

  /// Calls excluding re-asks, and re-asks alone.
  int backend_calls() const;
  int reasks() const;
};

nlohmann::json to_json(const WorkflowTrace &trace);
WorkflowTrace trace_from_json(const nlohmann::json &j);

// ---------------------------------------------------------------------------
// Agents

struct AgentOptions {
  int verifier_rounds = 1;
  int max_debug_rounds = 6;
  double vote_epsilon = kDefaultVoteEpsilon;
  std::chrono::seconds timeout{60};
  bool parallel_tags = true;
  std::vector<LanguageTag> tags{all_tags().begin(), all_tags().end()};
  /// Demonstration for the infeasibility prompt; empty loads the bundled one.
  std::string infeasibility_demo;

  void validate() const;
};

/// Decomposition prompt then `verifier_rounds` verifier prompts; returns the
/// stages, the last output being the component list.
std::vector<StageTrace> decompose(ChatBackend &backend, const std::string &description,
                                  int verifier_rounds = 1);
std::vector<StageTrace> formulate(ChatBackend &backend, const std::string &description,
                                  const std::string &components, int verifier_rounds = 1);
StageTrace write_code(ChatBackend &backend, const std::string &description,
                      const std::string &components, const std::string &formulation,
                      LanguageTag tag);

/// Runs the code, then per failure one debugging prompt and a rerun, for at
/// most `max_rounds` rounds. Appends to track.
void execute_with_debug(Executor &executor, ChatBackend &backend, const std::string &description,
                        const std::string &code, TagTrace &track, const AgentOptions &opts);

/// Full workflow; stage failures are recorded in the trace, never thrown.
WorkflowTrace run_pipeline(ChatBackend &backend, const ExecutorSet &executors,
                           const std::string &description, const AgentOptions &opts = {},
                           std::string instance_id = {});

} // namespace optisynth
