#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optisynth/agent.hpp"
#include "optisynth/dataset.hpp"
#include "optisynth/solver.hpp"

namespace optisynth {

inline constexpr double kFineEpsilon = 1e-4;
inline constexpr double kRoundedEpsilon = 1e-1;

/// Digits after the decimal point in a numeric literal, counting the shift
/// from an exponent ("1.5e-3" has 4). Throws ParseError when not a number.
int label_decimals(std::string_view text);

/// kRoundedEpsilon for labels stored with at most one decimal, else kFineEpsilon.
double choose_epsilon(std::string_view label_text);

struct EvalRecord {
  std::string id;
  std::optional<double> predicted;
  bool executed_ok = false;
  double label = 0;
  std::string label_text;

  /// Throws ModelError when a prediction exists without a successful run.
  void validate() const;
};

/// |predicted - label| <= choose_epsilon(label_text), false without a prediction.
bool is_correct(const EvalRecord &record);

/// Fractions over a nonempty set; ConfigError when empty.
double solution_accuracy(const std::vector<EvalRecord> &records);
double execution_rate(const std::vector<EvalRecord> &records);

/// Record for one workflow trace: the consensus answer is the prediction and
/// the run counts as executed when any tag finished ok.
EvalRecord eval_record(const WorkflowTrace &trace, const DatasetEntry &label);

struct TagTally {
  std::size_t total = 0;
  std::size_t executed = 0;
  std::size_t correct = 0;
};

struct EvalReport {
  std::vector<EvalRecord> records;
  std::vector<bool> correct; // per record
  double accuracy = 0;
  double execution_rate = 0;
  std::map<LanguageTag, TagTally> per_tag; // final result of each tag's track
};

/// Scores traces against labels by instance id. ConfigError when there are
/// no traces or a trace has no label.
EvalReport evaluate_traces(const std::vector<WorkflowTrace> &traces,
                           const std::vector<DatasetEntry> &labels);

/// Human-readable summary of an evaluation.
std::string format_report(const EvalReport &report);

// ---------------------------------------------------------------------------
// Dataset audit

enum class AuditVerdict { Confirmed, Mismatch, Unsupported };
std::string_view to_string(AuditVerdict verdict);

struct AuditFinding {
  std::string id;
  std::string stored_label;
  std::optional<double> solver_value;
  AuditVerdict verdict = AuditVerdict::Unsupported;
  double epsilon = 0;
  std::string reason;
};

struct AuditReport {
  std::vector<AuditFinding> findings; // input order
  std::size_t confirmed = 0;
  std::size_t mismatches = 0;
  std::size_t unsupported = 0;

  /// mismatches / (confirmed + mismatches); 0 when nothing was checkable.
  double error_rate() const;
};

/// Re-solves every entry's model and compares with its stored label under
/// choose_epsilon. Entries without a model, with model text that does not
/// parse, or that hit a solver limit are unsupported. A model without an
/// optimum contradicts its numeric label and is a mismatch.
AuditReport audit(const std::vector<DatasetEntry> &entries, const SolverConfig &cfg = {},
                  unsigned workers = 1);

nlohmann::json to_json(const AuditFinding &finding);
/// Counts, the error rate and one row per finding that is not confirmed.
std::string format_audit(const AuditReport &report);

} // namespace optisynth
