#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "optisynth/agent.hpp"

namespace optisynth {

inline constexpr int kSftSchemaVersion = 1;

enum class PairKind { DA, FA, CA, Debug };
std::string_view to_string(PairKind kind); // "DA", "FA", "CA", "DEBUG"
PairKind parse_pair_kind(std::string_view text);

struct NamedPart {
  std::string name;
  std::string text;
  friend bool operator==(const NamedPart &, const NamedPart &) = default;
};

/// One instruction and output pair. Part names are fixed per kind:
///   DA: problem_description, decomposition_prompt -> reasoning_step_1, extracted_components
///   FA: problem_description, extracted_components, formulation_prompt
///       -> reasoning_step_2, math_formulation
///   CA: problem_description, math_formulation, coding_prompt -> reasoning_step_3, code
///   DEBUG: problem_description, code_w_error, error_message, debugging_prompt
///       -> reasoning, code
struct TrajectoryPair {
  PairKind kind = PairKind::DA;
  std::optional<LanguageTag> tag; // CA and DEBUG only
  std::vector<NamedPart> instruction;
  std::vector<NamedPart> output;
  std::optional<double> value; // executor value behind CA and DEBUG pairs

  /// Throws ModelError when part names or the tag do not fit the kind.
  void validate() const;
  friend bool operator==(const TrajectoryPair &, const TrajectoryPair &) = default;
};

struct Trajectory {
  std::string instance_id;
  TrajectoryPair pair_da;
  TrajectoryPair pair_fa;
  std::vector<TrajectoryPair> pair_ca; // matching tags in tag order
  double ground_truth = 0;
  std::set<LanguageTag> matched;
  std::vector<TrajectoryPair> debug; // DEBUG pairs
};

/// Trajectory when at least one tag's final ok value lies within epsilon of
/// the ground truth, else nullopt. Only matching tags contribute CA pairs. A
/// matching tag that needed debugging contributes the debugging step that
/// produced its final code.
std::optional<Trajectory> assemble(const WorkflowTrace &trace, double ground_truth, double epsilon);

struct SftRecord {
  int schema_version = kSftSchemaVersion;
  std::string instance_id;
  TrajectoryPair pair;
  friend bool operator==(const SftRecord &, const SftRecord &) = default;
};

/// Records in (instance id, kind, tag) order.
std::vector<SftRecord> sft_records(const std::vector<Trajectory> &trajectories);
std::string sft_line(const SftRecord &record);
/// Throws ParseError, reporting `line_no` when nonzero.
SftRecord parse_sft_line(std::string_view line, std::size_t line_no = 0);

/// Writes one JSON line per pair and returns the record count.
std::size_t export_sft(const std::vector<Trajectory> &trajectories, const std::filesystem::path &path);
std::vector<SftRecord> read_sft(const std::filesystem::path &path);

} // namespace optisynth
