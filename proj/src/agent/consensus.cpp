#include <cmath>

#include "optisynth/agent.hpp"

namespace optisynth {

std::string_view to_string(VoteReason reason) {
  switch (reason) {
  case VoteReason::Majority:
    return "majority";
  case VoteReason::TieBroken:
    return "tie_broken";
  case VoteReason::NoValidResults:
    return "no_valid_results";
  }
  return "?";
}

VoteReason parse_vote_reason(std::string_view text) {
  for (VoteReason r : {VoteReason::Majority, VoteReason::TieBroken, VoteReason::NoValidResults})
    if (text == to_string(r))
      return r;
  throw ParseError(0, 0, "unknown vote reason '" + std::string(text) + "'");
}

ConsensusReport majority_vote(const std::map<LanguageTag, ExecutorResult> &results,
                              double epsilon) {
  if (!(epsilon > 0))
    throw ConfigError("vote epsilon must be positive");
  ConsensusReport report;
  for (LanguageTag tag : all_tags()) {
    const auto it = results.find(tag);
    if (it == results.end() || !it->second.is_ok() || !it->second.value)
      continue;
    const double v = *it->second.value;
    bool placed = false;
    for (auto &c : report.clusters) {
      if (std::abs(v - c.representative) <= epsilon) {
        c.members.push_back(tag);
        placed = true;
        break;
      }
    }
    if (!placed)
      report.clusters.push_back({v, {tag}});
  }
  if (report.clusters.empty())
    return report;
  std::size_t best = 0, ties = 1;
  for (std::size_t k = 1; k < report.clusters.size(); ++k) {
    const std::size_t size = report.clusters[k].members.size();
    if (size > report.clusters[best].members.size()) {
      best = k;
      ties = 1;
    } else if (size == report.clusters[best].members.size()) {
      ++ties;
    }
  }
  report.winner = report.clusters[best].representative;
  report.reason = ties > 1 ? VoteReason::TieBroken : VoteReason::Majority;
  return report;
}

} // namespace optisynth
