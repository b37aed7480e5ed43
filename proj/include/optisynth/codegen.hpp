#pragma once

#include <map>
#include <mutex>
#include <string>

#include "optisynth/agent.hpp"
#include "optisynth/model.hpp"
#include "optisynth/teacher.hpp"

namespace optisynth {

/// Plain-language listing of variables, objective and constraints.
std::string components_text(const Problem &problem);

/// Canonical model text (to_text).
std::string formulation_text(const Problem &problem);

/// Self-contained Python script for the tag's modeling library. It prints
/// "Optimal value: <v>" on success.
std::string generate_code(const Problem &problem, LanguageTag tag);

/// Deterministic teacher that answers every workflow prompt from a registry
/// of known problems keyed by their description text. Replies carry a short
/// reasoning paragraph before the fenced answer. Verifiers echo the previous
/// answer and debugging prompts return freshly generated code.
class ReferenceTeacher : public ChatBackend {
public:
  void add(const std::string &description, Problem problem);
  ChatReply complete(const ChatExchange &exchange) override;
  std::size_t calls() const;

private:
  std::string answer(const ChatExchange &exchange) const;

  std::map<std::string, Problem> problems_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

} // namespace optisynth
