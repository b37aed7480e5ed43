#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "optisynth/eval.hpp"
#include "optisynth/model_io.hpp"
#include "optisynth/parallel.hpp"

namespace optisynth {

int label_decimals(std::string_view text) {
  const auto bad = [&] { return ParseError(0, 0, "label '" + std::string(text) + "' is not a number"); };
  double ignored = 0;
  if (text.empty() || !parse_number(text, ignored) || !std::isfinite(ignored))
    throw bad();
  std::size_t i = 0;
  if (text[i] == '+' || text[i] == '-')
    ++i;
  long frac = 0;
  bool seen_point = false;
  for (; i < text.size() && text[i] != 'e' && text[i] != 'E'; ++i) {
    if (text[i] == '.') {
      if (seen_point)
        throw bad();
      seen_point = true;
    } else if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      throw bad();
    } else if (seen_point) {
      ++frac;
    }
  }
  long exponent = 0;
  if (i < text.size()) {
    const std::string exp(text.substr(i + 1));
    if (exp.empty())
      throw bad();
    std::size_t used = 0;
    exponent = std::stol(exp, &used);
    if (used != exp.size())
      throw bad();
  }
  return static_cast<int>(std::max(0L, frac - exponent));
}

double choose_epsilon(std::string_view label_text) {
  return label_decimals(label_text) <= 1 ? kRoundedEpsilon : kFineEpsilon;
}

void EvalRecord::validate() const {
  if (predicted && !executed_ok)
    throw ModelError("record '" + id + "' has a prediction without a successful run");
}

bool is_correct(const EvalRecord &r) {
  if (!r.predicted)
    return false;
  return std::abs(*r.predicted - r.label) <= choose_epsilon(r.label_text);
}

namespace {

void require_records(const std::vector<EvalRecord> &records) {
  if (records.empty())
    throw ConfigError("no records to score");
}

} // namespace

double solution_accuracy(const std::vector<EvalRecord> &records) {
  require_records(records);
  std::size_t ok = 0;
  for (const auto &r : records)
    ok += is_correct(r) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

double execution_rate(const std::vector<EvalRecord> &records) {
  require_records(records);
  std::size_t ok = 0;
  for (const auto &r : records)
    ok += r.executed_ok ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

EvalRecord eval_record(const WorkflowTrace &trace, const DatasetEntry &label) {
  EvalRecord r;
  r.id = trace.instance_id;
  r.predicted = trace.answer;
  for (const auto &t : trace.tags)
    if (const ExecutorResult *res = t.final_result(); res && res->is_ok())
      r.executed_ok = true;
  r.label = label.label;
  r.label_text = label.label_text;
  r.validate();
  return r;
}

EvalReport evaluate_traces(const std::vector<WorkflowTrace> &traces,
                           const std::vector<DatasetEntry> &labels) {
  if (traces.empty())
    throw ConfigError("no traces to evaluate");
  std::map<std::string, const DatasetEntry *> by_id;
  for (const auto &l : labels)
    by_id[l.id] = &l;
  EvalReport rep;
  for (const auto &t : traces) {
    const auto it = by_id.find(t.instance_id);
    if (it == by_id.end())
      throw ConfigError("no label for instance '" + t.instance_id + "'");
    EvalRecord r = eval_record(t, *it->second);
    rep.correct.push_back(is_correct(r));
    for (const auto &tag : t.tags) {
      TagTally &tally = rep.per_tag[tag.tag];
      ++tally.total;
      const ExecutorResult *res = tag.final_result();
      if (res && res->is_ok()) {
        ++tally.executed;
        EvalRecord single = r;
        single.predicted = res->value;
        tally.correct += is_correct(single) ? 1 : 0;
      }
    }
    rep.records.push_back(std::move(r));
  }
  rep.accuracy = solution_accuracy(rep.records);
  rep.execution_rate = execution_rate(rep.records);
  return rep;
}

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width)
    s.append(width - s.size(), ' ');
  return s;
}

} // namespace

std::string format_report(const EvalReport &rep) {
  std::size_t correct = 0, executed = 0;
  for (std::size_t k = 0; k < rep.records.size(); ++k) {
    correct += rep.correct[k] ? 1 : 0;
    executed += rep.records[k].executed_ok ? 1 : 0;
  }
  const std::size_t n = rep.records.size();
  std::ostringstream os;
  os << "instances        " << n << "\n"
     << "solution accuracy " << percent(rep.accuracy) << " (" << correct << "/" << n << ")\n"
     << "execution rate    " << percent(rep.execution_rate) << " (" << executed << "/" << n << ")\n";
  if (!rep.per_tag.empty()) {
    os << "\n" << pad("tag", 12) << pad("executed", 12) << "correct\n";
    for (const auto &[tag, t] : rep.per_tag)
      os << pad(std::string(to_string(tag)), 12)
         << pad(std::to_string(t.executed) + "/" + std::to_string(t.total), 12) << t.correct << "/"
         << t.total << "\n";
  }
  os << "\n";
  for (std::size_t k = 0; k < n; ++k) {
    const auto &r = rep.records[k];
    os << pad(r.id, 24) << (rep.correct[k] ? "correct   " : "incorrect ") << "label " << r.label_text
       << "  predicted ";
    if (r.predicted) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.10g", *r.predicted);
      os << buf;
    } else {
      os << "none";
    }
    os << "\n";
  }
  return os.str();
}

std::string_view to_string(AuditVerdict v) {
  switch (v) {
  case AuditVerdict::Confirmed:
    return "confirmed";
  case AuditVerdict::Mismatch:
    return "mismatch";
  case AuditVerdict::Unsupported:
    return "unsupported";
  }
  return "?";
}

double AuditReport::error_rate() const {
  const std::size_t checked = confirmed + mismatches;
  return checked == 0 ? 0.0 : static_cast<double>(mismatches) / static_cast<double>(checked);
}

namespace {

AuditFinding audit_one(const DatasetEntry &e, const SolverConfig &cfg) {
  AuditFinding f;
  f.id = e.id;
  f.stored_label = e.label_text;
  f.epsilon = choose_epsilon(e.label_text);
  if (!e.problem) {
    f.reason = "no machine-readable model";
    return f;
  }
  Problem p;
  try {
    p = from_text(*e.problem);
  } catch (const Error &ex) {
    f.reason = std::string("model not representable: ") + ex.what();
    return f;
  }
  try {
    const SolveOutcome out = solve_milp(p, cfg);
    if (!out.optimal()) {
      f.verdict = AuditVerdict::Mismatch;
      f.reason = "model is " + std::string(to_string(out.status));
      return f;
    }
    f.solver_value = out.value;
  } catch (const SolverLimitError &ex) {
    f.reason = std::string("solver limit: ") + ex.what();
    return f;
  }
  const double diff = std::abs(*f.solver_value - e.label);
  f.verdict = diff <= f.epsilon ? AuditVerdict::Confirmed : AuditVerdict::Mismatch;
  if (f.verdict == AuditVerdict::Mismatch)
    f.reason = "stored label differs from the optimum";
  return f;
}

} // namespace

AuditReport audit(const std::vector<DatasetEntry> &entries, const SolverConfig &cfg, unsigned workers) {
  cfg.validate();
  AuditReport rep;
  rep.findings.resize(entries.size());
  parallel_for(entries.size(), workers, [&](std::size_t i) { rep.findings[i] = audit_one(entries[i], cfg); });
  for (const auto &f : rep.findings) {
    switch (f.verdict) {
    case AuditVerdict::Confirmed:
      ++rep.confirmed;
      break;
    case AuditVerdict::Mismatch:
      ++rep.mismatches;
      break;
    case AuditVerdict::Unsupported:
      ++rep.unsupported;
      break;
    }
  }
  return rep;
}

nlohmann::json to_json(const AuditFinding &f) {
  nlohmann::ordered_json j;
  j["id"] = f.id;
  j["stored_label"] = f.stored_label;
  j["solver_value"] = f.solver_value ? nlohmann::ordered_json(*f.solver_value) : nullptr;
  j["verdict"] = std::string(to_string(f.verdict));
  j["epsilon"] = f.epsilon;
  j["reason"] = f.reason;
  return nlohmann::json::parse(j.dump());
}

std::string format_audit(const AuditReport &rep) {
  std::ostringstream os;
  os << "instances   " << rep.findings.size() << "\n"
     << "confirmed   " << rep.confirmed << "\n"
     << "mismatch    " << rep.mismatches << "\n"
     << "unsupported " << rep.unsupported << "\n"
     << "error rate  " << percent(rep.error_rate()) << " (" << rep.mismatches << "/"
     << rep.confirmed + rep.mismatches << ")\n";
  bool header = false;
  for (const auto &f : rep.findings) {
    if (f.verdict == AuditVerdict::Confirmed)
      continue;
    if (!header) {
      os << "\n" << pad("id", 24) << pad("verdict", 13) << pad("stored", 14) << pad("solver", 14)
         << "reason\n";
      header = true;
    }
    char buf[40] = "-";
    if (f.solver_value)
      std::snprintf(buf, sizeof buf, "%.10g", *f.solver_value);
    os << pad(f.id, 24) << pad(std::string(to_string(f.verdict)), 13) << pad(f.stored_label, 14)
       << pad(buf, 14) << f.reason << "\n";
  }
  return os.str();
}

} // namespace optisynth
