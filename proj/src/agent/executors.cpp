#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "optisynth/agent.hpp"

namespace optisynth {

const std::array<LanguageTag, 5> &all_tags() {
  static const std::array<LanguageTag, 5> tags{LanguageTag::Pyomo, LanguageTag::Gurobipy,
                                               LanguageTag::Docplex, LanguageTag::Cvxpy,
                                               LanguageTag::Pyscipopt};
  return tags;
}

std::string_view to_string(LanguageTag tag) {
  switch (tag) {
  case LanguageTag::Pyomo:
    return "pyomo";
  case LanguageTag::Gurobipy:
    return "gurobipy";
  case LanguageTag::Docplex:
    return "docplex";
  case LanguageTag::Cvxpy:
    return "cvxpy";
  case LanguageTag::Pyscipopt:
    return "pyscipopt";
  }
  return "?";
}

std::string_view solver_name(LanguageTag tag) {
  switch (tag) {
  case LanguageTag::Pyomo:
    return "Pyomo";
  case LanguageTag::Gurobipy:
    return "Gurobipy";
  case LanguageTag::Docplex:
    return "DOcplex";
  case LanguageTag::Cvxpy:
    return "CVXPY";
  case LanguageTag::Pyscipopt:
    return "PySCIPOpt";
  }
  return "?";
}

LanguageTag parse_tag(std::string_view text) {
  for (LanguageTag t : all_tags())
    if (text == to_string(t) || text == solver_name(t))
      return t;
  throw ConfigError("unknown language tag '" + std::string(text) + "'");
}

std::string_view to_string(ExecStatus status) {
  switch (status) {
  case ExecStatus::Ok:
    return "ok";
  case ExecStatus::RuntimeError:
    return "runtime_error";
  case ExecStatus::InfeasibleModel:
    return "infeasible_model";
  case ExecStatus::Timeout:
    return "timeout";
  }
  return "?";
}

ExecStatus parse_exec_status(std::string_view text) {
  for (ExecStatus s : {ExecStatus::Ok, ExecStatus::RuntimeError, ExecStatus::InfeasibleModel,
                       ExecStatus::Timeout})
    if (text == to_string(s))
      return s;
  throw ParseError(0, 0, "unknown executor status '" + std::string(text) + "'");
}

ExecutorResult ExecutorResult::ok(double value, std::string message) {
  return {ExecStatus::Ok, value, std::move(message)};
}

ExecutorResult ExecutorResult::failure(ExecStatus status, std::string message) {
  return {status, std::nullopt, std::move(message)};
}

void ExecutorResult::validate() const {
  if (is_ok() && (!value || !std::isfinite(*value)))
    throw ModelError("ok executor result without a finite value");
  if (!is_ok() && value)
    throw ModelError("failed executor result carries a value");
}

void ScriptedExecutor::script(LanguageTag tag, std::vector<ExecutorResult> results) {
  std::lock_guard lock(mu_);
  script_[tag] = std::move(results);
  cursor_[tag] = 0;
}

ExecutorResult ScriptedExecutor::run(LanguageTag tag, const std::string &code,
                                     std::chrono::seconds) {
  std::lock_guard lock(mu_);
  codes_[tag].push_back(code);
  const auto it = script_.find(tag);
  if (it == script_.end() || it->second.empty())
    return ExecutorResult::failure(ExecStatus::RuntimeError, "no scripted result");
  std::size_t &k = cursor_[tag];
  const ExecutorResult r = it->second[std::min(k, it->second.size() - 1)];
  ++k;
  return r;
}

std::size_t ScriptedExecutor::runs(LanguageTag tag) const {
  std::lock_guard lock(mu_);
  const auto it = codes_.find(tag);
  return it == codes_.end() ? 0 : it->second.size();
}

const std::vector<std::string> &ScriptedExecutor::codes(LanguageTag tag) const {
  static const std::vector<std::string> none;
  std::lock_guard lock(mu_);
  const auto it = codes_.find(tag);
  return it == codes_.end() ? none : it->second;
}

OracleExecutor::OracleExecutor(Problem problem, SolverConfig cfg)
    : problem_(std::move(problem)), cfg_(cfg) {}

ExecutorResult OracleExecutor::run(LanguageTag, const std::string &, std::chrono::seconds) {
  std::lock_guard lock(mu_);
  if (cached_)
    return *cached_;
  ExecutorResult r;
  try {
    const SolveOutcome out = solve_milp(problem_, cfg_);
    switch (out.status) {
    case SolveStatus::Optimal:
      r = ExecutorResult::ok(*out.value, "solved by the internal engine");
      break;
    case SolveStatus::Infeasible:
      r = ExecutorResult::failure(ExecStatus::InfeasibleModel, "model is infeasible");
      break;
    case SolveStatus::Unbounded:
      r = ExecutorResult::failure(ExecStatus::RuntimeError, "model is unbounded");
      break;
    }
  } catch (const SolverLimitError &e) {
    r = ExecutorResult::failure(ExecStatus::Timeout, e.what());
  }
  cached_ = r;
  return r;
}

ExecutorResult ShiftedExecutor::run(LanguageTag tag, const std::string &code,
                                    std::chrono::seconds timeout) {
  ExecutorResult r = inner_.run(tag, code, timeout);
  if (r.is_ok())
    *r.value += shift_;
  return r;
}

ExecutorSet same_executor(Executor &executor) {
  ExecutorSet set;
  for (LanguageTag t : all_tags())
    set[t] = &executor;
  return set;
}

// ---------------------------------------------------------------------------
// Wire protocol

std::string encode_run_request(LanguageTag tag, const std::string &code,
                               std::chrono::seconds timeout) {
  nlohmann::ordered_json j;
  j["tag"] = std::string(to_string(tag));
  j["code"] = code;
  j["timeout_s"] = timeout.count();
  return j.dump() + "\n";
}

ExecutorResult decode_run_response(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    return ExecutorResult::failure(ExecStatus::RuntimeError,
                                   std::string("malformed runner response: ") + e.what());
  }
  try {
    ExecutorResult r;
    r.status = parse_exec_status(j.at("status").get<std::string>());
    if (j.contains("value") && !j["value"].is_null())
      r.value = j["value"].get<double>();
    r.message = j.value("message", "");
    if (!r.is_ok())
      r.value.reset();
    r.validate();
    return r;
  } catch (const std::exception &e) {
    return ExecutorResult::failure(ExecStatus::RuntimeError,
                                   std::string("malformed runner response: ") + e.what());
  }
}

SubprocessExecutor::SubprocessExecutor(std::vector<std::string> argv, std::chrono::seconds grace)
    : argv_(std::move(argv)), grace_(grace) {
  if (argv_.empty())
    throw ConfigError("subprocess executor needs a command");
}

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fd, O_CLOEXEC) != 0)
      throw Error(std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    for (int f : fd)
      if (f >= 0)
        ::close(f);
  }
  void close_end(int k) {
    if (fd[k] >= 0)
      ::close(fd[k]);
    fd[k] = -1;
  }
};

} // namespace

ExecutorResult SubprocessExecutor::run(LanguageTag tag, const std::string &code,
                                       std::chrono::seconds timeout) {
  Pipe in, out;
  const pid_t pid = ::fork();
  if (pid < 0)
    return ExecutorResult::failure(ExecStatus::RuntimeError,
                                   std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in.fd[0], STDIN_FILENO);
    ::dup2(out.fd[1], STDOUT_FILENO);
    std::vector<char *> args;
    for (const auto &a : argv_)
      args.push_back(const_cast<char *>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  in.close_end(0);
  out.close_end(1);

  const std::string request = encode_run_request(tag, code, timeout);
  std::signal(SIGPIPE, SIG_IGN);
  for (std::size_t sent = 0; sent < request.size();) {
    const ssize_t w = ::write(in.fd[1], request.data() + sent, request.size() - sent);
    if (w <= 0)
      break; // the reply (or its absence) reports the failure
    sent += static_cast<std::size_t>(w);
  }
  in.close_end(1);

  const auto deadline = std::chrono::steady_clock::now() + timeout + grace_;
  std::string buffer;
  bool timed_out = false;
  while (buffer.find('\n') == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd p{out.fd[0], POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR)
      continue;
    if (ready == 0)
      continue;
    char chunk[4096];
    const ssize_t r = ::read(out.fd[0], chunk, sizeof chunk);
    if (r <= 0)
      break;
    buffer.append(chunk, static_cast<std::size_t>(r));
  }
  if (timed_out)
    ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);

  if (timed_out)
    return ExecutorResult::failure(ExecStatus::Timeout,
                                   "runner exceeded " + std::to_string(timeout.count()) + " s");
  const auto nl = buffer.find('\n');
  if (nl == std::string::npos) {
    std::string why = "runner exited without a response";
    if (WIFEXITED(status))
      why += " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
    return ExecutorResult::failure(ExecStatus::RuntimeError, why);
  }
  return decode_run_response(std::string_view(buffer).substr(0, nl));
}

} // namespace optisynth
