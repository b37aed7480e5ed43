#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "optisynth/classes.hpp"
#include "optisynth/cli.hpp"
#include "optisynth/codegen.hpp"
#include "optisynth/dataset.hpp"
#include "optisynth/eval.hpp"
#include "optisynth/model_io.hpp"
#include "optisynth/nltemplate.hpp"
#include "optisynth/parallel.hpp"
#include "optisynth/resources.hpp"
#include "optisynth/rng.hpp"
#include "optisynth/trajectory.hpp"

namespace optisynth {

namespace fs = std::filesystem;

namespace {

/// Options every subcommand accepts.
struct Shared {
  std::uint64_t seed = 0;
  std::string config;
  unsigned workers = 0;
  std::string out;
};

void add_shared(CLI::App &cmd, Shared &s, bool out_required, const std::string &out_help) {
  cmd.add_option("--seed", s.seed, "Root seed")->capture_default_str();
  cmd.add_option("--config", s.config, "File of key = value defaults for this command");
  cmd.add_option("--workers", s.workers, "Parallel workers, 0 for all cores")->capture_default_str();
  auto *o = cmd.add_option("--out", s.out, out_help);
  if (out_required)
    o->required();
}

/// Reads `key = value` lines ('#' starts a comment) into --key=value
/// arguments, skipping keys already present on the command line.
std::vector<std::string> config_args(const fs::path &path, const std::vector<std::string> &given) {
  std::istringstream in(read_file(path));
  std::vector<std::string> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos)
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(n, b + 1, "expected 'key = value' in " + path.string());
    auto trim = [](std::string s) {
      const auto first = s.find_first_not_of(" \t\r");
      const auto last = s.find_last_not_of(" \t\r");
      return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
    };
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0)
      key.erase(0, 2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty() || key == "config")
      throw ParseError(n, b + 1, "invalid key in " + path.string());
    const std::string flag = "--" + key;
    const bool present = std::any_of(given.begin(), given.end(), [&](const std::string &a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!present)
      out.push_back(flag + "=" + value);
  }
  return out;
}

/// Splices config-file defaults into the argument list after the subcommand.
std::vector<std::string> with_config(std::vector<std::string> args) {
  for (std::size_t k = 0; k < args.size(); ++k) {
    std::string file;
    if (args[k] == "--config" && k + 1 < args.size())
      file = args[k + 1];
    else if (args[k].rfind("--config=", 0) == 0)
      file = args[k].substr(9);
    if (file.empty())
      continue;
    if (!fs::is_regular_file(file))
      throw CLI::ValidationError("--config", "file does not exist: " + file);
    const auto extra = config_args(file, args);
    args.insert(args.begin() + 1, extra.begin(), extra.end());
    break;
  }
  return args;
}

std::string pad_id(std::size_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", k);
  return buf;
}

void write_lines(const fs::path &path, const std::vector<std::string> &lines) {
  std::string text;
  for (const auto &l : lines)
    text += l + "\n";
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  write_file(path, text);
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  Shared shared;
  std::size_t linear = 100;
  std::size_t per_class = 20;
  std::vector<std::string> counts;
  double table_fraction = 0.3;
  SamplerConfig sampler;
};

int cmd_generate(const GenerateArgs &a, std::ostream &out) {
  std::map<ProblemClass, std::size_t> count;
  for (ProblemClass c : all_classes())
    count[c] = c == ProblemClass::Linear ? a.linear : a.per_class;
  for (const auto &spec : a.counts) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--count expects class=N, got '" + spec + "'");
    const std::string n = spec.substr(eq + 1);
    if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("--count expects a nonnegative integer, got '" + n + "'");
    count[parse_class(spec.substr(0, eq))] = std::stoul(n);
  }
  if (!(a.table_fraction >= 0 && a.table_fraction <= 1))
    throw ConfigError("--table-fraction must lie in [0, 1]");
  a.sampler.validate();
  GenerationOptions opts;
  opts.sampler = a.sampler;

  struct Job {
    ProblemClass cls;
    std::size_t k;
    std::uint64_t seed;
    std::string id;
  };
  std::vector<Job> jobs;
  for (ProblemClass c : all_classes())
    for (std::size_t k = 0; k < count[c]; ++k) {
      const std::uint64_t index = static_cast<std::uint64_t>(c) * 1'000'000'000ull + k;
      jobs.push_back({c, k, derive_seed(a.shared.seed, index),
                      std::string(to_string(c)) + "-" + pad_id(k)});
    }

  const fs::path root(a.shared.out);
  fs::create_directories(root / "instances");
  std::vector<DatasetEntry> entries(jobs.size());
  std::vector<std::string> manifest(jobs.size());
  parallel_for(jobs.size(), a.shared.workers, [&](std::size_t i) {
    const Job &job = jobs[i];
    const ClassInstance inst = generate_class_instance(job.cls, job.seed, opts);
    Rng pick(derive_seed(job.seed, 0x7ab1e));
    const std::string variant = pick.bernoulli(a.table_fraction) ? "table" : "prose";
    const SymbolicDescription desc = describe_instance(inst, variant);
    const std::string rel = "instances/" + job.id + ".milp";
    write_problem(root / rel, inst.problem);

    DatasetEntry &e = entries[i];
    e.id = job.id;
    e.description = render_description(desc, inst.params, job.seed, format_rules_for(inst));
    e.problem = to_text(inst.problem);
    e.label = inst.value;
    e.label_text = nlohmann::json(inst.value).dump();
    e.extra["class"] = std::string(to_string(job.cls));
    e.extra["seed"] = job.seed;
    e.extra["variant"] = variant;
    e.extra["domain"] = inst.domain;

    nlohmann::ordered_json m;
    m["id"] = job.id;
    m["class"] = std::string(to_string(job.cls));
    m["path"] = rel;
    m["label"] = inst.value;
    m["seed"] = job.seed;
    manifest[i] = m.dump();
  });
  write_dataset(root / "dataset.jsonl", entries);
  write_lines(root / "manifest.jsonl", manifest);
  out << "generated " << jobs.size() << " instances in " << root.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  Shared shared;
  std::string path;
  int time_limit_s = 30;
};

int cmd_solve(const SolveArgs &a, std::ostream &out) {
  const Problem p = read_problem(a.path);
  SolverConfig cfg;
  cfg.time_limit = std::chrono::seconds(a.time_limit_s);
  const SolveOutcome o = solve_milp(p, cfg);
  if (!o.optimal()) {
    out << (o.status == SolveStatus::Infeasible ? "Infeasible" : "Unbounded") << "\n";
    return kExitFailure;
  }
  out << "Optimal value: " << format_number(*o.value) << "\n";
  for (std::size_t j = 0; j < p.num_vars(); ++j)
    out << p.variables[j].name << " = " << format_number(o.point->values[j]) << "\n";
  out << "nodes " << o.stats.nodes << "\n";
  if (!a.shared.out.empty())
    write_lines(a.shared.out, {"Optimal value: " + format_number(*o.value)});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// run-agent

struct AgentArgs {
  Shared shared;
  std::string dataset;
  std::string backend = "replay";
  std::string transcript;
  std::string record;
  std::string endpoint;
  std::string model;
  std::string credential_env = "OPTISYNTH_API_KEY";
  std::string executor = "oracle";
  std::string runner;
  int max_debug = 6;
  int verifier_rounds = 1;
  int timeout_s = 60;
  std::vector<std::string> tags;
};

std::vector<std::string> split_words(const std::string &s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;)
    out.push_back(w);
  return out;
}

int cmd_run_agent(const AgentArgs &a, std::ostream &out) {
  const std::vector<DatasetEntry> entries = read_dataset(a.dataset);

  AgentOptions opts;
  opts.max_debug_rounds = a.max_debug;
  opts.verifier_rounds = a.verifier_rounds;
  opts.timeout = std::chrono::seconds(a.timeout_s);
  if (!a.tags.empty()) {
    opts.tags.clear();
    for (const auto &t : a.tags)
      opts.tags.push_back(parse_tag(t));
  }
  const bool recording = !a.record.empty();
  if (recording)
    opts.parallel_tags = false;
  opts.validate();

  std::unique_ptr<ChatBackend> backend;
  if (a.backend == "reference") {
    auto teacher = std::make_unique<ReferenceTeacher>();
    for (const auto &e : entries)
      if (e.problem)
        teacher->add(e.description, from_text(*e.problem));
    backend = std::move(teacher);
  } else if (a.backend == "replay") {
    if (a.transcript.empty())
      throw ConfigError("the replay backend needs --transcript");
    backend = make_backend({"replay", "", "", "", a.transcript});
  } else if (a.backend == "live") {
    backend = make_backend({"live", a.endpoint, a.model, a.credential_env, ""});
  } else {
    throw ConfigError("unknown backend '" + a.backend + "'");
  }

  std::unique_ptr<SubprocessExecutor> runner;
  if (a.executor == "subprocess") {
    const auto argv = split_words(a.runner);
    if (argv.empty())
      throw ConfigError("the subprocess executor needs --runner");
    runner = std::make_unique<SubprocessExecutor>(argv);
  } else if (a.executor != "oracle") {
    throw ConfigError("unknown executor '" + a.executor + "'");
  }

  std::vector<WorkflowTrace> traces(entries.size());
  std::vector<std::vector<TranscriptRecord>> records(entries.size());
  parallel_for(entries.size(), a.shared.workers, [&](std::size_t i) {
    const DatasetEntry &e = entries[i];
    std::unique_ptr<OracleExecutor> oracle;
    ExecutorSet set;
    if (runner) {
      set = same_executor(*runner);
    } else if (e.problem) {
      oracle = std::make_unique<OracleExecutor>(from_text(*e.problem));
      set = same_executor(*oracle);
    }
    RecordingBackend rec(*backend);
    ChatBackend &chat = recording ? static_cast<ChatBackend &>(rec) : *backend;
    if (set.empty()) {
      traces[i].instance_id = e.id;
      traces[i].description = e.description;
      traces[i].error = "no model for the oracle executor";
    } else {
      traces[i] = run_pipeline(chat, set, e.description, opts, e.id);
    }
    if (recording)
      records[i] = rec.records();
  });

  std::vector<std::string> lines;
  std::size_t answered = 0, failed = 0;
  for (const auto &t : traces) {
    lines.push_back(to_json(t).dump());
    answered += t.answer ? 1 : 0;
    failed += t.error.empty() ? 0 : 1;
  }
  write_lines(a.shared.out, lines);
  if (recording) {
    std::vector<TranscriptRecord> all;
    for (auto &r : records)
      all.insert(all.end(), r.begin(), r.end());
    if (fs::path(a.record).has_parent_path())
      fs::create_directories(fs::path(a.record).parent_path());
    write_transcript(a.record, all);
  }
  out << "instances " << traces.size() << ", answered " << answered << ", stage failures " << failed
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate, audit, export-sft

std::vector<WorkflowTrace> read_traces(const fs::path &path) {
  std::istringstream in(read_file(path));
  std::vector<WorkflowTrace> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    try {
      out.push_back(trace_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(n, 1, std::string("trace: ") + e.what());
    } catch (const ParseError &e) {
      throw ParseError(n, 1, e.what());
    }
  }
  return out;
}

struct EvalArgs {
  Shared shared;
  std::string traces;
  std::string labels;
};

int cmd_evaluate(const EvalArgs &a, std::ostream &out) {
  const auto traces = read_traces(a.traces);
  if (traces.empty())
    throw Error("no traces in " + a.traces);
  const EvalReport rep = evaluate_traces(traces, read_dataset(a.labels));
  const std::string text = format_report(rep);
  out << text;
  if (!a.shared.out.empty()) {
    nlohmann::ordered_json j;
    j["instances"] = rep.records.size();
    j["solution_accuracy"] = rep.accuracy;
    j["execution_rate"] = rep.execution_rate;
    nlohmann::ordered_json tags = nlohmann::ordered_json::object();
    for (const auto &[tag, t] : rep.per_tag)
      tags[std::string(to_string(tag))] = {{"total", t.total}, {"executed", t.executed}, {"correct", t.correct}};
    j["per_tag"] = tags;
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < rep.records.size(); ++k)
      per.push_back({{"id", rep.records[k].id},
                     {"correct", static_cast<bool>(rep.correct[k])},
                     {"executed", rep.records[k].executed_ok}});
    j["records"] = per;
    write_lines(a.shared.out, {j.dump(2)});
  }
  return kExitOk;
}

struct AuditArgs {
  Shared shared;
  std::string dataset;
};

int cmd_audit(const AuditArgs &a, std::ostream &out) {
  const AuditReport rep = audit(read_dataset(a.dataset), {}, a.shared.workers);
  out << format_audit(rep);
  if (!a.shared.out.empty()) {
    std::vector<std::string> lines;
    for (const auto &f : rep.findings)
      lines.push_back(to_json(f).dump());
    write_lines(a.shared.out, lines);
  }
  return kExitOk;
}

struct ExportArgs {
  Shared shared;
  std::string traces;
  std::string labels;
};

int cmd_export_sft(const ExportArgs &a, std::ostream &out) {
  std::map<std::string, DatasetEntry> labels;
  for (auto &e : read_dataset(a.labels))
    labels[e.id] = std::move(e);
  std::vector<Trajectory> kept;
  std::size_t traces = 0;
  for (const auto &t : read_traces(a.traces)) {
    ++traces;
    const auto it = labels.find(t.instance_id);
    if (it == labels.end())
      throw ConfigError("no label for instance '" + t.instance_id + "'");
    if (auto traj = assemble(t, it->second.label, choose_epsilon(it->second.label_text)))
      kept.push_back(std::move(*traj));
  }
  if (fs::path(a.shared.out).has_parent_path())
    fs::create_directories(fs::path(a.shared.out).parent_path());
  const std::size_t n = export_sft(kept, a.shared.out);
  out << "trajectories " << kept.size() << " of " << traces << ", records " << n << "\n";
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string> &raw_args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Verifiable synthetic MILP data, agent runs and evaluation", "optisynth"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  GenerateArgs gen;
  auto *g = app.add_subcommand("generate", "Sample, solve and describe instances");
  add_shared(*g, gen.shared, true, "Output directory");
  g->add_option("--linear", gen.linear, "Linear instances")->capture_default_str();
  g->add_option("--per-class", gen.per_class, "Instances per structured class")->capture_default_str();
  g->add_option("--count", gen.counts, "Override one class count, as class=N");
  g->add_option("--table-fraction", gen.table_fraction, "Share of table-style descriptions")
      ->capture_default_str();
  auto &smp = gen.sampler;
  g->add_option("--n-min", smp.n_min, "Fewest variables per linear instance")->capture_default_str();
  g->add_option("--n-max", smp.n_max, "Most variables per linear instance")->capture_default_str();
  g->add_option("--m-min", smp.m_min, "Fewest constraints per linear instance")->capture_default_str();
  g->add_option("--m-max", smp.m_max, "Most constraints per linear instance")->capture_default_str();
  g->add_option("--keep-probability", smp.keep_probability, "Chance a coefficient slot is nonzero")
      ->capture_default_str();
  g->add_option("--bound-probability", smp.bound_probability, "Chance of an explicit bound per side")
      ->capture_default_str();
  g->add_option("--integral-probability", smp.integral_probability, "Chance a variable is integral")
      ->capture_default_str();
  g->add_option("--retry-budget", smp.retry_budget, "Coefficient resamples per structure")
      ->capture_default_str();
  g->add_option("--domains", smp.domains, "Domain list replacing the bundled one")->delimiter(',');

  SolveArgs solve;
  auto *s = app.add_subcommand("solve", "Solve one model file");
  add_shared(*s, solve.shared, false, "Also write the value line here");
  s->add_option("path", solve.path, "Model file")->required()->check(CLI::ExistingFile);
  s->add_option("--time-limit", solve.time_limit_s, "Seconds")->capture_default_str();

  AgentArgs agent;
  auto *r = app.add_subcommand("run-agent", "Run the agent workflow over a dataset");
  add_shared(*r, agent.shared, true, "Trace file (JSON lines)");
  r->add_option("--dataset", agent.dataset)->required()->check(CLI::ExistingFile);
  r->add_option("--backend", agent.backend, "replay, live or reference")->capture_default_str();
  r->add_option("--transcript", agent.transcript, "Transcript for the replay backend")
      ->check(CLI::ExistingFile);
  r->add_option("--record", agent.record, "Write every exchange to this transcript");
  r->add_option("--endpoint", agent.endpoint, "Chat completions URL for the live backend");
  r->add_option("--model", agent.model, "Model name for the live backend");
  r->add_option("--credential-env", agent.credential_env,
                "Name of the environment variable holding the API key")
      ->capture_default_str();
  r->add_option("--executor", agent.executor, "oracle or subprocess")->capture_default_str();
  r->add_option("--runner", agent.runner, "Runner command for the subprocess executor");
  r->add_option("--max-debug", agent.max_debug, "Debugging rounds per tag")->capture_default_str();
  r->add_option("--verifier-rounds", agent.verifier_rounds)->capture_default_str();
  r->add_option("--timeout", agent.timeout_s, "Seconds per execution")->capture_default_str();
  r->add_option("--tags", agent.tags, "Modeling tags to run")->delimiter(',');

  EvalArgs ev;
  auto *e = app.add_subcommand("evaluate", "Solution accuracy and execution rate");
  add_shared(*e, ev.shared, false, "Also write a JSON report here");
  e->add_option("--traces", ev.traces)->required()->check(CLI::ExistingFile);
  e->add_option("--labels", ev.labels, "Dataset or manifest with labels")
      ->required()
      ->check(CLI::ExistingFile);

  AuditArgs au;
  auto *d = app.add_subcommand("audit", "Re-solve labelled models and report label errors");
  add_shared(*d, au.shared, false, "Also write findings (JSON lines) here");
  d->add_option("--dataset", au.dataset)->required()->check(CLI::ExistingFile);

  ExportArgs ex;
  auto *x = app.add_subcommand("export-sft", "Export verified trajectories for fine-tuning");
  add_shared(*x, ex.shared, true, "SFT file (JSON lines)");
  x->add_option("--traces", ex.traces)->required()->check(CLI::ExistingFile);
  x->add_option("--labels", ex.labels)->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> args = with_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError &pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error &ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitUsage;
  }

  try {
    if (g->parsed())
      return cmd_generate(gen, out);
    if (s->parsed())
      return cmd_solve(solve, out);
    if (r->parsed())
      return cmd_run_agent(agent, out);
    if (e->parsed())
      return cmd_evaluate(ev, out);
    if (d->parsed())
      return cmd_audit(au, out);
    if (x->parsed())
      return cmd_export_sft(ex, out);
  } catch (const ConfigError &ce) {
    err << "error: " << ce.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &fe) {
    err << "error: " << fe.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

} // namespace optisynth
