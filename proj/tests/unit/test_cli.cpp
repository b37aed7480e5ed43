#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "optisynth/cli.hpp"
#include "optisynth/dataset.hpp"
#include "optisynth/model_io.hpp"
#include "optisynth/resources.hpp"
#include "optisynth/solver.hpp"
#include "optisynth/teacher.hpp"
#include "optisynth/trajectory.hpp"

using namespace optisynth;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Fresh scratch directory removed on scope exit.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string &name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string &leaf) const { return (dir / leaf).string(); }
};

fs::path minisuite() { return data_dir() / "minisuite"; }

std::vector<std::string> lines_of(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    out.push_back(l);
  return out;
}

} // namespace

TEST_CASE("solve prints the optimum of a small model") {
  Scratch tmp("optisynth_cli_solve");
  write_file(tmp / "m.milp", "var x 0 inf int\nvar y 0 inf int\nmax 5*x + 4*y\n"
                             "st 6*x + 4*y <= 24\nst 1*x + 2*y <= 6\n");
  // Independent check over the bounded grid.
  double best = -1;
  for (int x = 0; x <= 4; ++x)
    for (int y = 0; y <= 6; ++y)
      if (6 * x + 4 * y <= 24 && x + 2 * y <= 6)
        best = std::max(best, 5.0 * x + 4.0 * y);
  REQUIRE(best == 20);
  const auto r = cli({"solve", tmp / "m.milp"});
  CHECK(r.code == kExitOk);
  CHECK(lines_of(r.out).at(0) == "Optimal value: 20");
  CHECK(lines_of(r.out).at(1) == "x = 4");

  write_file(tmp / "inf.milp", "var x 0 3 int\nmax 1*x\nst 1*x >= 5\n");
  const auto inf = cli({"solve", tmp / "inf.milp"});
  CHECK(inf.code == kExitFailure);
  CHECK(inf.out == "Infeasible\n");

  CHECK(cli({"solve", tmp / "missing.milp"}).code == kExitUsage);
  CHECK(cli({"solve"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  write_file(tmp / "bad.milp", "var x 0 3 int\nmax x*x\n");
  CHECK(cli({"solve", tmp / "bad.milp"}).code == kExitFailure);
}

TEST_CASE("generate is deterministic and re-verifies") {
  Scratch tmp("optisynth_cli_generate");
  const auto a = cli({"generate", "--seed", "0", "--linear", "6", "--per-class", "1", "--out", tmp / "a"});
  const auto b = cli({"generate", "--seed", "0", "--linear", "6", "--per-class", "1", "--workers", "3",
                      "--out", tmp / "b"});
  REQUIRE(a.code == kExitOk);
  REQUIRE(b.code == kExitOk);
  CHECK(read_file(tmp / "a/manifest.jsonl") == read_file(tmp / "b/manifest.jsonl"));
  CHECK(read_file(tmp / "a/dataset.jsonl") == read_file(tmp / "b/dataset.jsonl"));

  const auto entries = read_dataset(tmp / "a/dataset.jsonl");
  REQUIRE(entries.size() == 15);
  for (const auto &line : lines_of(read_file(tmp / "a/manifest.jsonl"))) {
    const auto m = nlohmann::json::parse(line);
    const Problem p = read_problem(tmp.dir / "a" / m["path"].get<std::string>());
    const auto o = solve_milp(p);
    REQUIRE(o.optimal());
    const double label = m["label"].get<double>();
    CHECK(std::abs(*o.value - label) <= 1e-9 * std::max(1.0, std::abs(label)));
  }
  const auto other = cli({"generate", "--seed", "1", "--linear", "6", "--per-class", "1", "--out", tmp / "c"});
  CHECK(read_file(tmp / "c/dataset.jsonl") != read_file(tmp / "a/dataset.jsonl"));

  const auto empty = cli({"generate", "--linear", "0", "--per-class", "0", "--out", tmp / "e"});
  CHECK(empty.code == kExitOk);
  CHECK(read_file(tmp / "e/manifest.jsonl").empty());

  CHECK(cli({"generate", "--count", "sudoku=3", "--out", tmp / "x"}).code == kExitUsage);
  CHECK(cli({"generate", "--table-fraction", "2", "--out", tmp / "x"}).code == kExitUsage);
  CHECK(cli({"generate", "--linear", "1"}).code == kExitUsage); // --out missing
}

TEST_CASE("config files fill in options below command-line flags") {
  Scratch tmp("optisynth_cli_config");
  write_file(tmp / "run.conf", "# defaults\nlinear = 2\nper_class = 0\ncount = tsp=1\nseed=7\n");
  REQUIRE(cli({"generate", "--config", tmp / "run.conf", "--out", tmp / "a"}).code == kExitOk);
  CHECK(read_dataset(tmp / "a/dataset.jsonl").size() == 3);
  REQUIRE(cli({"generate", "--config", tmp / "run.conf", "--linear", "4", "--out", tmp / "b"}).code ==
          kExitOk);
  const auto b = read_dataset(tmp / "b/dataset.jsonl");
  CHECK(b.size() == 5);
  CHECK(b[0].extra["seed"] == read_dataset(tmp / "a/dataset.jsonl")[0].extra["seed"]);

  write_file(tmp / "bad.conf", "api_key = secret\n");
  CHECK(cli({"generate", "--config", tmp / "bad.conf", "--out", tmp / "c"}).code == kExitUsage);
  write_file(tmp / "bad2.conf", "linear\n");
  CHECK(cli({"generate", "--config", tmp / "bad2.conf", "--out", tmp / "c"}).code == kExitUsage);
  CHECK(cli({"generate", "--config", tmp / "none.conf", "--out", tmp / "c"}).code == kExitUsage);
}

TEST_CASE("generation config sets sampler ranges and domains") {
  Scratch tmp("optisynth_cli_sampler");
  write_file(tmp / "gen.conf", "linear = 5\nper_class = 1\nn_min = 3\nn_max = 3\nm_min = 2\n"
                               "m_max = 2\nintegral_probability = 1\nkeep_probability = 1\n"
                               "retry_budget = 40\ndomains = Cheese Making,Ferry Routing\n");
  REQUIRE(cli({"generate", "--config", tmp / "gen.conf", "--out", tmp / "a"}).code == kExitOk);
  const auto entries = read_dataset(tmp / "a/dataset.jsonl");
  REQUIRE(entries.size() == 14);
  for (const auto &e : entries) {
    INFO(e.id);
    const std::string domain = e.extra["domain"];
    CHECK((domain == "Cheese Making" || domain == "Ferry Routing"));
    if (e.extra["class"] != "linear")
      continue;
    const Problem p = from_text(*e.problem);
    CHECK(p.variables.size() == 3);
    CHECK(p.constraints.size() == 2);
    for (const auto &v : p.variables)
      CHECK(v.integral);
  }
  write_file(tmp / "bad.conf", "n_min = 5\nn_max = 2\n");
  CHECK(cli({"generate", "--config", tmp / "bad.conf", "--out", tmp / "b"}).code == kExitUsage);
  CHECK(cli({"generate", "--keep-probability", "1.5", "--out", tmp / "b"}).code == kExitUsage);
}

TEST_CASE("bundled mini-suite regenerates byte for byte") {
  Scratch tmp("optisynth_cli_minisuite");
  REQUIRE(cli({"generate", "--seed", "2024", "--linear", "1", "--per-class", "1", "--table-fraction", "0.5",
               "--workers", "1", "--out", tmp / "m"})
              .code == kExitOk);
  CHECK(read_file(tmp / "m/dataset.jsonl") == read_file(minisuite() / "dataset.jsonl"));
  CHECK(read_file(tmp / "m/manifest.jsonl") == read_file(minisuite() / "manifest.jsonl"));
  REQUIRE(cli({"run-agent", "--dataset", tmp / "m/dataset.jsonl", "--backend", "reference", "--record",
               tmp / "m/transcript.jsonl", "--workers", "1", "--out", tmp / "m/traces.jsonl"})
              .code == kExitOk);
  CHECK(read_file(tmp / "m/transcript.jsonl") == read_file(minisuite() / "transcript.jsonl"));
}

TEST_CASE("agent runs, evaluation and export over the mini-suite") {
  Scratch tmp("optisynth_cli_agent");
  const std::string dataset = (minisuite() / "dataset.jsonl").string();
  const std::string transcript = (minisuite() / "transcript.jsonl").string();

  const auto run = cli({"run-agent", "--dataset", dataset, "--transcript", transcript, "--workers", "4",
                        "--out", tmp / "traces.jsonl"});
  REQUIRE(run.code == kExitOk);
  CHECK(run.out.find("answered 10") != std::string::npos);

  const auto ev = cli({"evaluate", "--traces", tmp / "traces.jsonl", "--labels", dataset, "--out",
                       tmp / "report.json"});
  CHECK(ev.code == kExitOk);
  CHECK(ev.out.find("solution accuracy 100.00% (10/10)") != std::string::npos);
  const auto rep = nlohmann::json::parse(read_file(tmp / "report.json"));
  CHECK(rep["solution_accuracy"] == 1.0);
  CHECK(rep["per_tag"]["cvxpy"]["correct"] == 10);

  const auto ex = cli({"export-sft", "--traces", tmp / "traces.jsonl", "--labels", dataset, "--out",
                       tmp / "sft.jsonl"});
  CHECK(ex.code == kExitOk);
  CHECK(read_sft(tmp / "sft.jsonl").size() == 10 * (2 + 5));
  const std::string first = read_file(tmp / "sft.jsonl");
  cli({"export-sft", "--traces", tmp / "traces.jsonl", "--labels", dataset, "--out", tmp / "sft.jsonl"});
  CHECK(read_file(tmp / "sft.jsonl") == first);

  write_file(tmp / "empty.jsonl", "");
  CHECK(cli({"evaluate", "--traces", tmp / "empty.jsonl", "--labels", dataset}).code == kExitFailure);
}

TEST_CASE("a replay mismatch fails one instance and the run continues") {
  Scratch tmp("optisynth_cli_replay");
  const std::string dataset = (minisuite() / "dataset.jsonl").string();
  auto records = read_transcript(minisuite() / "transcript.jsonl");
  // Drop the first instance's opening exchange.
  records.erase(records.begin());
  write_transcript(tmp / "t.jsonl", records);
  const auto run = cli({"run-agent", "--dataset", dataset, "--transcript", tmp / "t.jsonl", "--out",
                        tmp / "traces.jsonl"});
  REQUIRE(run.code == kExitOk);
  CHECK(run.out.find("answered 9") != std::string::npos);
  const auto first = nlohmann::json::parse(lines_of(read_file(tmp / "traces.jsonl")).at(0));
  CHECK(first["error"].get<std::string>().find("decomposition") != std::string::npos);
  CHECK(cli({"run-agent", "--dataset", dataset, "--out", tmp / "x.jsonl"}).code == kExitUsage);
  CHECK(cli({"run-agent", "--dataset", dataset, "--backend", "psychic", "--out", tmp / "x.jsonl"}).code ==
        kExitUsage);
}

TEST_CASE("debug budget flag with the subprocess runner") {
  Scratch tmp("optisynth_cli_debug");
  const std::string stub =
      "python3 " + (fs::path(OPTISYNTH_SOURCE_DIR) / "tests" / "stubs" / "runner_stub.py").string();
  // The first line only, so the run stays short.
  write_file(tmp / "one.jsonl", lines_of(read_file(minisuite() / "dataset.jsonl")).at(1) + "\n");
  for (int budget : {0, 2}) {
    CAPTURE(budget);
    const auto run = cli({"run-agent", "--dataset", tmp / "one.jsonl", "--backend", "reference", "--executor",
                          "subprocess", "--runner", stub, "--max-debug", std::to_string(budget), "--tags",
                          "pyomo,cvxpy", "--out", tmp / "traces.jsonl"});
    REQUIRE(run.code == kExitOk);
    const auto trace = nlohmann::json::parse(lines_of(read_file(tmp / "traces.jsonl")).at(0));
    REQUIRE(trace["tags"].size() == 2);
    for (const auto &t : trace["tags"]) {
      CHECK(t["results"].size() == static_cast<std::size_t>(budget + 1));
      CHECK(t["debug_rounds"] == budget);
      CHECK(t["results"][0]["status"] == "runtime_error");
    }
  }
}

TEST_CASE("audit over a dataset with planted label errors") {
  Scratch tmp("optisynth_cli_audit");
  auto entries = read_dataset(minisuite() / "dataset.jsonl");
  for (std::size_t k : {1, 4, 7}) {
    entries[k].label += 5;
    entries[k].label_text = nlohmann::json(entries[k].label).dump();
  }
  write_dataset(tmp / "planted.jsonl", entries);
  const auto r = cli({"audit", "--dataset", tmp / "planted.jsonl", "--out", tmp / "findings.jsonl"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("mismatch    3") != std::string::npos);
  CHECK(r.out.find("30.00%") != std::string::npos);
  const auto findings = lines_of(read_file(tmp / "findings.jsonl"));
  REQUIRE(findings.size() == 10);
  CHECK(nlohmann::json::parse(findings[4])["verdict"] == "mismatch");
  CHECK(nlohmann::json::parse(findings[0])["verdict"] == "confirmed");
}
