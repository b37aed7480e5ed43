#include <doctest.h>

#include <filesystem>

#include "optisynth/classes.hpp"
#include "optisynth/codegen.hpp"
#include "optisynth/nltemplate.hpp"
#include "optisynth/resources.hpp"
#include "optisynth/trajectory.hpp"

using namespace optisynth;

namespace {

using R = ExecutorResult;

struct Run {
  ClassInstance inst;
  std::string text;
  WorkflowTrace trace;
};

/// Pipeline over a generated instance with the reference teacher and a
/// scripted executor; tags not scripted get the exact optimum.
Run scripted_run(ProblemClass cls, std::uint64_t seed,
                 const std::map<LanguageTag, std::vector<R>> &script = {}) {
  Run run{generate_class_instance(cls, seed), {}, {}};
  run.text = render_description(describe_instance(run.inst, "prose"), run.inst.params, seed,
                                format_rules_for(run.inst));
  ReferenceTeacher teacher;
  teacher.add(run.text, run.inst.problem);
  ScriptedExecutor exec;
  for (LanguageTag t : all_tags()) {
    const auto it = script.find(t);
    exec.script(t, it == script.end() ? std::vector<R>{R::ok(run.inst.value)} : it->second);
  }
  AgentOptions opts;
  opts.parallel_tags = false;
  run.trace = run_pipeline(teacher, same_executor(exec), run.text, opts,
                           std::string(to_string(cls)) + "-" + std::to_string(seed));
  return run;
}

std::string tmp_file(const std::string &name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("assemble keeps matching tags only") {
  const auto wrong = R::ok(-12345);
  const auto run = scripted_run(ProblemClass::Knapsack, 1, {{LanguageTag::Cvxpy, {wrong}}});
  const auto t = assemble(run.trace, run.inst.value, 1e-4);
  REQUIRE(t);
  CHECK(t->matched.size() == 4);
  CHECK(t->pair_ca.size() == 4);
  CHECK_FALSE(t->matched.count(LanguageTag::Cvxpy));
  CHECK(t->debug.empty());
  for (const auto &p : t->pair_ca) {
    p.validate();
    CHECK(std::abs(*p.value - run.inst.value) <= 1e-4);
  }
  t->pair_da.validate();
  t->pair_fa.validate();
  CHECK(t->pair_da.instruction[0].text == run.text);
  CHECK(t->pair_da.output[1].text == run.trace.components);
  CHECK(t->pair_fa.output[1].text == run.trace.formulation_text);
  CHECK_FALSE(t->pair_da.output[0].text.empty());
}

TEST_CASE("assemble returns nothing without a match") {
  std::map<LanguageTag, std::vector<R>> script;
  for (LanguageTag t : all_tags())
    script[t] = {R::failure(ExecStatus::RuntimeError, "boom")};
  const auto run = scripted_run(ProblemClass::BinPacking, 2, script);
  CHECK_FALSE(assemble(run.trace, run.inst.value, 1e-4));

  const auto off = scripted_run(ProblemClass::BinPacking, 2, {});
  CHECK_FALSE(assemble(off.trace, off.inst.value + 1, 1e-4));
  CHECK(assemble(off.trace, off.inst.value + 1, 1.5));

  WorkflowTrace failed = off.trace;
  failed.error = "decomposition: boom";
  CHECK_FALSE(assemble(failed, off.inst.value, 1e-4));
}

TEST_CASE("a repaired matching tag yields one debug sample") {
  const auto probe = scripted_run(ProblemClass::Tsp, 3);
  const double v = probe.inst.value;
  const auto run = scripted_run(ProblemClass::Tsp, 3,
                                {{LanguageTag::Gurobipy, {R::failure(ExecStatus::RuntimeError, "KeyError: 3"), R::ok(v)}},
                                 {LanguageTag::Docplex, {R::failure(ExecStatus::RuntimeError, "bad"), R::ok(v + 50)}}});
  const auto t = assemble(run.trace, v, 1e-4);
  REQUIRE(t);
  REQUIRE(t->debug.size() == 1);
  const auto &d = t->debug[0];
  d.validate();
  CHECK(d.tag == LanguageTag::Gurobipy);
  CHECK(d.instruction[2].text == "KeyError: 3");
  CHECK(d.instruction[1].text == run.trace.tags[1].code_versions[0]);
  CHECK(d.output[1].text == run.trace.tags[1].code_versions[1]);
  CHECK(t->pair_ca.size() == 4);
}

TEST_CASE("SFT export") {
  const auto run = scripted_run(ProblemClass::Transportation, 4,
                                {{LanguageTag::Pyomo, {R::ok(-1)}}, {LanguageTag::Docplex, {R::ok(-1)}}});
  const auto t = assemble(run.trace, run.inst.value, 1e-4);
  REQUIRE(t);
  REQUIRE(t->pair_ca.size() == 3);

  const std::string path = tmp_file("optisynth_sft.jsonl");
  CHECK(export_sft({*t}, path) == 5);
  const auto back = read_sft(path);
  REQUIRE(back.size() == 5);
  CHECK(back[0].pair == t->pair_da);
  CHECK(back[1].pair == t->pair_fa);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(back[2 + k].pair == t->pair_ca[k]);
  CHECK(back == sft_records({*t}));

  const std::string first = read_file(path);
  export_sft({*t}, path);
  CHECK(read_file(path) == first);

  SUBCASE("ordering is by instance, kind, tag") {
    Trajectory other = *t;
    other.instance_id = "a-first";
    const auto recs = sft_records({*t, other});
    CHECK(recs[0].instance_id == "a-first");
    CHECK(recs[5].instance_id == t->instance_id);
    std::reverse(other.pair_ca.begin(), other.pair_ca.end());
    CHECK(sft_records({other})[2].pair.tag == LanguageTag::Gurobipy);
  }
  SUBCASE("empty export") {
    CHECK(export_sft({}, path) == 0);
    CHECK(read_file(path).empty());
    CHECK(read_sft(path).empty());
  }
  SUBCASE("malformed records") {
    CHECK_THROWS_AS(parse_sft_line("{}"), ParseError);
    std::string line = sft_line(back[0]);
    line.replace(line.find("\"DA\""), 4, "\"CA\"");
    CHECK_THROWS_AS(parse_sft_line(line), ParseError);
    write_file(path, sft_line(back[0]) + "\nnot json\n");
    try {
      read_sft(path);
      FAIL("expected ParseError");
    } catch (const ParseError &e) {
      CHECK(e.line() == 2);
    }
  }
  std::filesystem::remove(path);
}
