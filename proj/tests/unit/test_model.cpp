#include <doctest.h>

#include <cstring>

#include "optisynth/error.hpp"
#include "optisynth/model.hpp"
#include "optisynth/model_io.hpp"
#include "test_support.hpp"

using namespace optisynth;

namespace {

Problem two_var_lp() {
  Problem p;
  p.sense = Sense::Maximize;
  p.variables = {{"x", 0.0, kInf, false}, {"y", 0.0, kInf, false}};
  p.objective = LinearExpr({{3.0, 0}, {2.0, 1}});
  p.constraints.push_back({"sum", LinearExpr({{1.0, 0}, {1.0, 1}}), Relation::LE, 4.0});
  p.constraints.push_back({"x≤2", LinearExpr({{1.0, 0}}), Relation::LE, 2.0});
  return p;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

/// Random problem with continuous and integral variables, messy term lists
/// and constants, for canonicalization and serialization properties.
Problem random_messy_problem(Rng &rng) {
  Problem p;
  p.sense = rng.bernoulli(0.5) ? Sense::Minimize : Sense::Maximize;
  const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 5));
  for (std::size_t j = 0; j < n; ++j) {
    DecisionVariable v;
    v.name = "v" + std::to_string(j);
    const int kind = static_cast<int>(rng.uniform_int(0, 3));
    v.lower = kind == 0 ? -kInf : rng.uniform(-5, 5);
    v.upper = kind == 1 ? kInf : v.lower == -kInf ? rng.uniform(0, 9) : v.lower + rng.uniform(0, 9);
    v.integral = rng.bernoulli(0.4);
    p.variables.push_back(v);
  }
  auto random_expr = [&] {
    LinearExpr e;
    const long long k = rng.uniform_int(0, 6);
    for (long long t = 0; t < k; ++t)
      e.terms.push_back({rng.bernoulli(0.15) ? 0.0 : rng.uniform(-10, 10), rng.index(n)});
    e.constant = rng.bernoulli(0.5) ? rng.uniform(-3, 3) : 0.0;
    return e;
  };
  p.objective = random_expr();
  const long long m = rng.uniform_int(0, 4);
  for (long long i = 0; i < m; ++i) {
    Constraint c;
    if (rng.bernoulli(0.5))
      c.label = "row" + std::to_string(i);
    c.lhs = random_expr();
    c.relation = static_cast<Relation>(rng.uniform_int(0, 2));
    c.rhs = rng.uniform(-20, 20);
    p.constraints.push_back(c);
  }
  p.class_tag = rng.bernoulli(0.5) ? "linear" : "";
  if (rng.bernoulli(0.5))
    p.metadata["domain"] = "energy and power systems";
  return p;
}

} // namespace

TEST_CASE("evaluate reports objective and feasibility at a vertex") {
  const Evaluation ev = evaluate(two_var_lp(), Assignment{{2.0, 2.0}});
  CHECK(ev.objective == 10.0);
  CHECK(ev.feasible);
  CHECK(ev.violations.empty());
}

TEST_CASE("evaluate lists the violated constraint with its magnitude") {
  const Evaluation ev = evaluate(two_var_lp(), Assignment{{3.0, 0.0}});
  CHECK(ev.objective == 9.0);
  CHECK_FALSE(ev.feasible);
  REQUIRE(ev.violations.size() == 1);
  CHECK(ev.violations[0].label == "x≤2");
  CHECK(ev.violations[0].magnitude == 1.0);
}

TEST_CASE("evaluate flags fractional values on integral variables") {
  Problem p;
  p.variables = {{"x", 0.0, 10.0, true}};
  const Evaluation ev = evaluate(p, Assignment{{1.5}});
  CHECK_FALSE(ev.feasible);
  REQUIRE(ev.violations.size() == 1);
  CHECK(ev.violations[0].label == "int:x");
  CHECK(ev.violations[0].magnitude == 0.5);
}

TEST_CASE("evaluate reports bound violations and rejects wrong dimensions") {
  Problem p;
  p.variables = {{"x", 1.0, 2.0, false}};
  const Evaluation ev = evaluate(p, Assignment{{0.25}});
  REQUIRE(ev.violations.size() == 1);
  CHECK(ev.violations[0].label == "bound:x");
  CHECK(ev.violations[0].magnitude == 0.75);
  CHECK_THROWS_AS(evaluate(p, Assignment{{1.0, 2.0}}), ModelError);
}

TEST_CASE("validate rejects malformed problems") {
  Problem p;
  CHECK_THROWS_AS(validate(p), ModelError);
  p.variables = {{"x", 0.0, 1.0, false}, {"x", 0.0, 1.0, false}};
  CHECK_THROWS_AS(validate(p), ModelError);
  p.variables = {{"x", 2.0, 1.0, false}};
  CHECK_THROWS_AS(validate(p), ModelError);
  p.variables = {{"x", 0.0, 1.0, false}};
  p.objective = LinearExpr({{1.0, 3}});
  CHECK_THROWS_AS(validate(p), ModelError);
}

TEST_CASE("canonicalize merges terms, drops zeros and folds constants") {
  Problem p;
  p.variables = {{"x", 0.0, kInf, false}, {"y", 0.0, kInf, false}};
  p.objective = LinearExpr({{2.0, 0}, {0.0, 1}, {3.0, 0}}, 7.0);
  p.constraints.push_back({"", LinearExpr({{1.0, 0}}, 1.0), Relation::LE, 4.0});
  const Problem c = canonicalize(p);
  CHECK(c.objective == LinearExpr({{5.0, 0}}, 7.0));
  CHECK(c.constraints[0].lhs == LinearExpr({{1.0, 0}}, 0.0));
  CHECK(c.constraints[0].rhs == 3.0);
  CHECK(is_canonical(c));
  CHECK(canonicalize(c) == c);
}

TEST_CASE("property: evaluate is bit-identical on the canonical form") {
  Rng rng(11);
  for (int trial = 0; trial < 400; ++trial) {
    const Problem p = random_messy_problem(rng);
    const Problem c = canonicalize(p);
    CHECK(canonicalize(c) == c);
    for (int k = 0; k < 5; ++k) {
      Assignment a;
      for (std::size_t j = 0; j < p.num_vars(); ++j)
        a.values.push_back(rng.bernoulli(0.3) ? std::round(rng.uniform(-6, 6)) : rng.uniform(-6, 6));
      const Evaluation e1 = evaluate(p, a);
      const Evaluation e2 = evaluate(c, a);
      CHECK(same_bits(e1.objective, e2.objective));
      CHECK(e1.feasible == e2.feasible);
      REQUIRE(e1.violations.size() == e2.violations.size());
      for (std::size_t v = 0; v < e1.violations.size(); ++v) {
        CHECK(e1.violations[v].label == e2.violations[v].label);
        CHECK(same_bits(e1.violations[v].magnitude, e2.violations[v].magnitude));
        CHECK(e1.violations[v].magnitude >= 0.0);
      }
      if (e1.feasible)
        CHECK(e1.violations.empty());
    }
  }
}

TEST_CASE("property: text serialization round-trips to the canonical form") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const Problem p = random_messy_problem(rng);
    const std::string text = to_text(p);
    const Problem back = from_text(text);
    CHECK(back == canonicalize(p));
    CHECK(to_text(back) == text);
  }
}

TEST_CASE("infinite bounds serialize as inf and -inf") {
  Problem p;
  p.variables = {{"free", -kInf, kInf, false}, {"neg", -kInf, 0.0, true}};
  p.objective = LinearExpr({{1.0, 0}});
  const std::string text = to_text(p);
  CHECK(text.find("var free -inf inf cont\n") != std::string::npos);
  CHECK(text.find("var neg -inf 0 int\n") != std::string::npos);
  CHECK(from_text(text) == canonicalize(p));
}

TEST_CASE("exact text layout of a small instance") {
  const std::string text = to_text(two_var_lp());
  CHECK(text == "var x 0 inf cont\n"
                "var y 0 inf cont\n"
                "max 3*x + 2*y\n"
                "st sum: 1*x + 1*y <= 4\n"
                "st x≤2: 1*x <= 2\n");
}

TEST_CASE("parse errors carry line and column") {
  const std::string bad = "var x 0 10 int\n"
                          "max 1*x\n"
                          "st 1*x =< 3\n";
  try {
    (void)from_text(bad);
    FAIL("expected a parse error");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 8);
  }
  CHECK_THROWS_AS(from_text("var x 0 1 bool\nmin 1*x\n"), ParseError);
  CHECK_THROWS_AS(from_text("var x 0 1 int\nmin 1*y\n"), ParseError);
  CHECK_THROWS_AS(from_text("var x 0 1 int\n"), ParseError);
  CHECK_THROWS_AS(from_text("var x 0 1 int\nmin 1*x +\n"), ParseError);
  CHECK_THROWS_AS(from_text("var x 0 1 int\nmin x^2\n"), ParseError);
}

TEST_CASE("parser accepts comments, blank lines, signs and constants") {
  const Problem p = from_text("# header\n\n"
                              "class knapsack\nmeta domain supply chain management\n"
                              "var a 0 5 int\nvar b -2 inf cont\n"
                              "min -2*a + -1*b - 3*a + 4\n"
                              "st lim: 1*a - 1*b + 2 >= 1\n");
  CHECK(p.class_tag == "knapsack");
  CHECK(p.metadata.at("domain") == "supply chain management");
  CHECK(p.objective == LinearExpr({{-5.0, 0}, {-1.0, 1}}, 4.0));
  CHECK(p.constraints[0].rhs == -1.0);
}
