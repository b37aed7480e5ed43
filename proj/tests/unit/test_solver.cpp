#include <doctest.h>

#include <array>
#include <cmath>

#include "optisynth/error.hpp"
#include "optisynth/model_io.hpp"
#include "optisynth/solver.hpp"
#include "test_support.hpp"

using namespace optisynth;

namespace {

/// Brute-force vertex enumeration for two-variable LPs: intersect every pair
/// of boundary lines (constraints and finite bounds), keep feasible points.
double best_vertex_2d(const Problem &p) {
  struct Line { double a, b, c; }; // a*x + b*y = c
  std::vector<Line> lines;
  for (const Constraint &c : canonicalize(p).constraints) {
    Line l{0, 0, c.rhs};
    for (const Term &t : c.lhs.terms)
      (t.var == 0 ? l.a : l.b) = t.coef;
    lines.push_back(l);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    for (double bnd : {p.variables[j].lower, p.variables[j].upper})
      if (std::isfinite(bnd))
        lines.push_back(j == 0 ? Line{1, 0, bnd} : Line{0, 1, bnd});
  }
  double best = p.sense == Sense::Maximize ? -kInf : kInf;
  for (std::size_t i = 0; i < lines.size(); ++i)
    for (std::size_t k = i + 1; k < lines.size(); ++k) {
      const double det = lines[i].a * lines[k].b - lines[k].a * lines[i].b;
      if (std::fabs(det) < 1e-12)
        continue;
      const double x = (lines[i].c * lines[k].b - lines[k].c * lines[i].b) / det;
      const double y = (lines[i].a * lines[k].c - lines[k].a * lines[i].c) / det;
      const Evaluation ev = evaluate(p, Assignment{{x, y}});
      if (!ev.feasible)
        continue;
      best = p.sense == Sense::Maximize ? std::max(best, ev.objective)
                                        : std::min(best, ev.objective);
    }
  return best;
}

Problem parse(const char *text) { return from_text(text); }

const char *kLp = "var x 0 inf cont\nvar y 0 inf cont\n"
                  "max 3*x + 2*y\n"
                  "st 1*x + 1*y <= 4\nst 1*x <= 2\n";

const char *kMilp = "var x 0 inf int\nvar y 0 inf int\n"
                    "max 5*x + 4*y\n"
                    "st 6*x + 4*y <= 24\nst 1*x + 2*y <= 6\n";

const char *kKnapsack = "var i1 0 1 int\nvar i2 0 1 int\nvar i3 0 1 int\nvar i4 0 1 int\n"
                        "max 10*i1 + 40*i2 + 30*i3 + 50*i4\n"
                        "st cap: 5*i1 + 4*i2 + 6*i3 + 3*i4 <= 10\n";

} // namespace

TEST_CASE("solve_lp finds the vertex optimum") {
  const Problem p = parse(kLp);
  const double oracle = best_vertex_2d(p);
  CHECK(oracle == doctest::Approx(10.0));
  const SolveOutcome out = solve_lp(p);
  REQUIRE(out.optimal());
  CHECK(*out.value == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(out.point->values[0] == doctest::Approx(2.0));
  CHECK(out.point->values[1] == doctest::Approx(2.0));
}

TEST_CASE("solve_lp classifies empty and unbounded problems") {
  CHECK(solve_lp(parse("var x -inf inf cont\nmin 1*x\nst 1*x >= 1\nst 1*x <= 0\n")).status ==
        SolveStatus::Infeasible);
  CHECK(solve_lp(parse("var x 0 inf cont\nmax 1*x\n")).status == SolveStatus::Unbounded);
}

TEST_CASE("solve_lp handles free, negative and fixed variables") {
  const SolveOutcome a = solve_lp(parse("var x -inf inf cont\nmin 1*x\nst 1*x >= -3\n"));
  REQUIRE(a.optimal());
  CHECK(*a.value == doctest::Approx(-3.0));
  const SolveOutcome b = solve_lp(parse("var x -inf 4 cont\nvar y 2 2 cont\nmax 1*x + 1*y\n"
                                        "st 1*x - 1*y = 1\n"));
  REQUIRE(b.optimal());
  CHECK(*b.value == doctest::Approx(5.0));
  const SolveOutcome c = solve_lp(parse("var x -5 -1 cont\nmin 2*x + 3\n"));
  REQUIRE(c.optimal());
  CHECK(*c.value == doctest::Approx(-7.0));
}

TEST_CASE("solve_lp terminates on a classic cycling example") {
  const Problem p = parse("var x4 0 inf cont\nvar x5 0 inf cont\nvar x6 0 inf cont\nvar x7 0 inf cont\n"
                          "min -0.75*x4 + 150*x5 - 0.02*x6 + 6*x7\n"
                          "st 0.25*x4 - 60*x5 - 0.04*x6 + 9*x7 <= 0\n"
                          "st 0.5*x4 - 90*x5 - 0.02*x6 + 3*x7 <= 0\n"
                          "st 1*x6 <= 1\n");
  const SolveOutcome out = solve_lp(p);
  REQUIRE(out.optimal());
  CHECK(*out.value == doctest::Approx(-0.05).epsilon(1e-9)); // reference LP solve
}

TEST_CASE("solve_lp handles redundant equality rows") {
  const SolveOutcome out = solve_lp(parse("var x 0 inf cont\nvar y 0 inf cont\nmin 1*x + 2*y\n"
                                          "st 1*x + 1*y = 3\nst 2*x + 2*y = 6\n"));
  REQUIRE(out.optimal());
  CHECK(*out.value == doctest::Approx(3.0));
}

TEST_CASE("solve_milp matches the integer grid optimum") {
  const Problem p = parse(kMilp);
  Problem bounded = p;
  for (auto &v : bounded.variables)
    v.upper = 6; // both rows imply x,y <= 6
  const SolveOutcome grid = brute_force(bounded);
  REQUIRE(grid.optimal());
  CHECK(*grid.value == 20.0);
  const SolveOutcome out = solve_milp(p);
  REQUIRE(out.optimal());
  CHECK(*out.value == 20.0);
  CHECK(out.point->values == std::vector<double>{4.0, 0.0});
}

TEST_CASE("solve_milp on a continuous problem equals solve_lp") {
  const Problem p = parse(kLp);
  CHECK(solve_milp(p) == solve_lp(p));
}

TEST_CASE("solve_milp rounds a fractional bound down") {
  const SolveOutcome out = solve_milp(parse("var x 0 10 int\nmax 1*x\nst 1*x <= 7.3\n"));
  REQUIRE(out.optimal());
  CHECK(*out.value == 7.0);
}

TEST_CASE("solve_milp separates unbounded from infeasible relaxations") {
  CHECK(solve_milp(parse("var x 0 inf int\nvar y 0 inf int\nmax 1*x\nst 1*x - 2*y = 0\n")).status ==
        SolveStatus::Unbounded);
  CHECK(solve_milp(parse("var x 0 inf int\nvar y 0 inf int\nmax 1*x\nst 2*x - 2*y = 1\n")).status ==
        SolveStatus::Infeasible);
}

TEST_CASE("brute_force enumerates subsets") {
  const SolveOutcome out = brute_force(parse(kKnapsack));
  REQUIRE(out.optimal());
  CHECK(*out.value == 90.0);
  CHECK(out.point->values == std::vector<double>{0, 1, 0, 1});
  CHECK(brute_force(parse("var x 0 3 int\nmax 2*x\n")).value == 6.0);
  CHECK(brute_force(parse("var x 0.2 0.8 int\nmax 2*x\n")).status == SolveStatus::Infeasible);
  CHECK(brute_force(parse("var x 0 3 int\nmax 2*x\nst 1*x >= 4\n")).status ==
        SolveStatus::Infeasible);
  CHECK_THROWS_AS(brute_force(parse("var x 0 3 cont\nmax 1*x\n")), UnsupportedError);
  CHECK_THROWS_AS(brute_force(parse("var x 0 inf int\nmax 1*x\n")), UnsupportedError);
}

TEST_CASE("verify_value applies an absolute tolerance") {
  const Problem p = parse(kMilp);
  CHECK(verify_value(p, 20.00005, 1e-4));
  CHECK_FALSE(verify_value(p, 19.5, 1e-4));
  CHECK(verify_value(p, 20.04, 1e-1));
  CHECK_FALSE(verify_value(parse("var x 0 inf cont\nmax 1*x\n"), 0.0, 1e-4));
  CHECK_THROWS_AS(verify_value(p, 20.0, 0.0), ConfigError);
}

TEST_CASE("solver limits surface as errors") {
  SolverConfig cfg;
  cfg.node_limit = 1;
  CHECK_THROWS_AS(solve_milp(parse(kMilp), cfg), SolverLimitError);
  cfg = {};
  cfg.lp_tolerance = 0;
  CHECK_THROWS_AS(solve_lp(parse(kLp), cfg), ConfigError);
}

TEST_CASE("property: branch and bound agrees with enumeration") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const Problem p = test::random_integer_problem(rng);
    const SolveOutcome grid = brute_force(p);
    const SolveOutcome bb = solve_milp(p);
    INFO(to_text(p));
    REQUIRE(bb.status == grid.status);
    if (!grid.optimal())
      continue;
    CHECK(std::fabs(*bb.value - *grid.value) <= 1e-6);
    CHECK(evaluate(p, *bb.point).feasible);
    CHECK(std::fabs(evaluate(p, *bb.point).objective - *bb.value) <=
          1e-9 * std::max(1.0, std::fabs(*bb.value)));
    const SolveOutcome lp = solve_lp(p);
    REQUIRE(lp.optimal());
    if (p.sense == Sense::Maximize)
      CHECK(*bb.value <= *lp.value + 1e-9);
    else
      CHECK(*bb.value >= *lp.value - 1e-9);
  }
}

TEST_CASE("property: solves are deterministic including statistics") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const Problem p = test::random_integer_problem(rng);
    CHECK(solve_milp(p) == solve_milp(p));
    CHECK(solve_lp(p) == solve_lp(p));
  }
}
