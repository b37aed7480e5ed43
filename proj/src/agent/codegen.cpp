#include <cmath>
#include <set>
#include <sstream>

#include "optisynth/codegen.hpp"
#include "optisynth/model_io.hpp"

namespace optisynth {

namespace {

const std::set<std::string> &python_keywords() {
  static const std::set<std::string> words{
      "False", "None",   "True",    "and",   "as",       "assert", "async",  "await",
      "break", "class",  "continue", "def",  "del",      "elif",   "else",   "except",
      "finally", "for",  "from",    "global", "if",      "import", "in",     "is",
      "lambda", "nonlocal", "not",  "or",    "pass",     "raise",  "return", "try",
      "while", "with",   "yield",   "m",     "prob",     "cons",   "pyo",    "gp",
      "GRB",   "cp",     "Model"};
  return words;
}

std::vector<std::string> python_names(const Problem &p) {
  std::vector<std::string> names;
  std::set<std::string> used;
  for (const auto &v : p.variables) {
    std::string n = v.name;
    if (python_keywords().count(n))
      n += "_";
    while (used.count(n))
      n += "_";
    used.insert(n);
    names.push_back(n);
  }
  return names;
}

std::string expr_text(const LinearExpr &e, const std::vector<std::string> &names,
                      const std::string &prefix) {
  std::string out;
  for (const Term &t : e.terms) {
    if (t.coef == 0)
      continue;
    const double mag = std::abs(t.coef);
    if (out.empty())
      out += t.coef < 0 ? "-" : "";
    else
      out += t.coef < 0 ? " - " : " + ";
    if (mag != 1)
      out += format_number(mag) + "*";
    out += prefix + names[t.var];
  }
  if (e.constant != 0 || out.empty()) {
    if (out.empty())
      out = format_number(e.constant);
    else
      out += (e.constant < 0 ? " - " : " + ") + format_number(std::abs(e.constant));
  }
  return out;
}

std::string py_bound(double b) { return std::isfinite(b) ? format_number(b) : "None"; }

std::string_view py_op(Relation r) {
  switch (r) {
  case Relation::LE:
    return "<=";
  case Relation::GE:
    return ">=";
  case Relation::EQ:
    return "==";
  }
  return "==";
}

std::string constraint_name(const Problem &p, std::size_t k) {
  const std::string &l = p.constraints[k].label;
  return l.empty() ? "c" + std::to_string(k + 1) : l;
}

std::string bound_phrase(const DecisionVariable &v) {
  const bool lo = std::isfinite(v.lower), hi = std::isfinite(v.upper);
  if (lo && hi)
    return "between " + format_number(v.lower) + " and " + format_number(v.upper);
  if (lo)
    return "at least " + format_number(v.lower);
  if (hi)
    return "at most " + format_number(v.upper);
  return "free";
}

std::string pyomo_code(const Problem &p, const std::vector<std::string> &n) {
  std::ostringstream os;
  os << "import pyomo.environ as pyo\n\n"
     << "m = pyo.ConcreteModel()\n";
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    const auto &v = p.variables[j];
    os << "m." << n[j] << " = pyo.Var(domain=" << (v.integral ? "pyo.Integers" : "pyo.Reals")
       << ", bounds=(" << py_bound(v.lower) << ", " << py_bound(v.upper) << "))\n";
  }
  os << "m.objective = pyo.Objective(expr=" << expr_text(p.objective, n, "m.")
     << ", sense=" << (p.sense == Sense::Maximize ? "pyo.maximize" : "pyo.minimize") << ")\n";
  for (std::size_t k = 0; k < p.num_constraints(); ++k) {
    const auto &c = p.constraints[k];
    os << "m." << constraint_name(p, k) << " = pyo.Constraint(expr=" << expr_text(c.lhs, n, "m.")
       << " " << py_op(c.relation) << " " << format_number(c.rhs) << ")\n";
  }
  os << "\nresult = pyo.SolverFactory(\"cbc\").solve(m)\n"
     << "if result.solver.termination_condition != pyo.TerminationCondition.optimal:\n"
     << "    raise SystemExit(f\"no optimal solution: {result.solver.termination_condition}\")\n"
     << "print(f\"Optimal value: {pyo.value(m.objective)}\")\n";
  return os.str();
}

std::string gurobi_code(const Problem &p, const std::vector<std::string> &n) {
  std::ostringstream os;
  os << "import gurobipy as gp\n"
     << "from gurobipy import GRB\n\n"
     << "m = gp.Model()\n";
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    const auto &v = p.variables[j];
    os << n[j] << " = m.addVar(lb="
       << (std::isfinite(v.lower) ? format_number(v.lower) : "-GRB.INFINITY")
       << ", ub=" << (std::isfinite(v.upper) ? format_number(v.upper) : "GRB.INFINITY")
       << ", vtype=" << (v.integral ? "GRB.INTEGER" : "GRB.CONTINUOUS") << ", name=\""
       << p.variables[j].name << "\")\n";
  }
  os << "m.setObjective(" << expr_text(p.objective, n, "") << ", "
     << (p.sense == Sense::Maximize ? "GRB.MAXIMIZE" : "GRB.MINIMIZE") << ")\n";
  for (std::size_t k = 0; k < p.num_constraints(); ++k) {
    const auto &c = p.constraints[k];
    os << "m.addConstr(" << expr_text(c.lhs, n, "") << " " << py_op(c.relation) << " "
       << format_number(c.rhs) << ", name=\"" << constraint_name(p, k) << "\")\n";
  }
  os << "\nm.optimize()\n"
     << "if m.Status != GRB.OPTIMAL:\n"
     << "    raise SystemExit(f\"no optimal solution: status {m.Status}\")\n"
     << "print(f\"Optimal value: {m.ObjVal}\")\n";
  return os.str();
}

std::string docplex_code(const Problem &p, const std::vector<std::string> &n) {
  std::ostringstream os;
  os << "from docplex.mp.model import Model\n\n"
     << "m = Model()\n";
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    const auto &v = p.variables[j];
    os << n[j] << " = m." << (v.integral ? "integer_var" : "continuous_var") << "(lb="
       << (std::isfinite(v.lower) ? format_number(v.lower) : "-m.infinity")
       << ", ub=" << (std::isfinite(v.upper) ? format_number(v.upper) : "m.infinity") << ", name=\""
       << v.name << "\")\n";
  }
  os << "m." << (p.sense == Sense::Maximize ? "maximize" : "minimize") << "("
     << expr_text(p.objective, n, "") << ")\n";
  for (std::size_t k = 0; k < p.num_constraints(); ++k) {
    const auto &c = p.constraints[k];
    os << "m.add_constraint(" << expr_text(c.lhs, n, "") << " " << py_op(c.relation) << " "
       << format_number(c.rhs) << ", ctname=\"" << constraint_name(p, k) << "\")\n";
  }
  os << "\nsolution = m.solve()\n"
     << "if solution is None:\n"
     << "    raise SystemExit(f\"no optimal solution: {m.solve_details.status}\")\n"
     << "print(f\"Optimal value: {solution.objective_value}\")\n";
  return os.str();
}

std::string cvxpy_code(const Problem &p, const std::vector<std::string> &n) {
  std::ostringstream os;
  os << "import cvxpy as cp\n\n";
  for (std::size_t j = 0; j < p.num_vars(); ++j)
    os << n[j] << " = cp.Variable(" << (p.variables[j].integral ? "integer=True, " : "")
       << "name=\"" << p.variables[j].name << "\")\n";
  os << "cons = [\n";
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    const auto &v = p.variables[j];
    if (std::isfinite(v.lower))
      os << "    " << n[j] << " >= " << format_number(v.lower) << ",\n";
    if (std::isfinite(v.upper))
      os << "    " << n[j] << " <= " << format_number(v.upper) << ",\n";
  }
  for (const auto &c : p.constraints)
    os << "    " << expr_text(c.lhs, n, "") << " " << py_op(c.relation) << " "
       << format_number(c.rhs) << ",\n";
  os << "]\n"
     << "prob = cp.Problem(cp." << (p.sense == Sense::Maximize ? "Maximize" : "Minimize") << "("
     << expr_text(p.objective, n, "") << "), cons)\n"
     << "prob.solve()\n"
     << "if prob.status != cp.OPTIMAL:\n"
     << "    raise SystemExit(f\"no optimal solution: {prob.status}\")\n"
     << "print(f\"Optimal value: {prob.value}\")\n";
  return os.str();
}

std::string scip_code(const Problem &p, const std::vector<std::string> &n) {
  std::ostringstream os;
  os << "from pyscipopt import Model\n\n"
     << "m = Model()\n";
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    const auto &v = p.variables[j];
    os << n[j] << " = m.addVar(name=\"" << v.name << "\", vtype=\"" << (v.integral ? "I" : "C")
       << "\", lb=" << py_bound(v.lower) << ", ub=" << py_bound(v.upper) << ")\n";
  }
  os << "m.setObjective(" << expr_text(p.objective, n, "") << ", \""
     << (p.sense == Sense::Maximize ? "maximize" : "minimize") << "\")\n";
  for (std::size_t k = 0; k < p.num_constraints(); ++k) {
    const auto &c = p.constraints[k];
    os << "m.addCons(" << expr_text(c.lhs, n, "") << " " << py_op(c.relation) << " "
       << format_number(c.rhs) << ", name=\"" << constraint_name(p, k) << "\")\n";
  }
  os << "\nm.optimize()\n"
     << "if m.getStatus() != \"optimal\":\n"
     << "    raise SystemExit(f\"no optimal solution: {m.getStatus()}\")\n"
     << "print(f\"Optimal value: {m.getObjVal()}\")\n";
  return os.str();
}

const Problem *lookup(const std::map<std::string, Problem> &problems, const Bindings &b) {
  const auto d = b.find("description");
  if (d == b.end())
    return nullptr;
  const auto it = problems.find(d->second);
  return it == problems.end() ? nullptr : &it->second;
}

std::string fenced(const std::string &reasoning, const std::string &body) {
  std::string out = reasoning + "\n\n```\n" + body;
  if (!body.empty() && body.back() != '\n')
    out += '\n';
  return out + "```\n";
}

std::string get(const Bindings &b, const std::string &key) {
  const auto it = b.find(key);
  if (it == b.end())
    throw ConfigError("reference teacher: missing binding '" + key + "'");
  return it->second;
}

} // namespace

std::string components_text(const Problem &p) {
  validate(p);
  const std::vector<std::string> n = python_names(p);
  std::ostringstream os;
  os << "Decision variables:\n";
  for (const auto &v : p.variables)
    os << "- " << v.name << ": " << (v.integral ? "integer" : "continuous") << ", "
       << bound_phrase(v) << "\n";
  os << "Objective: " << (p.sense == Sense::Maximize ? "maximize " : "minimize ")
     << expr_text(p.objective, n, "") << "\n";
  os << "Constraints:\n";
  for (std::size_t k = 0; k < p.num_constraints(); ++k) {
    const auto &c = p.constraints[k];
    os << "- " << constraint_name(p, k) << ": " << expr_text(c.lhs, n, "") << " "
       << py_op(c.relation) << " " << format_number(c.rhs) << "\n";
  }
  return os.str();
}

std::string formulation_text(const Problem &problem) { return to_text(problem); }

std::string generate_code(const Problem &p, LanguageTag tag) {
  validate(p);
  const std::vector<std::string> n = python_names(p);
  switch (tag) {
  case LanguageTag::Pyomo:
    return pyomo_code(p, n);
  case LanguageTag::Gurobipy:
    return gurobi_code(p, n);
  case LanguageTag::Docplex:
    return docplex_code(p, n);
  case LanguageTag::Cvxpy:
    return cvxpy_code(p, n);
  case LanguageTag::Pyscipopt:
    return scip_code(p, n);
  }
  throw UnsupportedError("unknown language tag");
}

void ReferenceTeacher::add(const std::string &description, Problem problem) {
  validate(problem);
  std::lock_guard lock(mu_);
  problems_[description] = std::move(problem);
}

std::size_t ReferenceTeacher::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

ChatReply ReferenceTeacher::complete(const ChatExchange &exchange) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
  }
  return {answer(exchange), 1};
}

std::string ReferenceTeacher::answer(const ChatExchange &ex) const {
  std::string id = ex.prompt_id;
  if (const auto slash = id.find('/'); slash != std::string::npos)
    id = id.substr(0, slash);
  const Problem *p = nullptr;
  {
    std::lock_guard lock(mu_);
    p = lookup(problems_, ex.bindings);
  }
  if (!p)
    throw ConfigError("reference teacher: unknown description for prompt '" + ex.prompt_id + "'");

  const std::size_t nv = p->num_vars(), nc = p->num_constraints();
  const std::string counts = std::to_string(nv) + " decision variables and " + std::to_string(nc) +
                             (nc == 1 ? " constraint" : " constraints");

  if (id == "decomposition")
    return fenced("The description fixes " + counts + ". Each quantity the planner controls " +
                      "becomes a variable and each stated limit becomes a constraint.",
                  components_text(*p));
  if (id == "decomposition_verifier")
    return fenced("Checked every variable, the objective and all constraints against the text. "
                  "Nothing is missing.",
                  get(ex.bindings, "previous_components"));
  if (id == "formulation")
    return fenced("Writing the components as a linear model with " + counts + ".",
                  formulation_text(*p));
  if (id == "formulation_verifier")
    return fenced("Coefficients, senses and bounds agree with the components.",
                  get(ex.bindings, "previous_formulation"));
  if (id == "programmer" || id == "code_debugging" || id == "infeasibility_debugging") {
    const LanguageTag tag = parse_tag(get(ex.bindings, "solver"));
    const std::string lead = id == "programmer"
                                 ? "Translating the formulation into " +
                                       std::string(solver_name(tag)) + " one statement per row."
                                 : "Rebuilding the model directly from the formulation.";
    return fenced(lead, generate_code(*p, tag));
  }
  throw UnsupportedError("reference teacher: no answer for prompt '" + ex.prompt_id + "'");
}

} // namespace optisynth
