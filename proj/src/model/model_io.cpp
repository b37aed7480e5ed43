#include "optisynth/model_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "optisynth/error.hpp"

namespace optisynth {

std::string format_number(double value) {
  if (std::isinf(value))
    return value > 0 ? "inf" : "-inf";
  if (value == 0.0)
    return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

bool parse_number(std::string_view text, double &out) {
  if (text == "inf" || text == "+inf") {
    out = kInf;
    return true;
  }
  if (text == "-inf") {
    out = -kInf;
    return true;
  }
  if (!text.empty() && text.front() == '+')
    text.remove_prefix(1);
  if (text.empty())
    return false;
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size() &&
         std::isfinite(out);
}

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
    return false;
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'))
      return false;
  return true;
}

std::string expr_text(const Problem &p, const LinearExpr &e) {
  std::string out;
  for (const Term &t : e.terms) {
    if (out.empty()) {
      out += format_number(t.coef);
    } else {
      out += t.coef < 0 ? " - " : " + ";
      out += format_number(std::fabs(t.coef));
    }
    out += '*';
    out += p.variables[t.var].name;
  }
  if (e.constant != 0.0) {
    if (out.empty())
      out += format_number(e.constant);
    else {
      out += e.constant < 0 ? " - " : " + ";
      out += format_number(std::fabs(e.constant));
    }
  }
  return out.empty() ? "0" : out;
}

} // namespace

std::string to_text(const Problem &problem) {
  validate(problem);
  const Problem p = canonicalize(problem);
  std::ostringstream os;
  if (!p.class_tag.empty()) {
    if (p.class_tag.find_first_of(" \t\r\n") != std::string::npos)
      throw ModelError("class tag must not contain whitespace");
    os << "class " << p.class_tag << '\n';
  }
  for (const auto &[key, value] : p.metadata) {
    if (key.empty() || key.find_first_of(" \t\r\n") != std::string::npos)
      throw ModelError("metadata key '" + key + "' is empty or has whitespace");
    if (value.find_first_of("\r\n") != std::string::npos)
      throw ModelError("metadata value for '" + key + "' contains a newline");
    os << "meta " << key;
    if (!value.empty())
      os << ' ' << value;
    os << '\n';
  }
  for (const DecisionVariable &v : p.variables) {
    if (!is_identifier(v.name))
      throw ModelError("variable name '" + v.name + "' is not an identifier");
    os << "var " << v.name << ' ' << format_number(v.lower) << ' '
       << format_number(v.upper) << ' ' << (v.integral ? "int" : "cont") << '\n';
  }
  os << to_string(p.sense) << ' ' << expr_text(p, p.objective) << '\n';
  for (const Constraint &c : p.constraints) {
    os << "st ";
    if (!c.label.empty()) {
      if (c.label.find_first_of(" \t\r\n:") != std::string::npos)
        throw ModelError("constraint label '" + c.label +
                         "' contains whitespace or ':'");
      os << c.label << ": ";
    }
    os << expr_text(p, c.lhs) << ' ' << to_string(c.relation) << ' '
       << format_number(c.rhs) << '\n';
  }
  return os.str();
}

namespace {

struct Token {
  std::string_view text;
  std::size_t column; // 1-based
};

std::vector<Token> split_ws(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
      ++i;
    if (i >= line.size())
      break;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t')
      ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

class LineParser {
public:
  LineParser(Problem &problem, std::size_t line_no)
      : problem_(problem), line_(line_no) {}

  [[noreturn]] void fail(std::size_t column, const std::string &what) const {
    throw ParseError(line_, column, what);
  }

  double number(const Token &tok) const {
    double v = 0.0;
    if (!parse_number(tok.text, v))
      fail(tok.column, "expected a number, got '" + std::string(tok.text) + "'");
    return v;
  }

  double bound(const Token &tok) const {
    if (tok.text == "inf" || tok.text == "+inf")
      return kInf;
    if (tok.text == "-inf")
      return -kInf;
    return number(tok);
  }

  /// Parses tokens[begin, end) as an expression.
  LinearExpr expr(const std::vector<Token> &toks, std::size_t begin,
                  std::size_t end) const {
    LinearExpr e;
    if (begin >= end)
      fail(toks.empty() ? 1 : toks.back().column, "expected an expression");
    double sign = 1.0;
    bool expect_term = true;
    for (std::size_t k = begin; k < end; ++k) {
      const Token &tok = toks[k];
      if (!expect_term) {
        if (tok.text == "+")
          sign = 1.0;
        else if (tok.text == "-")
          sign = -1.0;
        else
          fail(tok.column, "expected '+' or '-', got '" + std::string(tok.text) + "'");
        expect_term = true;
        continue;
      }
      const auto star = tok.text.find('*');
      if (star == std::string_view::npos) {
        e.constant += sign * number(tok);
      } else {
        double coef = 0.0;
        if (!parse_number(tok.text.substr(0, star), coef))
          fail(tok.column, "bad coefficient in '" + std::string(tok.text) + "'");
        const std::string_view name = tok.text.substr(star + 1);
        const auto idx = problem_.find_var(name);
        if (!idx)
          fail(tok.column + star + 1,
               "undeclared variable '" + std::string(name) + "'");
        e.terms.push_back({sign * coef, *idx});
      }
      expect_term = false;
      sign = 1.0;
    }
    if (expect_term)
      fail(toks[end - 1].column, "expression ends with an operator");
    return e;
  }

private:
  Problem &problem_;
  std::size_t line_;
};

} // namespace

Problem from_text(std::string_view text) {
  Problem p;
  bool have_objective = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);

    const auto toks = split_ws(line);
    if (toks.empty() || toks[0].text.front() == '#')
      continue;
    LineParser lp(p, line_no);
    const std::string_view kw = toks[0].text;

    if (kw == "class") {
      if (toks.size() != 2)
        lp.fail(toks[0].column, "expected 'class <tag>'");
      p.class_tag = std::string(toks[1].text);
    } else if (kw == "meta") {
      if (toks.size() < 2)
        lp.fail(toks[0].column, "expected 'meta <key> [value]'");
      std::string value;
      if (toks.size() > 2)
        value = std::string(line.substr(toks[2].column - 1));
      p.metadata[std::string(toks[1].text)] = value;
    } else if (kw == "var") {
      if (have_objective)
        lp.fail(toks[0].column, "variables must be declared before the objective");
      if (toks.size() != 5)
        lp.fail(toks[0].column, "expected 'var <name> <lower> <upper> <int|cont>'");
      if (!is_identifier(toks[1].text))
        lp.fail(toks[1].column, "invalid variable name '" + std::string(toks[1].text) + "'");
      if (p.find_var(toks[1].text))
        lp.fail(toks[1].column, "duplicate variable '" + std::string(toks[1].text) + "'");
      DecisionVariable v;
      v.name = std::string(toks[1].text);
      v.lower = lp.bound(toks[2]);
      v.upper = lp.bound(toks[3]);
      if (toks[4].text == "int")
        v.integral = true;
      else if (toks[4].text != "cont")
        lp.fail(toks[4].column, "expected 'int' or 'cont', got '" + std::string(toks[4].text) + "'");
      if (v.lower > v.upper)
        lp.fail(toks[2].column, "lower bound exceeds upper bound");
      p.variables.push_back(std::move(v));
    } else if (kw == "min" || kw == "max") {
      if (have_objective)
        lp.fail(toks[0].column, "duplicate objective");
      if (p.variables.empty())
        lp.fail(toks[0].column, "objective before any variable declaration");
      p.sense = kw == "min" ? Sense::Minimize : Sense::Maximize;
      p.objective = lp.expr(toks, 1, toks.size());
      have_objective = true;
    } else if (kw == "st") {
      if (!have_objective)
        lp.fail(toks[0].column, "constraint before the objective");
      Constraint c;
      std::size_t begin = 1;
      if (toks.size() > 1 && toks[1].text.back() == ':') {
        c.label = std::string(toks[1].text.substr(0, toks[1].text.size() - 1));
        if (c.label.empty())
          lp.fail(toks[1].column, "empty constraint label");
        begin = 2;
      }
      if (toks.size() < begin + 3)
        lp.fail(toks[0].column, "expected 'st [label:] <expr> <rel> <rhs>'");
      const Token &rel = toks[toks.size() - 2];
      if (rel.text == "<=")
        c.relation = Relation::LE;
      else if (rel.text == ">=")
        c.relation = Relation::GE;
      else if (rel.text == "=")
        c.relation = Relation::EQ;
      else
        lp.fail(rel.column, "expected '<=', '=' or '>=', got '" + std::string(rel.text) + "'");
      c.lhs = lp.expr(toks, begin, toks.size() - 2);
      c.rhs = lp.number(toks.back());
      p.constraints.push_back(std::move(c));
    } else {
      lp.fail(toks[0].column, "unknown declaration '" + std::string(kw) + "'");
    }
  }
  if (!have_objective)
    throw ParseError(line_no, 1, "missing objective line");
  try {
    validate(p);
  } catch (const ModelError &e) {
    throw ParseError(line_no, 1, e.what());
  }
  return canonicalize(p);
}

Problem read_problem(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open instance file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void write_problem(const std::filesystem::path &path, const Problem &problem) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write instance file '" + path.string() + "'");
  out << to_text(problem);
  if (!out)
    throw Error("write failed for '" + path.string() + "'");
}

} // namespace optisynth
