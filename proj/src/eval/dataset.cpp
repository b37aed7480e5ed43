#include <sstream>

#include "optisynth/dataset.hpp"
#include "optisynth/error.hpp"
#include "optisynth/model_io.hpp"
#include "optisynth/resources.hpp"

namespace optisynth {

namespace {

using json = nlohmann::json;

/// DOM builder that also keeps the literal text of the top-level "label".
class LabelSax : public nlohmann::detail::json_sax_dom_parser<json> {
public:
  using Base = nlohmann::detail::json_sax_dom_parser<json>;
  explicit LabelSax(json &root) : Base(root, true) {}

  std::optional<std::string> label_text;

  bool start_object(std::size_t n) {
    ++depth_;
    return Base::start_object(n);
  }
  bool end_object() {
    --depth_;
    return Base::end_object();
  }
  bool start_array(std::size_t n) {
    ++depth_;
    return Base::start_array(n);
  }
  bool end_array() {
    --depth_;
    return Base::end_array();
  }
  bool key(json::string_t &k) {
    if (depth_ == 1)
      at_label_ = k == "label";
    return Base::key(k);
  }
  bool number_integer(json::number_integer_t v) {
    capture(std::to_string(v));
    return Base::number_integer(v);
  }
  bool number_unsigned(json::number_unsigned_t v) {
    capture(std::to_string(v));
    return Base::number_unsigned(v);
  }
  bool number_float(json::number_float_t v, const json::string_t &s) {
    capture(s);
    return Base::number_float(v, s);
  }

private:
  void capture(const std::string &text) {
    if (depth_ == 1 && at_label_)
      label_text = text;
  }
  int depth_ = 0;
  bool at_label_ = false;
};

} // namespace

DatasetEntry parse_dataset_line(std::string_view line, std::size_t line_no) {
  const auto fail = [&](const std::string &why) -> ParseError {
    return ParseError(line_no, line_no ? 1 : 0, "dataset entry: " + why);
  };
  json j;
  LabelSax sax(j);
  try {
    json::sax_parse(line, &sax);
  } catch (const json::exception &e) {
    throw fail(e.what());
  }
  if (!j.is_object())
    throw fail("not a JSON object");
  DatasetEntry e;
  try {
    e.id = j.at("id").get<std::string>();
    e.description = j.value("description", "");
    if (j.contains("problem") && !j["problem"].is_null())
      e.problem = j["problem"].get<std::string>();
    const json &label = j.at("label");
    if (label.is_number()) {
      e.label_text = *sax.label_text;
      e.label = label.get<double>();
    } else if (label.is_string()) {
      e.label_text = label.get<std::string>();
      if (!parse_number(e.label_text, e.label))
        throw fail("label '" + e.label_text + "' is not a number");
    } else {
      throw fail("label must be a number");
    }
  } catch (const json::exception &ex) {
    throw fail(ex.what());
  }
  for (const auto &[k, v] : j.items())
    if (k != "id" && k != "description" && k != "problem" && k != "label")
      e.extra[k] = v;
  return e;
}

std::string dataset_line(const DatasetEntry &e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["description"] = e.description;
  if (e.problem)
    j["problem"] = *e.problem;
  j["label"] = e.label;
  for (const auto &[k, v] : e.extra.items())
    j[k] = v;
  return j.dump();
}

std::vector<DatasetEntry> read_dataset(const std::filesystem::path &path) {
  std::istringstream in(read_file(path));
  std::vector<DatasetEntry> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n)
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      out.push_back(parse_dataset_line(line, n));
  return out;
}

void write_dataset(const std::filesystem::path &path, const std::vector<DatasetEntry> &entries) {
  std::string text;
  for (const auto &e : entries)
    text += dataset_line(e) + "\n";
  write_file(path, text);
}

} // namespace optisynth
