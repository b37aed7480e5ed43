#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace optisynth {

/// One line of a benchmark or generated dataset:
///   {"id", "description", "problem"?, "label", ...}
/// `problem` is model text in the to_text format. The label may be a JSON
/// number or a string; its literal text is kept because the evaluation
/// tolerance depends on how many decimals were stored.
struct DatasetEntry {
  std::string id;
  std::string description;
  std::optional<std::string> problem;
  std::string label_text;
  double label = 0;
  nlohmann::json extra = nlohmann::json::object(); // every other field, e.g. class, seed

  friend bool operator==(const DatasetEntry &, const DatasetEntry &) = default;
};

/// Throws ParseError (reporting `line_no` when nonzero) on malformed JSON, a
/// missing id or label, or a label that is not a number.
DatasetEntry parse_dataset_line(std::string_view line, std::size_t line_no = 0);
/// Label is written as a JSON number; the fields after it come from `extra`.
std::string dataset_line(const DatasetEntry &entry);
std::vector<DatasetEntry> read_dataset(const std::filesystem::path &path);
void write_dataset(const std::filesystem::path &path, const std::vector<DatasetEntry> &entries);

} // namespace optisynth
