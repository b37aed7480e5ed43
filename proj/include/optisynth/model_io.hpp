#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "optisynth/model.hpp"

namespace optisynth {

/// Shortest decimal text that parses back to exactly `value`; infinities are
/// written as "inf" / "-inf".
std::string format_number(double value);

/// Parses the output of format_number (and any plain decimal / exponent
/// literal). Returns false on malformed input.
bool parse_number(std::string_view text, double &out);

/// Serializes the canonical form of `problem` in the instance file format
/// described in docs/instance-format.md.
std::string to_text(const Problem &problem);

/// Inverse of to_text. Throws ParseError with a 1-based line and column.
/// The result is canonical and validated.
Problem from_text(std::string_view text);

Problem read_problem(const std::filesystem::path &path);
void write_problem(const std::filesystem::path &path, const Problem &problem);

} // namespace optisynth
