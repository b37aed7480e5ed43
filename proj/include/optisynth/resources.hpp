#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace optisynth {

/// Bundled data directory: $OPTISYNTH_DATA_DIR when set, else <source>/data.
std::filesystem::path data_dir();

/// Prompt library directory: $OPTISYNTH_PROMPTS_DIR when set, else
/// <source>/prompts/v1.
std::filesystem::path prompts_dir();

/// Whole file as bytes. Throws Error when the file cannot be read.
std::string read_file(const std::filesystem::path &path);

/// Writes `content` atomically enough for tests: truncate, write, flush.
/// Throws Error on failure.
void write_file(const std::filesystem::path &path, const std::string &content);

struct DomainVocabulary {
  std::string actor; // e.g. "bakery"
  std::vector<std::string> items;
  std::vector<std::string> resources;
};

/// Word lists for a seed domain; domains without a bundled list get a
/// generic vocabulary.
const DomainVocabulary &domain_vocabulary(const std::string &domain);

/// Place names used for cities, depots and hubs.
const std::vector<std::string> &place_names();

/// The first `count` entries of `pool`, made unique by numbering repeats
/// ("x", ..., "x (2)") when the pool is too short.
std::vector<std::string> take_labels(const std::vector<std::string> &pool, std::size_t count);

} // namespace optisynth
