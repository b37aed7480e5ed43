#include "optisynth/resources.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "optisynth/error.hpp"

namespace optisynth {

namespace {

std::filesystem::path env_or(const char *var, const std::filesystem::path &fallback) {
  if (const char *v = std::getenv(var); v != nullptr && *v != '\0')
    return v;
  return fallback;
}

struct Vocabulary {
  std::map<std::string, DomainVocabulary> domains;
  std::vector<std::string> places;
  DomainVocabulary generic;
};

const Vocabulary &vocabulary() {
  static const Vocabulary vocab = [] {
    const auto path = data_dir() / "vocab" / "vocab.json";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception &e) {
      throw Error("cannot parse " + path.string() + ": " + e.what());
    }
    Vocabulary v;
    for (const auto &[name, entry] : j.at("domains").items()) {
      DomainVocabulary d;
      d.actor = entry.at("actor").get<std::string>();
      d.items = entry.at("items").get<std::vector<std::string>>();
      d.resources = entry.at("resources").get<std::vector<std::string>>();
      v.domains.emplace(name, std::move(d));
    }
    v.places = j.at("places").get<std::vector<std::string>>();
    v.generic.actor = "company";
    for (int k = 1; k <= 15; ++k)
      v.generic.items.push_back("product " + std::to_string(k));
    for (int k = 1; k <= 8; ++k)
      v.generic.resources.push_back("resource " + std::to_string(k));
    return v;
  }();
  return vocab;
}

} // namespace

std::filesystem::path data_dir() {
  return env_or("OPTISYNTH_DATA_DIR", std::filesystem::path(OPTISYNTH_SOURCE_DIR) / "data");
}

std::filesystem::path prompts_dir() {
  return env_or("OPTISYNTH_PROMPTS_DIR",
                std::filesystem::path(OPTISYNTH_SOURCE_DIR) / "prompts" / "v1");
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path &path, const std::string &content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out)
    throw Error("cannot write " + path.string());
}

const DomainVocabulary &domain_vocabulary(const std::string &domain) {
  const Vocabulary &v = vocabulary();
  const auto it = v.domains.find(domain);
  return it == v.domains.end() ? v.generic : it->second;
}

const std::vector<std::string> &place_names() { return vocabulary().places; }

std::vector<std::string> take_labels(const std::vector<std::string> &pool, std::size_t count) {
  std::vector<std::string> out;
  if (pool.empty())
    throw Error("empty label pool");
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t round = k / pool.size();
    std::string label = pool[k % pool.size()];
    if (round > 0)
      label += " (" + std::to_string(round + 1) + ")";
    out.push_back(std::move(label));
  }
  return out;
}

} // namespace optisynth
