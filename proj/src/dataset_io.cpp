#include "das/dataset_io.hpp"

#include <fstream>

#include <json.hpp>

#include "das/align.hpp"

namespace das {

using nlohmann::json;

void write_counterfactuals(const std::string& path,
                           const std::vector<CounterfactualExample>& data) {
  std::ofstream f(path);
  if (!f) fail(Errc::Io, "cannot open '" + path + "' for writing");
  for (const auto& ex : data) {
    json j;
    j["base"] = ex.base;
    j["sources"] = ex.sources;
    j["targets"] = ex.targets;
    j["gold"] = ex.gold;
    f << j.dump() << '\n';
  }
}

std::vector<CounterfactualExample> read_counterfactuals(const std::string& path,
                                                        const CausalModel* audit_against) {
  std::ifstream f(path);
  if (!f) fail(Errc::Io, "cannot open '" + path + "'");
  std::vector<CounterfactualExample> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    CounterfactualExample ex;
    ex.base = j.at("base").get<std::vector<std::int64_t>>();
    ex.sources = j.at("sources").get<std::vector<std::vector<std::int64_t>>>();
    ex.targets = j.at("targets").get<std::vector<std::vector<std::string>>>();
    ex.gold = j.at("gold").get<std::int64_t>();
    if (ex.sources.size() != ex.targets.size())
      fail(Errc::Io, "sources/targets length mismatch in '" + path + "'");
    out.push_back(std::move(ex));
  }
  if (audit_against) audit_gold_labels(*audit_against, out);
  return out;
}

void write_labeled(const std::string& path, const std::vector<LabeledExample>& data) {
  std::ofstream f(path);
  if (!f) fail(Errc::Io, "cannot open '" + path + "' for writing");
  for (const auto& ex : data) {
    json j;
    j["inputs"] = ex.inputs;
    j["label"] = ex.label;
    f << j.dump() << '\n';
  }
}

std::vector<LabeledExample> read_labeled(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::Io, "cannot open '" + path + "'");
  std::vector<LabeledExample> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    out.push_back({j.at("inputs").get<std::vector<std::int64_t>>(),
                   j.at("label").get<std::int64_t>()});
  }
  return out;
}

std::uint64_t content_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::Io, "cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!f) break;
  }
  return h;
}

}  // namespace das
