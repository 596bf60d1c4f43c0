#include "mobmod/model/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace mobmod::model {

using trajectory::kOffToken;

Vocabulary Vocabulary::from_hierarchy(const trajectory::LocationHierarchy& hierarchy) {
  Vocabulary v;
  v.hierarchy_ = hierarchy;
  v.tokens_.push_back("PAD");

  std::set<std::string> type_names;
  std::set<std::string> buildings;
  std::vector<std::string> locations;
  for (const auto& [location, info] : hierarchy) {
    type_names.insert(info.space_type);
    buildings.insert(info.building);
    locations.push_back(location);
  }
  std::vector<std::string> types;
  for (auto t : ingest::kAllBuildingTypes) {
    const std::string name(ingest::to_string(t));
    if (type_names.contains(name)) types.push_back(name);
  }
  v.add_range(Scale::Context, {std::string(trajectory::to_string(trajectory::Context::Work)),
                               std::string(trajectory::to_string(trajectory::Context::Home))});
  v.add_range(Scale::SpaceType, types);
  v.add_range(Scale::Building, {buildings.begin(), buildings.end()});
  v.add_range(Scale::Location, locations);
  return v;
}

Vocabulary Vocabulary::from_ap_map(const ingest::ApMap& map) {
  return from_hierarchy(trajectory::hierarchy_from_ap_map(map));
}

void Vocabulary::add_range(Scale s, const std::vector<std::string>& values) {
  const int first = size();
  lookup_[index(s)].emplace(std::string(kOffToken), first);
  tokens_.emplace_back(kOffToken);
  for (const auto& value : values) {
    if (value == kOffToken) throw std::invalid_argument("vocabulary: OFF is reserved");
    if (!lookup_[index(s)].emplace(value, size()).second) {
      throw std::invalid_argument("vocabulary: duplicate token " + value);
    }
    tokens_.push_back(value);
  }
  ranges_[index(s)] = {first, size()};
}

bool Vocabulary::in_range(Scale s, int id) const {
  const auto [lo, hi] = range(s);
  return id >= lo && id < hi;
}

std::optional<int> Vocabulary::find(Scale s, std::string_view token) const {
  const auto& m = lookup_[index(s)];
  const auto it = m.find(token);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(Scale s, std::string_view token) const {
  const auto found = find(s, token);
  if (!found) {
    throw UnknownToken("unknown " + std::string(trajectory::kScaleNames[index(s)]) +
                       " token '" + std::string(token) + "'");
  }
  return *found;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw UnknownToken("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

Scale Vocabulary::scale_of(int id) const {
  for (std::size_t s = 0; s < kScaleCount; ++s) {
    if (id >= ranges_[s].first && id < ranges_[s].second) return static_cast<Scale>(s);
  }
  throw UnknownToken("token id has no scale: " + std::to_string(id));
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j;
  j["format"] = "mobmod-vocab";
  j["version"] = 1;
  for (std::size_t s = 0; s < kScaleCount; ++s) {
    const auto [lo, hi] = ranges_[s];
    j["ranges"][std::string(trajectory::kScaleNames[s])] = {lo, hi};
  }
  j["tokens"] = tokens_;
  nlohmann::json locations = nlohmann::json::array();
  for (const auto& [location, info] : hierarchy_) {
    locations.push_back({{"location", location},
                         {"building", info.building},
                         {"space_type", info.space_type}});
  }
  j["hierarchy"] = std::move(locations);
  return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "mobmod-vocab") {
    throw std::runtime_error("vocabulary: unexpected format");
  }
  trajectory::LocationHierarchy h;
  for (const auto& item : j.at("hierarchy")) {
    h[item.at("location").get<std::string>()] = {item.at("building").get<std::string>(),
                                                  item.at("space_type").get<std::string>()};
  }
  Vocabulary v = from_hierarchy(h);
  if (v.tokens_ != j.at("tokens").get<std::vector<std::string>>()) {
    throw std::runtime_error("vocabulary: token table does not match hierarchy");
  }
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path.string());
  out << to_json().dump() << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary " + path.string());
  return from_json(nlohmann::json::parse(in));
}

TokenSeqs tokenize(const trajectory::MultiScaleTrajectory& t, const Vocabulary& vocab) {
  TokenSeqs out;
  for (std::size_t s = 0; s < kScaleCount; ++s) {
    out[s].reserve(t.tokens[s].size());
    for (const auto& token : t.tokens[s]) out[s].push_back(vocab.id(static_cast<Scale>(s), token));
  }
  return out;
}

trajectory::MultiScaleTrajectory detokenize(const TokenSeqs& tokens, const Vocabulary& vocab,
                                            const std::string& user, std::int64_t day,
                                            int granularity) {
  trajectory::MultiScaleTrajectory t;
  t.user = user;
  t.day = day;
  t.granularity = granularity;
  for (std::size_t s = 0; s < kScaleCount; ++s) {
    t.tokens[s].reserve(tokens[s].size());
    for (int id : tokens[s]) {
      if (!vocab.in_range(static_cast<Scale>(s), id)) {
        throw UnknownToken("token id " + std::to_string(id) + " outside " +
                           std::string(trajectory::kScaleNames[s]) + " range");
      }
      t.tokens[s].push_back(vocab.token(id));
    }
  }
  return t;
}

std::filesystem::path vocab_sidecar_path(const std::filesystem::path& trajectories) {
  std::filesystem::path p = trajectories;
  p.replace_extension(".vocab.json");
  return p;
}

}  // namespace mobmod::model
