#include "mobmod/trajectory/trajectory.hpp"

#include <fstream>
#include <istream>
#include <ostream>



namespace mobmod::trajectory {

std::string_view to_string(Context c) { return c == Context::Work ? "Work" : "Home"; }

LocationHierarchy hierarchy_from_ap_map(const ingest::ApMap& map) {
  LocationHierarchy h;
  for (const auto& [id, rec] : map) {
    h[rec.location()] = LocationInfo{rec.building_name,
                                     std::string(ingest::to_string(rec.building_type))};
  }
  return h;
}

bool valid_granularity(int minutes) {
  return minutes == 15 || minutes == 30 || minutes == 60;
}

std::size_t bins_per_day(int granularity) {
  if (!valid_granularity(granularity)) {
    throw SchemaError("unsupported granularity " + std::to_string(granularity));
  }
  return static_cast<std::size_t>(1440 / granularity);
}

void validate(const MultiScaleTrajectory& t, const LocationHierarchy* hierarchy) {
  if (t.user.empty()) throw SchemaError("trajectory: empty user");
  if (!valid_granularity(t.granularity)) {
    throw SchemaError("trajectory " + t.user + ": unsupported granularity " +
                      std::to_string(t.granularity));
  }
  const std::size_t n = bins_per_day(t.granularity);
  for (std::size_t s = 0; s < kScaleCount; ++s) {
    if (t.tokens[s].size() != n) {
      throw SchemaError("trajectory " + t.user + " " + format_date(t.day) + ": " +
                        std::string(kScaleNames[s]) + " has " +
                        std::to_string(t.tokens[s].size()) + " bins, expected " +
                        std::to_string(n));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t off = 0;
    for (std::size_t s = 0; s < kScaleCount; ++s) off += t.tokens[s][i] == kOffToken;
    if (off != 0 && off != kScaleCount) {
      throw SchemaError("trajectory " + t.user + " bin " + std::to_string(i) +
                        ": OFF in some scales only");
    }
    if (off) continue;
    const Timestamp bin_start = t.day * kSecondsPerDay +
                                static_cast<Timestamp>(i) * t.granularity * 60;
    if (t.tokens[0][i] != to_string(annotate_context(bin_start))) {
      throw SchemaError("trajectory " + t.user + " bin " + std::to_string(i) +
                        ": context does not match bin time");
    }
    if (!hierarchy) continue;
    const auto it = hierarchy->find(t.tokens[3][i]);
    if (it == hierarchy->end()) {
      throw SchemaError("trajectory " + t.user + ": unknown location " + t.tokens[3][i]);
    }
    if (it->second.space_type != t.tokens[1][i] || it->second.building != t.tokens[2][i]) {
      throw SchemaError("trajectory " + t.user + " bin " + std::to_string(i) +
                        ": building or space type inconsistent with location");
    }
  }
}

nlohmann::json to_json(const MultiScaleTrajectory& t) {
  nlohmann::json j = {{"user", t.user},
                      {"date", format_date(t.day)},
                      {"granularity", t.granularity}};
  for (std::size_t s = 0; s < kScaleCount; ++s) j[std::string(kScaleNames[s])] = t.tokens[s];
  return j;
}

MultiScaleTrajectory trajectory_from_json(const nlohmann::json& j) {
  MultiScaleTrajectory t;
  t.user = j.at("user").get<std::string>();
  const auto day = parse_date(j.at("date").get<std::string>());
  if (!day) throw SchemaError("trajectory: bad date " + j.at("date").dump());
  t.day = *day;
  t.granularity = j.at("granularity").get<int>();
  for (std::size_t s = 0; s < kScaleCount; ++s) {
    t.tokens[s] = j.at(std::string(kScaleNames[s])).get<std::vector<std::string>>();
  }
  return t;
}

void write_trajectories(const std::vector<MultiScaleTrajectory>& ts, std::ostream& out) {
  for (const auto& t : ts) out << to_json(t).dump() << '\n';
}

std::vector<MultiScaleTrajectory> read_trajectories(std::istream& in) {
  std::vector<MultiScaleTrajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(trajectory_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw SchemaError("trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<MultiScaleTrajectory> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file " + path.string());
  return read_trajectories(in);
}

}  // namespace mobmod::trajectory
