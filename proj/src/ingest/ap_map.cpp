#include "mobmod/ingest/ap_map.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace mobmod::ingest {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(cell);
  for (auto& s : out) {
    const auto first = s.find_first_not_of(" \t");
    const auto last = s.find_last_not_of(" \t");
    s = first == std::string::npos ? std::string{} : s.substr(first, last - first + 1);
  }
  return out;
}

}  // namespace

std::string_view to_string(BuildingType type) {
  switch (type) {
    case BuildingType::Educational: return "Educational";
    case BuildingType::Dorm: return "Dorm";
    case BuildingType::Dining: return "Dining";
    case BuildingType::Admin: return "Admin";
    case BuildingType::Library: return "Library";
    case BuildingType::Recreation: return "Recreation";
    case BuildingType::StudentUnion: return "StudentUnion";
    case BuildingType::ResearchLab: return "ResearchLab";
    case BuildingType::HealthCenter: return "HealthCenter";
    case BuildingType::Athletics: return "Athletics";
    case BuildingType::Parking: return "Parking";
    case BuildingType::Services: return "Services";
    case BuildingType::Other: return "Other";
  }
  return "Other";
}

std::optional<BuildingType> parse_building_type(std::string_view text) {
  for (BuildingType t : kAllBuildingTypes) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string ApRecord::location() const {
  return building_name + "/" + std::to_string(floor) + "/" + zone;
}

ApMap load_ap_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ApMapError("cannot open AP map " + path.string());
  return parse_ap_map(in);
}

ApMap parse_ap_map(std::istream& in) {
  static constexpr std::array<std::string_view, 5> kColumns = {
      "ap_id", "building_name", "building_type", "floor", "zone"};
  std::string line;
  if (!std::getline(in, line)) throw MissingColumn("AP map: empty file");
  const auto header = split_csv(line);
  std::array<std::size_t, 5> index{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) {
      throw MissingColumn("AP map: missing column " + std::string(kColumns[c]));
    }
    index[c] = static_cast<std::size_t>(it - header.begin());
  }

  ApMap map;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw MissingColumn("AP map line " + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " columns");
    }
    ApRecord rec;
    rec.ap_id = cells[index[0]];
    rec.building_name = cells[index[1]];
    const auto type = parse_building_type(cells[index[2]]);
    if (!type) {
      throw UnknownBuildingType("AP map line " + std::to_string(line_no) +
                                ": unknown building type '" + cells[index[2]] + "'");
    }
    rec.building_type = *type;
    const std::string& floor = cells[index[3]];
    auto [ptr, ec] = std::from_chars(floor.data(), floor.data() + floor.size(), rec.floor);
    if (ec != std::errc() || ptr != floor.data() + floor.size()) {
      throw ApMapError("AP map line " + std::to_string(line_no) + ": bad floor '" +
                       floor + "'");
    }
    rec.zone = cells[index[4]];
    if (rec.ap_id.empty() || rec.zone.empty() || rec.building_name.empty()) {
      throw MissingColumn("AP map line " + std::to_string(line_no) + ": empty field");
    }
    if (map.count(rec.ap_id)) throw DuplicateApId("AP map: duplicate ap_id " + rec.ap_id);
    map.emplace(rec.ap_id, std::move(rec));
  }
  return map;
}

void write_ap_map(const ApMap& map, std::ostream& out) {
  out << "ap_id,building_name,building_type,floor,zone\n";
  for (const auto& [id, rec] : map) {
    out << rec.ap_id << ',' << rec.building_name << ',' << to_string(rec.building_type)
        << ',' << rec.floor << ',' << rec.zone << '\n';
  }
}

}  // namespace mobmod::ingest
