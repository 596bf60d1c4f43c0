#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mobmod::ingest {

enum class BuildingType {
  Educational,
  Dorm,
  Dining,
  Admin,
  Library,
  Recreation,
  StudentUnion,
  ResearchLab,
  HealthCenter,
  Athletics,
  Parking,
  Services,
  Other
};

inline constexpr std::array<BuildingType, 13> kAllBuildingTypes = {
    BuildingType::Educational, BuildingType::Dorm,         BuildingType::Dining,
    BuildingType::Admin,       BuildingType::Library,      BuildingType::Recreation,
    BuildingType::StudentUnion, BuildingType::ResearchLab, BuildingType::HealthCenter,
    BuildingType::Athletics,   BuildingType::Parking,      BuildingType::Services,
    BuildingType::Other};

std::string_view to_string(BuildingType type);
std::optional<BuildingType> parse_building_type(std::string_view text);

struct ApRecord {
  std::string ap_id;
  std::string building_name;
  BuildingType building_type = BuildingType::Other;
  int floor = 0;
  std::string zone;

  /// Campus-unique indoor location: "<building>/<floor>/<zone>".
  std::string location() const;

  bool operator==(const ApRecord&) const = default;
};

using ApMap = std::map<std::string, ApRecord>;

class ApMapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DuplicateApId : public ApMapError {
 public:
  using ApMapError::ApMapError;
};
class UnknownBuildingType : public ApMapError {
 public:
  using ApMapError::ApMapError;
};
class MissingColumn : public ApMapError {
 public:
  using ApMapError::ApMapError;
};

/// CSV with header columns ap_id, building_name, building_type, floor, zone.
ApMap load_ap_map(const std::filesystem::path& path);
ApMap parse_ap_map(std::istream& in);
void write_ap_map(const ApMap& map, std::ostream& out);

}  // namespace mobmod::ingest
