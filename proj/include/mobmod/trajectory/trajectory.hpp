#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobmod/common/time.hpp"
#include "mobmod/ingest/ap_map.hpp"

namespace mobmod::trajectory {

/// Symbol used in every scale for bins without on-network presence.
inline constexpr std::string_view kOffToken = "OFF";

/// Minimum stay, in seconds, for a dwell location.
inline constexpr Timestamp kDwellThreshold = 600;

enum class Context { Work, Home };
std::string_view to_string(Context c);

/// Work iff the local time of day lies in [08:30, 16:30).
Context annotate_context(Timestamp ts);

/// Scales of a multi-scale trajectory, coarse to fine.
enum class Scale : std::size_t { Context = 0, SpaceType = 1, Building = 2, Location = 3 };
inline constexpr std::size_t kScaleCount = 4;
inline constexpr std::array<std::string_view, kScaleCount> kScaleNames = {
    "context", "space_type", "building", "location"};

/// Building name and space type of every indoor location.
struct LocationInfo {
  std::string building;
  std::string space_type;
  bool operator==(const LocationInfo&) const = default;
};
using LocationHierarchy = std::map<std::string, LocationInfo>;

LocationHierarchy hierarchy_from_ap_map(const ingest::ApMap& map);

/// One user-day sampled every `granularity` minutes. tokens[scale][bin] holds
/// the symbolic value of that scale (context name, space type, building name,
/// location key) or kOffToken.
struct MultiScaleTrajectory {
  std::string user;
  std::int64_t day = 0;  // days since epoch
  int granularity = 60;
  std::array<std::vector<std::string>, kScaleCount> tokens;

  std::size_t length() const { return tokens[0].size(); }
  const std::vector<std::string>& scale(Scale s) const {
    return tokens[static_cast<std::size_t>(s)];
  }
  bool operator==(const MultiScaleTrajectory&) const = default;
};

bool valid_granularity(int minutes);
std::size_t bins_per_day(int granularity);

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws SchemaError unless the trajectory is well formed: supported
/// granularity, four sequences of 1440/granularity bins, OFF in all scales or
/// none, and (with a hierarchy) building, space type and context consistent
/// with the location and bin start time.
void validate(const MultiScaleTrajectory& t, const LocationHierarchy* hierarchy = nullptr);

nlohmann::json to_json(const MultiScaleTrajectory& t);
MultiScaleTrajectory trajectory_from_json(const nlohmann::json& j);

void write_trajectories(const std::vector<MultiScaleTrajectory>& ts, std::ostream& out);
std::vector<MultiScaleTrajectory> read_trajectories(std::istream& in);
std::vector<MultiScaleTrajectory> read_trajectories(const std::filesystem::path& path);

}  // namespace mobmod::trajectory
