#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mobmod/ingest/ap_map.hpp"
#include "mobmod/ingest/presence_event.hpp"
#include "mobmod/trajectory/trajectory.hpp"

namespace mobmod::trajectory {

struct Session {
  std::string device;
  std::string ap;
  Timestamp start = 0;
  Timestamp end = 0;
  bool operator==(const Session&) const = default;
};

struct SessionConfig {
  Timestamp cap = 4 * 3600;
};

struct SessionStats {
  std::size_t orphan_disassoc = 0;
  std::size_t zero_length = 0;
  std::size_t capped = 0;
};

using DeviceSessions = std::map<std::string, std::vector<Session>>;

/// Every Assoc/Reassoc/Drift opens a session at its AP and closes whatever
/// session the device had open at that instant. Disassoc closes the open
/// session at the same AP; otherwise it is an orphan. Unclosed sessions end at
/// open time + cap.
DeviceSessions resolve_sessions(const std::vector<ingest::PresenceEvent>& events,
                                const SessionConfig& config = {},
                                SessionStats* stats = nullptr);

struct UserDeviceMap {
  std::map<std::string, std::set<std::string>> user_devices;
  std::map<std::string, std::string> device_user;
  std::map<std::string, ingest::Role> device_role;
  std::size_t conflicts = 0;

  std::optional<ingest::Role> role_of(const std::string& user) const;
};

/// Devices claimed by Auth events; a later claim by another user wins.
UserDeviceMap map_users_devices(const std::vector<ingest::PresenceEvent>& events);

/// Drops devices seen at a single AP, then picks the highest mean number of
/// distinct APs per active day. Ties go to the smaller id.
std::optional<std::string> select_primary_device(const std::set<std::string>& devices,
                                                 const DeviceSessions& sessions);

/// A coalesced stay at one indoor location.
struct Stay {
  std::string location;
  std::string building;
  ingest::BuildingType space_type = ingest::BuildingType::Other;
  Timestamp start = 0;
  Timestamp end = 0;

  Timestamp duration() const { return end - start; }
  bool is_dwell() const { return duration() >= kDwellThreshold; }
  bool operator==(const Stay&) const = default;
};

struct DwellVisit {
  std::string user;
  Timestamp start = 0;
  Timestamp end = 0;
  std::string location;
  std::string building;
  ingest::BuildingType space_type = ingest::BuildingType::Other;
  Context context = Context::Home;
  bool operator==(const DwellVisit&) const = default;
};

struct DwellResult {
  std::vector<Stay> stays;  // dwells and transitions, time ordered
  std::vector<DwellVisit> visits;
  std::size_t unknown_ap = 0;
};

/// Sessions closer than this are considered contiguous when coalescing.
inline constexpr Timestamp kCoalesceGap = 60;

DwellResult build_dwell_visits(const std::string& user, const std::vector<Session>& sessions,
                               const ingest::ApMap& ap_map);

/// Bins one day of stays. Each bin takes the location with the largest
/// overlap (ties: earliest first overlap); bins without presence are OFF.
MultiScaleTrajectory bin_trajectory(const std::string& user, std::int64_t day,
                                    const std::vector<Stay>& stays, int granularity);

struct BuildConfig {
  int granularity = 60;
  SessionConfig sessions;
};

struct BuildStats {
  SessionStats sessions;
  std::size_t users = 0;
  std::size_t excluded_users = 0;
  std::size_t unmapped_devices = 0;
  std::size_t user_conflicts = 0;
  std::size_t unknown_ap = 0;
  std::size_t dwell_visits = 0;
  std::size_t trajectories = 0;
};

struct BuildOutput {
  std::vector<MultiScaleTrajectory> trajectories;  // by user, then day
  std::map<std::string, std::vector<DwellVisit>> visits;
  std::map<std::string, ingest::Role> roles;
  BuildStats stats;
};

/// Events to trajectories. Every included user gets one trajectory per day
/// between the first and last observed presence of any user.
BuildOutput build_trajectories(const std::vector<ingest::PresenceEvent>& events,
                               const ingest::ApMap& ap_map, const BuildConfig& config = {});

}  // namespace mobmod::trajectory
