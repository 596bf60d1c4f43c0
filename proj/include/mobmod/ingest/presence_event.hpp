#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mobmod/common/time.hpp"

namespace mobmod::ingest {

enum class EventKind { Assoc, Disassoc, Reassoc, Auth, Deauth, Drift };

inline constexpr std::array<EventKind, 6> kAllEventKinds = {
    EventKind::Assoc, EventKind::Disassoc, EventKind::Reassoc,
    EventKind::Auth,  EventKind::Deauth,   EventKind::Drift};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// Assoc, Reassoc and Drift place the device at an AP.
constexpr bool places_device(EventKind kind) {
  return kind == EventKind::Assoc || kind == EventKind::Reassoc ||
         kind == EventKind::Drift;
}
constexpr bool is_auth_family(EventKind kind) {
  return kind == EventKind::Auth || kind == EventKind::Deauth;
}

enum class Role { Student, FacultyStaff };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct PresenceEvent {
  Timestamp timestamp = 0;
  std::string controller;
  EventKind kind = EventKind::Assoc;
  std::string device;
  std::string ap;
  std::optional<std::string> username;
  std::optional<Role> role;

  bool operator==(const PresenceEvent&) const = default;
};

/// Total order: (timestamp, device, controller, kind), then the remaining
/// fields, so equal events are adjacent after sorting.
std::strong_ordering compare(const PresenceEvent& a, const PresenceEvent& b);
inline bool operator<(const PresenceEvent& a, const PresenceEvent& b) {
  return compare(a, b) < 0;
}

nlohmann::json to_json(const PresenceEvent& event);
PresenceEvent event_from_json(const nlohmann::json& j);

}  // namespace mobmod::ingest
