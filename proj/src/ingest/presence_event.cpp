#include "mobmod/ingest/presence_event.hpp"

#include <stdexcept>
#include <tuple>

namespace mobmod::ingest {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Assoc: return "assoc";
    case EventKind::Disassoc: return "disassoc";
    case EventKind::Reassoc: return "reassoc";
    case EventKind::Auth: return "auth";
    case EventKind::Deauth: return "deauth";
    case EventKind::Drift: return "drift";
  }
  return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (EventKind k : kAllEventKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(Role role) {
  return role == Role::Student ? "student" : "staff";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "student") return Role::Student;
  if (text == "staff" || text == "faculty") return Role::FacultyStaff;
  return std::nullopt;
}

std::strong_ordering compare(const PresenceEvent& a, const PresenceEvent& b) {
  const auto key = [](const PresenceEvent& e) {
    return std::tie(e.timestamp, e.device, e.controller, e.kind, e.ap, e.username,
                    e.role);
  };
  const auto ka = key(a);
  const auto kb = key(b);
  if (ka < kb) return std::strong_ordering::less;
  if (kb < ka) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

nlohmann::json to_json(const PresenceEvent& event) {
  nlohmann::json j = {{"ts", event.timestamp},
                      {"controller", event.controller},
                      {"kind", to_string(event.kind)},
                      {"device", event.device}};
  if (!event.ap.empty()) j["ap"] = event.ap;
  if (event.username) j["user"] = *event.username;
  if (event.role) j["role"] = to_string(*event.role);
  return j;
}

PresenceEvent event_from_json(const nlohmann::json& j) {
  PresenceEvent e;
  e.timestamp = j.at("ts").get<Timestamp>();
  e.controller = j.at("controller").get<std::string>();
  const auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("event: unknown kind " + j.at("kind").dump());
  e.kind = *kind;
  e.device = j.at("device").get<std::string>();
  if (j.contains("ap")) e.ap = j["ap"].get<std::string>();
  if (j.contains("user")) e.username = j["user"].get<std::string>();
  if (j.contains("role")) {
    const auto role = parse_role(j["role"].get<std::string>());
    if (!role) throw std::invalid_argument("event: unknown role " + j["role"].dump());
    e.role = *role;
  }
  return e;
}

}  // namespace mobmod::ingest
