#include "mobmod/trajectory/builder.hpp"

#include <algorithm>

namespace mobmod::trajectory {

using ingest::EventKind;
using ingest::PresenceEvent;

DeviceSessions resolve_sessions(const std::vector<PresenceEvent>& events,
                                const SessionConfig& config, SessionStats* stats) {
  struct Open {
    std::string ap;
    Timestamp start;
  };
  SessionStats local;
  DeviceSessions out;
  std::map<std::string, Open> open;

  auto close = [&](const std::string& device, const Open& o, Timestamp end) {
    if (end <= o.start) {
      ++local.zero_length;
      return;
    }
    out[device].push_back(Session{device, o.ap, o.start, end});
  };
  // Applies the cap to a session that would still be open at time t.
  auto expire = [&](const std::string& device, Timestamp t) {
    auto it = open.find(device);
    if (it != open.end() && t > it->second.start + config.cap) {
      close(device, it->second, it->second.start + config.cap);
      ++local.capped;
      open.erase(it);
    }
  };

  for (const auto& e : events) {
    if (ingest::is_auth_family(e.kind)) continue;
    expire(e.device, e.timestamp);
    auto it = open.find(e.device);
    if (ingest::places_device(e.kind)) {
      if (it != open.end()) {
        close(e.device, it->second, e.timestamp);
        it->second = Open{e.ap, e.timestamp};
      } else {
        open.emplace(e.device, Open{e.ap, e.timestamp});
      }
    } else if (e.kind == EventKind::Disassoc) {
      if (it != open.end() && it->second.ap == e.ap) {
        close(e.device, it->second, e.timestamp);
        open.erase(it);
      } else {
        ++local.orphan_disassoc;
      }
    }
  }
  for (const auto& [device, o] : open) {
    close(device, o, o.start + config.cap);
    ++local.capped;
  }
  for (auto& [device, list] : out) {
    std::sort(list.begin(), list.end(),
              [](const Session& a, const Session& b) { return a.start < b.start; });
  }
  if (stats) *stats = local;
  return out;
}

std::optional<ingest::Role> UserDeviceMap::role_of(const std::string& user) const {
  const auto it = user_devices.find(user);
  if (it == user_devices.end() || it->second.empty()) return std::nullopt;
  const auto role = device_role.find(*it->second.begin());
  if (role == device_role.end()) return std::nullopt;
  return role->second;
}

UserDeviceMap map_users_devices(const std::vector<PresenceEvent>& events) {
  UserDeviceMap m;
  for (const auto& e : events) {
    if (e.kind != EventKind::Auth || !e.username) continue;
    const std::string& user = *e.username;
    auto [it, inserted] = m.device_user.try_emplace(e.device, user);
    if (!inserted && it->second != user) {
      ++m.conflicts;
      auto& previous = m.user_devices[it->second];
      previous.erase(e.device);
      if (previous.empty()) m.user_devices.erase(it->second);
      it->second = user;
    }
    m.user_devices[user].insert(e.device);
    if (e.role) m.device_role[e.device] = *e.role;
  }
  return m;
}

std::optional<std::string> select_primary_device(const std::set<std::string>& devices,
                                                 const DeviceSessions& sessions) {
  std::optional<std::string> best;
  std::int64_t best_sum = 0;
  std::int64_t best_days = 1;
  for (const auto& device : devices) {  // ascending, so strict > keeps the smaller id
    const auto it = sessions.find(device);
    if (it == sessions.end()) continue;
    std::set<std::string> all_aps;
    std::map<std::int64_t, std::set<std::string>> per_day;
    for (const auto& s : it->second) {
      all_aps.insert(s.ap);
      for (auto d = day_index(s.start); d <= day_index(s.end - 1); ++d) per_day[d].insert(s.ap);
    }
    if (all_aps.size() <= 1) continue;
    std::int64_t sum = 0;
    for (const auto& [day, aps] : per_day) sum += static_cast<std::int64_t>(aps.size());
    const auto days = static_cast<std::int64_t>(per_day.size());
    if (!best || sum * best_days > best_sum * days) {
      best = device;
      best_sum = sum;
      best_days = days;
    }
  }
  return best;
}

Context annotate_context(Timestamp ts) {
  const auto sod = second_of_day(ts);
  return (sod >= 8 * 3600 + 30 * 60 && sod < 16 * 3600 + 30 * 60) ? Context::Work
                                                                   : Context::Home;
}

DwellResult build_dwell_visits(const std::string& user, const std::vector<Session>& sessions,
                               const ingest::ApMap& ap_map) {
  DwellResult r;
  for (const auto& s : sessions) {
    const auto it = ap_map.find(s.ap);
    if (it == ap_map.end()) {
      ++r.unknown_ap;
      continue;
    }
    const std::string location = it->second.location();
    if (!r.stays.empty() && r.stays.back().location == location &&
        s.start - r.stays.back().end <= kCoalesceGap) {
      r.stays.back().end = std::max(r.stays.back().end, s.end);
      continue;
    }
    r.stays.push_back(Stay{location, it->second.building_name, it->second.building_type,
                           s.start, s.end});
  }
  for (const auto& stay : r.stays) {
    if (!stay.is_dwell()) continue;
    r.visits.push_back(DwellVisit{user, stay.start, stay.end, stay.location, stay.building,
                                  stay.space_type, annotate_context(stay.start)});
  }
  return r;
}

MultiScaleTrajectory bin_trajectory(const std::string& user, std::int64_t day,
                                    const std::vector<Stay>& stays, int granularity) {
  const std::size_t n = bins_per_day(granularity);
  const Timestamp width = static_cast<Timestamp>(granularity) * 60;
  MultiScaleTrajectory t;
  t.user = user;
  t.day = day;
  t.granularity = granularity;
  for (auto& seq : t.tokens) seq.assign(n, std::string(kOffToken));

  struct Candidate {
    const Stay* stay;
    Timestamp overlap;
    Timestamp first;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    const Timestamp b0 = day * kSecondsPerDay + static_cast<Timestamp>(i) * width;
    const Timestamp b1 = b0 + width;
    candidates.clear();
    for (const auto& stay : stays) {
      const Timestamp lo = std::max(stay.start, b0);
      const Timestamp hi = std::min(stay.end, b1);
      if (hi <= lo) continue;
      auto c = std::find_if(candidates.begin(), candidates.end(), [&](const Candidate& c) {
        return c.stay->location == stay.location;
      });
      if (c == candidates.end()) {
        candidates.push_back(Candidate{&stay, hi - lo, lo});
      } else {
        c->overlap += hi - lo;
        c->first = std::min(c->first, lo);
      }
    }
    if (candidates.empty()) continue;
    const auto best = std::min_element(
        candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
          return a.overlap != b.overlap ? a.overlap > b.overlap : a.first < b.first;
        });
    t.tokens[0][i] = to_string(annotate_context(b0));
    t.tokens[1][i] = ingest::to_string(best->stay->space_type);
    t.tokens[2][i] = best->stay->building;
    t.tokens[3][i] = best->stay->location;
  }
  return t;
}

BuildOutput build_trajectories(const std::vector<PresenceEvent>& events,
                               const ingest::ApMap& ap_map, const BuildConfig& config) {
  bins_per_day(config.granularity);  // validates
  BuildOutput out;
  const DeviceSessions sessions = resolve_sessions(events, config.sessions, &out.stats.sessions);
  const UserDeviceMap users = map_users_devices(events);
  out.stats.user_conflicts = users.conflicts;
  for (const auto& [device, list] : sessions) {
    if (!users.device_user.contains(device)) ++out.stats.unmapped_devices;
  }

  std::map<std::string, std::vector<Stay>> stays;
  Timestamp first = 0;
  Timestamp last = 0;
  bool any = false;
  for (const auto& [user, devices] : users.user_devices) {
    const auto primary = select_primary_device(devices, sessions);
    if (!primary) {
      ++out.stats.excluded_users;
      continue;
    }
    DwellResult dwell = build_dwell_visits(user, sessions.at(*primary), ap_map);
    out.stats.unknown_ap += dwell.unknown_ap;
    if (dwell.stays.empty()) {
      ++out.stats.excluded_users;
      continue;
    }
    if (const auto role = users.device_role.find(*primary); role != users.device_role.end()) {
      out.roles[user] = role->second;
    }
    const Timestamp lo = dwell.stays.front().start;
    Timestamp hi = 0;
    for (const auto& s : dwell.stays) hi = std::max(hi, s.end);
    first = any ? std::min(first, lo) : lo;
    last = any ? std::max(last, hi) : hi;
    any = true;
    out.stats.dwell_visits += dwell.visits.size();
    out.visits[user] = std::move(dwell.visits);
    stays[user] = std::move(dwell.stays);
  }
  out.stats.users = stays.size();
  if (!any) return out;

  const std::int64_t first_day = day_index(first);
  const std::int64_t last_day = day_index(last - 1);
  std::vector<Stay> day_stays;
  for (const auto& [user, list] : stays) {
    for (std::int64_t d = first_day; d <= last_day; ++d) {
      const Timestamp d0 = d * kSecondsPerDay;
      const Timestamp d1 = d0 + kSecondsPerDay;
      day_stays.clear();
      for (const auto& s : list) {
        if (s.end > d0 && s.start < d1) day_stays.push_back(s);
      }
      out.trajectories.push_back(bin_trajectory(user, d, day_stays, config.granularity));
    }
  }
  out.stats.trajectories = out.trajectories.size();
  return out;
}

}  // namespace mobmod::trajectory
