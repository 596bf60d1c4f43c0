#include "mobmod/sim/campus.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "mobmod/common/hash.hpp"
#include "mobmod/common/random.hpp"

namespace mobmod::sim {

Campus generate_campus(const CampusConfig& config) {
  validate(config);
  Campus campus;
  campus.config = config;
  for (std::size_t bi = 0; bi < config.buildings.size(); ++bi) {
    const auto& b = config.buildings[bi];
    char controller[32];
    std::snprintf(controller, sizeof controller, "wlc-%02zu",
                  bi / static_cast<std::size_t>(config.buildings_per_controller) + 1);
    for (int floor = 1; floor <= b.floors; ++floor) {
      for (int z = 1; z <= b.zones_per_floor; ++z) {
        char zone_name[16];
        std::snprintf(zone_name, sizeof zone_name, "Z%02d", z);
        ingest::ApRecord rec{b.name + "-" + std::to_string(floor) + "-" + zone_name, b.name,
                             b.type, floor, zone_name};
        const std::size_t idx = campus.zones.size();
        campus.zones.push_back(Zone{rec.ap_id, rec.location(), b.name, b.type, controller});
        campus.zones_by_type[b.type].push_back(idx);
        campus.zones_by_building[b.name].push_back(idx);
        campus.ap_map.emplace(rec.ap_id, std::move(rec));
      }
    }
  }
  return campus;
}

namespace {

constexpr std::uint64_t kAgentStream = 0xa6e27;
constexpr std::uint64_t kDayStream = 0xd4e1;

Rng keyed_rng(std::uint64_t seed, std::string_view key, std::uint64_t owner) {
  return Rng(mix_seed(mix_seed(seed, fnv1a64(key)), owner));
}

std::string random_mac(Rng& rng) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%012llx",
                static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
  return buf;
}

struct Segment {
  int start;  // minutes from midnight
  int end;
  std::optional<std::size_t> zone;
  bool detours;
};

class Scheduler {
 public:
  Scheduler(const Campus& campus, const ScheduleGrammar& grammar, std::uint64_t seed,
            const std::vector<Agent>& agents)
      : campus_(campus), grammar_(grammar), seed_(seed), agents_(agents) {}

  std::vector<Segment> day(std::size_t agent, std::int64_t day_number, Rng& rng) const {
    const Agent& a = agents_[agent];
    const RoleTemplates& templates =
        a.role == ingest::Role::Student ? grammar_.student : grammar_.faculty;
    const bool weekend = weekday(day_number) >= 5;
    const DayTemplate& t = weekend ? templates.weekend : templates.weekday;
    const std::string prefix =
        std::string(a.role == ingest::Role::Student ? "student/" : "faculty/") +
        (weekend ? "weekend/" : "weekday/");

    std::vector<Segment> out;
    std::map<std::string, std::optional<std::size_t>> by_label;
    int cursor = 0;
    auto run_slot = [&](const SlotSpec& s, const std::string& path, int end) {
      if (end <= cursor) return;
      const std::string key = s.label.empty() ? path : s.label;
      const auto zone = choose(s, key, agent, by_label, rng);
      if (!s.label.empty()) by_label[s.label] = zone;
      out.push_back(Segment{cursor, end, zone, s.detours});
      cursor = end;
    };
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string path = prefix + std::to_string(i);
      if (const auto* s = std::get_if<SlotSpec>(&t[i])) {
        const int end = s->until ? *s->until : std::min(1440, cursor + draw_minutes(*s, rng));
        run_slot(*s, path, end);
      } else {
        const auto& block = std::get<RepeatBlock>(t[i]);
        while (cursor < block.until) {
          for (std::size_t k = 0; k < block.slots.size() && cursor < block.until; ++k) {
            const auto& s = block.slots[k];
            run_slot(s, path + "." + std::to_string(k),
                     std::min(block.until, cursor + draw_minutes(s, rng)));
          }
        }
      }
    }
    if (cursor < 1440) out.push_back(Segment{cursor, 1440, std::nullopt, false});
    jitter(out, rng);
    return out;
  }

 private:
  static int draw_minutes(const SlotSpec& s, Rng& rng) {
    return s.minutes[uniform_index(rng, s.minutes.size())];
  }

  std::vector<std::size_t> pool(const std::vector<ingest::BuildingType>& types) const {
    std::vector<std::size_t> out;
    for (auto type : types) {
      const auto it = campus_.zones_by_type.find(type);
      if (it != campus_.zones_by_type.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
  }

  // Owner id and its ordinal among owners of the same role, for unique draws.
  std::pair<std::uint64_t, std::size_t> owner(const SlotSpec& s, std::size_t agent) const {
    const Agent& a = agents_[agent];
    const std::uint64_t role_bit = a.role == ingest::Role::Student ? 0 : (1ULL << 40);
    switch (s.scope) {
      case Scope::Agent: {
        std::size_t ordinal = 0;
        for (std::size_t i = 0; i < agent; ++i) ordinal += agents_[i].role == a.role;
        return {role_bit | agent, ordinal};
      }
      case Scope::Cohort:
        return {role_bit | (1ULL << 32) | static_cast<std::uint64_t>(a.cohort),
                static_cast<std::size_t>(a.cohort)};
      case Scope::Global:
        break;
    }
    return {1ULL << 48, 0};
  }

  // Primary zone plus alternatives for a keyed choice.
  std::pair<std::size_t, std::vector<std::size_t>> assignment(const SlotSpec& s,
                                                              const std::string& key,
                                                              std::size_t agent) const {
    const auto candidates = pool(s.types);
    const auto [owner_id, ordinal] = owner(s, agent);
    std::size_t primary;
    if (s.unique) {
      std::vector<std::size_t> perm = candidates;
      Rng shuffle_rng = keyed_rng(seed_, key + "#unique", owner_id >> 32);
      std::shuffle(perm.begin(), perm.end(), shuffle_rng);
      primary = perm[ordinal % perm.size()];
    } else {
      Rng r = keyed_rng(seed_, key, owner_id);
      primary = candidates[uniform_index(r, candidates.size())];
    }
    std::vector<std::size_t> rest;
    for (auto z : candidates) {
      if (z != primary) rest.push_back(z);
    }
    Rng r = keyed_rng(seed_, key + "#alt", owner_id);
    std::shuffle(rest.begin(), rest.end(), r);
    rest.resize(std::min<std::size_t>(rest.size(), static_cast<std::size_t>(s.alternatives)));
    return {primary, rest};
  }

  std::optional<std::size_t> choose(const SlotSpec& s, const std::string& key, std::size_t agent,
                                    const std::map<std::string, std::optional<std::size_t>>& labels,
                                    Rng& rng) const {
    switch (s.rule) {
      case SlotRule::Off:
        return std::nullopt;
      case SlotRule::Random: {
        const auto candidates = pool(s.types);
        return candidates[uniform_index(rng, candidates.size())];
      }
      case SlotRule::Fixed:
        return substitute(s, assignment(s, key, agent), rng);
      case SlotRule::Derived: {
        const auto it = labels.find(s.ref);
        if (it == labels.end() || !it->second) return std::nullopt;
        const Zone& source = campus_.zones[*it->second];
        std::string value = source.ap_id;
        if (s.key == DeriveKey::Type) value = std::string(ingest::to_string(source.type));
        if (s.key == DeriveKey::Building) value = source.building;
        return substitute(s, assignment(s, key + "|" + value, agent), rng);
      }
    }
    return std::nullopt;
  }

  std::size_t substitute(const SlotSpec& s,
                         const std::pair<std::size_t, std::vector<std::size_t>>& choice,
                         Rng& rng) const {
    const double eps = s.epsilon.value_or(grammar_.epsilon);
    const bool swap = bernoulli(rng, eps);
    if (!swap || choice.second.empty()) return choice.first;
    return choice.second[uniform_index(rng, choice.second.size())];
  }

  void jitter(std::vector<Segment>& segs, Rng& rng) const {
    const int j = grammar_.jitter_minutes;
    if (j == 0) return;
    for (std::size_t i = 1; i < segs.size(); ++i) {
      const int shift = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(2 * j + 1))) - j;
      if (!segs[i - 1].zone && !segs[i].zone) continue;
      const int b = std::clamp(segs[i].start + shift, segs[i - 1].start + 1, segs[i].end - 1);
      segs[i - 1].end = b;
      segs[i].start = b;
    }
  }

  const Campus& campus_;
  const ScheduleGrammar& grammar_;
  std::uint64_t seed_;
  const std::vector<Agent>& agents_;
};

std::size_t detour_zone(const Campus& campus, std::size_t current, Rng& rng) {
  const auto& same = campus.zones_by_building.at(campus.zones[current].building);
  if (same.size() > 1) {
    std::size_t z;
    do {
      z = same[uniform_index(rng, same.size())];
    } while (z == current);
    return z;
  }
  std::size_t z;
  do {
    z = uniform_index(rng, campus.zones.size());
  } while (z == current);
  return z;
}

void append_merged(std::vector<SimVisit>& visits, SimVisit v) {
  if (v.end <= v.start) return;
  if (!visits.empty() && visits.back().zone == v.zone && visits.back().end == v.start) {
    visits.back().end = v.end;
  } else {
    visits.push_back(v);
  }
}

}  // namespace

Population generate_days(const Campus& campus, const ScheduleGrammar& grammar, int days,
                         std::uint64_t seed) {
  Population pop;
  pop.first_day = campus.config.start_day;
  pop.days = days;
  std::set<std::string> macs;
  auto unique_mac = [&macs](Rng& rng) {
    std::string mac;
    do {
      mac = random_mac(rng);
    } while (!macs.insert(mac).second);
    return mac;
  };
  const auto& cfg = campus.config;
  for (int i = 0; i < cfg.students + cfg.faculty; ++i) {
    Agent a;
    const bool student = i < cfg.students;
    const int ordinal = student ? i : i - cfg.students;
    char name[16];
    std::snprintf(name, sizeof name, "%c%04d", student ? 's' : 'f', ordinal + 1);
    a.user = name;
    a.role = student ? ingest::Role::Student : ingest::Role::FacultyStaff;
    a.cohort = ordinal % (student ? cfg.student_cohorts : cfg.faculty_cohorts);
    Rng rng(mix_seed(seed ^ kAgentStream, static_cast<std::uint64_t>(i)));
    a.phone = unique_mac(rng);
    if (bernoulli(rng, cfg.devices.laptop)) a.laptop = unique_mac(rng);
    if (bernoulli(rng, cfg.devices.stationary)) a.stationary = unique_mac(rng);
    pop.agents.push_back(std::move(a));
  }

  const Scheduler scheduler(campus, grammar, seed, pop.agents);
  const auto& det = grammar.detours;
  pop.visits.resize(pop.agents.size());
  for (std::size_t ai = 0; ai < pop.agents.size(); ++ai) {
    auto& visits = pop.visits[ai];
    for (int d = 0; d < days; ++d) {
      const std::int64_t day = pop.first_day + d;
      Rng rng(mix_seed(seed ^ kDayStream, ai * 1000003ULL + static_cast<std::uint64_t>(d)));
      const Timestamp base = day * kSecondsPerDay;
      for (const auto& seg : scheduler.day(ai, day, rng)) {
        if (!seg.zone) continue;
        const std::size_t zone = *seg.zone;
        int cursor = seg.start;
        if (seg.detours && seg.end - seg.start >= 60) {
          for (int chunk = seg.start; chunk + 60 <= seg.end; chunk += 60) {
            const double u = uniform01(rng);
            int len = 0;
            if (u < det.medium_prob) {
              len = det.medium_min + static_cast<int>(uniform_index(
                                         rng, static_cast<std::size_t>(det.medium_max - det.medium_min + 1)));
            } else if (u < det.medium_prob + det.short_prob) {
              len = det.short_min + static_cast<int>(uniform_index(
                                        rng, static_cast<std::size_t>(det.short_max - det.short_min + 1)));
            }
            if (len == 0) continue;
            const int offset = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(61 - len)));
            const int ds = chunk + offset;
            const std::size_t dz = detour_zone(campus, zone, rng);
            append_merged(visits, SimVisit{zone, base + cursor * 60LL, base + ds * 60LL});
            append_merged(visits, SimVisit{dz, base + ds * 60LL, base + (ds + len) * 60LL});
            cursor = ds + len;
          }
        }
        append_merged(visits, SimVisit{zone, base + cursor * 60LL, base + seg.end * 60LL});
      }
    }
  }
  return pop;
}

}  // namespace mobmod::sim
