#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "mobmod/sim/campus.hpp"

namespace mobmod::sim {

namespace {

using nlohmann::json;

int clock_field(const json& v, const std::string& what) {
  const auto m = parse_clock_minutes(v.get<std::string>());
  if (!m) throw InvalidConfig(what + ": bad clock time " + v.dump());
  return *m;
}

std::vector<ingest::BuildingType> types_field(const json& j) {
  std::vector<ingest::BuildingType> out;
  if (!j.contains("types")) return out;
  for (const auto& t : j.at("types")) {
    const auto type = ingest::parse_building_type(t.get<std::string>());
    if (!type) throw InvalidConfig("unknown building type " + t.dump());
    out.push_back(*type);
  }
  return out;
}

SlotSpec slot_from_json(const json& j) {
  SlotSpec s;
  s.label = j.value("label", "");
  if (j.contains("until")) s.until = clock_field(j.at("until"), "slot until");
  if (j.contains("minutes")) {
    const auto& m = j.at("minutes");
    if (m.is_array()) {
      s.minutes = m.get<std::vector<int>>();
    } else {
      s.minutes = {m.get<int>()};
    }
  }
  const std::string rule = j.value("rule", "off");
  if (rule == "off") {
    s.rule = SlotRule::Off;
  } else if (rule == "fixed") {
    s.rule = SlotRule::Fixed;
  } else if (rule == "random") {
    s.rule = SlotRule::Random;
  } else if (rule == "derived") {
    s.rule = SlotRule::Derived;
  } else {
    throw InvalidConfig("unknown slot rule '" + rule + "'");
  }
  s.types = types_field(j);
  const std::string scope = j.value("scope", "agent");
  if (scope == "agent") {
    s.scope = Scope::Agent;
  } else if (scope == "cohort") {
    s.scope = Scope::Cohort;
  } else if (scope == "global") {
    s.scope = Scope::Global;
  } else {
    throw InvalidConfig("unknown slot scope '" + scope + "'");
  }
  s.unique = j.value("unique", false);
  s.alternatives = j.value("alternatives", 2);
  if (j.contains("epsilon")) s.epsilon = j.at("epsilon").get<double>();
  s.ref = j.value("ref", "");
  const std::string key = j.value("key", "type");
  if (key == "type") {
    s.key = DeriveKey::Type;
  } else if (key == "building") {
    s.key = DeriveKey::Building;
  } else if (key == "zone") {
    s.key = DeriveKey::Zone;
  } else {
    throw InvalidConfig("unknown derive key '" + key + "'");
  }
  s.detours = j.value("detours", true);
  return s;
}

DayTemplate template_from_json(const json& j) {
  DayTemplate t;
  for (const auto& item : j) {
    if (item.contains("repeat")) {
      RepeatBlock block;
      for (const auto& s : item.at("repeat")) block.slots.push_back(slot_from_json(s));
      block.until = clock_field(item.at("until"), "repeat until");
      t.emplace_back(std::move(block));
    } else {
      t.emplace_back(slot_from_json(item));
    }
  }
  return t;
}

// Built-in weekly structure: cohort-shared classes, dining and study on
// weekdays, looser weekends. Requires Dorm, Educational, Dining, Library,
// Recreation and Admin buildings.
RoleTemplates default_student_templates() {
  const json weekday = json::parse(R"([
    {"until": "08:00", "rule": "fixed", "types": ["Dorm"], "scope": "cohort", "label": "home",
     "epsilon": 0, "detours": false},
    {"until": "10:00", "rule": "fixed", "types": ["Educational"], "scope": "cohort"},
    {"until": "12:00", "rule": "fixed", "types": ["Educational"], "scope": "cohort"},
    {"until": "13:00", "rule": "fixed", "types": ["Dining"], "scope": "cohort"},
    {"until": "15:00", "rule": "fixed", "types": ["Educational"], "scope": "cohort"},
    {"until": "17:00", "rule": "fixed", "types": ["Library"], "scope": "cohort"},
    {"until": "18:00", "rule": "fixed", "types": ["Dining"], "scope": "cohort"},
    {"until": "20:00", "rule": "fixed", "types": ["Recreation"], "scope": "cohort"},
    {"until": "24:00", "rule": "fixed", "types": ["Dorm"], "scope": "cohort", "label": "home",
     "epsilon": 0, "detours": false}
  ])");
  const json weekend = json::parse(R"([
    {"until": "10:00", "rule": "fixed", "types": ["Dorm"], "scope": "cohort", "label": "home",
     "epsilon": 0, "detours": false},
    {"until": "12:00", "rule": "random", "types": ["Dining"]},
    {"until": "16:00", "rule": "random", "types": ["Library", "Recreation"]},
    {"until": "24:00", "rule": "fixed", "types": ["Dorm"], "scope": "cohort", "label": "home",
     "epsilon": 0, "detours": false}
  ])");
  return {template_from_json(weekday), template_from_json(weekend)};
}

RoleTemplates default_faculty_templates() {
  const json weekday = json::parse(R"([
    {"until": "08:00", "rule": "off"},
    {"until": "12:00", "rule": "fixed", "types": ["Admin"], "scope": "agent", "label": "office"},
    {"until": "13:00", "rule": "fixed", "types": ["Dining"], "scope": "cohort"},
    {"until": "17:00", "rule": "fixed", "types": ["Admin"], "scope": "agent", "label": "office"},
    {"until": "24:00", "rule": "off"}
  ])");
  const json weekend = json::parse(R"([{"until": "24:00", "rule": "off"}])");
  return {template_from_json(weekday), template_from_json(weekend)};
}

void validate_template(const DayTemplate& t, const std::set<ingest::BuildingType>& present,
                       const std::string& name) {
  if (t.empty()) throw InvalidConfig(name + ": empty template");
  std::set<std::string> labels;
  int last_until = 0;
  auto check_slot = [&](const SlotSpec& s, bool in_repeat) {
    if (s.until) {
      if (in_repeat) throw InvalidConfig(name + ": slots inside repeat use minutes");
      if (*s.until <= last_until || *s.until > 1440) {
        throw InvalidConfig(name + ": slot ends are not increasing");
      }
      last_until = *s.until;
    } else {
      if (s.minutes.empty()) throw InvalidConfig(name + ": slot needs until or minutes");
      for (int m : s.minutes) {
        if (m < 1) throw InvalidConfig(name + ": slot minutes must be positive");
      }
    }
    if (s.rule != SlotRule::Off) {
      if (s.types.empty()) throw InvalidConfig(name + ": slot without types");
      for (auto type : s.types) {
        if (!present.contains(type)) {
          throw InvalidConfig(name + ": no building of type " +
                              std::string(ingest::to_string(type)));
        }
      }
    }
    if (s.rule == SlotRule::Derived && !labels.contains(s.ref)) {
      throw InvalidConfig(name + ": derived slot refers to unknown label '" + s.ref + "'");
    }
    if (s.alternatives < 0) throw InvalidConfig(name + ": negative alternatives");
    if (s.epsilon && (*s.epsilon < 0 || *s.epsilon > 1)) {
      throw InvalidConfig(name + ": slot epsilon outside [0,1]");
    }
    if (!s.label.empty()) labels.insert(s.label);
  };
  for (const auto& item : t) {
    if (const auto* slot = std::get_if<SlotSpec>(&item)) {
      check_slot(*slot, false);
    } else {
      const auto& block = std::get<RepeatBlock>(item);
      if (block.slots.empty()) throw InvalidConfig(name + ": empty repeat block");
      if (block.until <= last_until || block.until > 1440) {
        throw InvalidConfig(name + ": repeat end is not increasing");
      }
      for (const auto& s : block.slots) check_slot(s, true);
      last_until = block.until;
    }
  }
  if (last_until != 1440) throw InvalidConfig(name + ": template does not reach 24:00");
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

CampusConfig campus_config_from_json(const json& j) {
  CampusConfig c;
  try {
    c.seed = j.value("seed", std::uint64_t{1});
    const auto start = parse_date(j.value("start_date", std::string("2019-09-05")));
    if (!start) throw InvalidConfig("bad start_date");
    c.start_day = *start;
    for (const auto& b : j.at("buildings")) {
      BuildingSpec spec;
      spec.name = b.at("name").get<std::string>();
      const auto type = ingest::parse_building_type(b.at("type").get<std::string>());
      if (!type) throw InvalidConfig("unknown building type " + b.at("type").dump());
      spec.type = *type;
      spec.floors = b.value("floors", 1);
      spec.zones_per_floor = b.value("zones_per_floor", 1);
      c.buildings.push_back(spec);
    }
    if (j.contains("population")) {
      c.students = j["population"].value("students", 0);
      c.faculty = j["population"].value("faculty", 0);
    }
    if (j.contains("cohorts")) {
      c.student_cohorts = j["cohorts"].value("students", 1);
      c.faculty_cohorts = j["cohorts"].value("faculty", 1);
    }
    if (j.contains("devices")) {
      c.devices.laptop = j["devices"].value("laptop", 0.0);
      c.devices.stationary = j["devices"].value("stationary", 0.0);
    }
    c.auth = j.value("auth", true);
    c.refresh_minutes = j.value("refresh_minutes", 180);
    c.buildings_per_controller = j.value("buildings_per_controller", 1);

    ScheduleGrammar& g = c.grammar;
    const json schedule = j.value("schedule", json::object());
    g.epsilon = schedule.value("epsilon", 0.1);
    g.jitter_minutes = schedule.value("jitter_minutes", 0);
    if (schedule.contains("detours")) {
      const auto& d = schedule["detours"];
      g.detours.short_prob = d.value("short", 0.0);
      g.detours.medium_prob = d.value("medium", 0.0);
      if (d.contains("short_range")) {
        g.detours.short_min = d["short_range"].at(0);
        g.detours.short_max = d["short_range"].at(1);
      }
      if (d.contains("medium_range")) {
        g.detours.medium_min = d["medium_range"].at(0);
        g.detours.medium_max = d["medium_range"].at(1);
      }
    }
    const json templates = schedule.value("templates", json::object());
    if (templates.contains("student")) {
      g.student = {template_from_json(templates["student"].at("weekday")),
                   template_from_json(templates["student"].at("weekend"))};
    } else {
      g.student = default_student_templates();
    }
    if (templates.contains("faculty")) {
      g.faculty = {template_from_json(templates["faculty"].at("weekday")),
                   template_from_json(templates["faculty"].at("weekend"))};
    } else {
      g.faculty = default_faculty_templates();
    }
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("campus config: ") + e.what());
  }
  validate(c);
  return c;
}

CampusConfig load_campus_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open campus config " + path.string());
  try {
    return campus_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InvalidConfig("campus config " + path.string() + ": " + e.what());
  }
}

void validate(const CampusConfig& c) {
  if (c.buildings.empty()) throw InvalidConfig("campus has no buildings");
  std::set<std::string> names;
  std::set<ingest::BuildingType> present;
  for (const auto& b : c.buildings) {
    if (b.name.empty() || !std::all_of(b.name.begin(), b.name.end(), [](char ch) {
          return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
        })) {
      throw InvalidConfig("building name must be alphanumeric: '" + b.name + "'");
    }
    if (!names.insert(b.name).second) throw InvalidConfig("duplicate building " + b.name);
    if (b.floors < 1 || b.zones_per_floor < 1) {
      throw InvalidConfig("building " + b.name + " has no zones");
    }
    present.insert(b.type);
  }
  if (present.size() < 2) throw InvalidConfig("campus needs at least two building types");
  if (c.students < 0 || c.faculty < 0) throw InvalidConfig("negative population");
  if (c.student_cohorts < 1 || c.faculty_cohorts < 1) throw InvalidConfig("cohorts must be >= 1");
  if (!probability(c.devices.laptop) || !probability(c.devices.stationary)) {
    throw InvalidConfig("device probabilities outside [0,1]");
  }
  if (c.refresh_minutes < 1) throw InvalidConfig("refresh_minutes must be positive");
  if (c.buildings_per_controller < 1) throw InvalidConfig("buildings_per_controller must be >= 1");
  const auto& g = c.grammar;
  if (!probability(g.epsilon)) throw InvalidConfig("epsilon outside [0,1]");
  if (g.jitter_minutes < 0) throw InvalidConfig("negative jitter");
  const auto& d = g.detours;
  if (!probability(d.short_prob) || !probability(d.medium_prob) ||
      d.short_prob + d.medium_prob > 1.0) {
    throw InvalidConfig("detour probabilities outside [0,1]");
  }
  if (d.short_min < 1 || d.short_min > d.short_max || d.medium_min < 1 ||
      d.medium_min > d.medium_max || d.medium_max > 60 || d.short_max > 60) {
    throw InvalidConfig("bad detour duration range");
  }
  if (c.students > 0) {
    validate_template(g.student.weekday, present, "student weekday");
    validate_template(g.student.weekend, present, "student weekend");
  }
  if (c.faculty > 0) {
    validate_template(g.faculty.weekday, present, "faculty weekday");
    validate_template(g.faculty.weekend, present, "faculty weekend");
  }
}

}  // namespace mobmod::sim
