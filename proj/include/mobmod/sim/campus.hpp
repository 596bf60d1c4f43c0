#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobmod/common/time.hpp"
#include "mobmod/ingest/ap_map.hpp"
#include "mobmod/ingest/presence_event.hpp"

namespace mobmod::sim {

class InvalidConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Schedule grammar
//
// A day template is a list of items that tile [00:00, 24:00). Each slot ends
// either at a clock time (`until`) or after a duration drawn from `minutes`;
// a repeat block cycles through its slots until its own `until`.

enum class SlotRule { Off, Fixed, Random, Derived };
enum class Scope { Agent, Cohort, Global };
enum class DeriveKey { Type, Building, Zone };

struct SlotSpec {
  std::string label;
  std::optional<int> until;  // minute of day, 1..1440
  std::vector<int> minutes;  // duration choices when `until` is unset
  SlotRule rule = SlotRule::Off;
  std::vector<ingest::BuildingType> types;  // candidate zones
  Scope scope = Scope::Agent;
  bool unique = false;  // Fixed: assign distinct zones across owners while the pool lasts
  int alternatives = 2;
  std::optional<double> epsilon;  // overrides the grammar-wide value
  std::string ref;                // Derived: label of an earlier slot
  DeriveKey key = DeriveKey::Type;
  bool detours = true;
};

struct RepeatBlock {
  std::vector<SlotSpec> slots;
  int until = 1440;
};

using TemplateItem = std::variant<SlotSpec, RepeatBlock>;
using DayTemplate = std::vector<TemplateItem>;

struct RoleTemplates {
  DayTemplate weekday;
  DayTemplate weekend;
};

struct DetourConfig {
  double short_prob = 0.0;   // per on-network hour
  double medium_prob = 0.0;  // per on-network hour
  int short_min = 8, short_max = 14;
  int medium_min = 18, medium_max = 28;
};

struct ScheduleGrammar {
  double epsilon = 0.1;
  int jitter_minutes = 0;
  DetourConfig detours;
  RoleTemplates student;
  RoleTemplates faculty;
};

struct BuildingSpec {
  std::string name;
  ingest::BuildingType type = ingest::BuildingType::Other;
  int floors = 1;
  int zones_per_floor = 1;
};

struct DeviceConfig {
  double laptop = 0.0;      // probability an agent also carries a laptop
  double stationary = 0.0;  // probability of an always-on device at home
};

struct CampusConfig {
  std::uint64_t seed = 1;
  std::int64_t start_day = 0;  // days since epoch
  std::vector<BuildingSpec> buildings;
  int students = 0;
  int faculty = 0;
  int student_cohorts = 1;
  int faculty_cohorts = 1;
  DeviceConfig devices;
  bool auth = true;
  int refresh_minutes = 180;
  int buildings_per_controller = 1;
  ScheduleGrammar grammar;
};

CampusConfig campus_config_from_json(const nlohmann::json& j);
CampusConfig load_campus_config(const std::filesystem::path& path);
void validate(const CampusConfig& config);

// ---------------------------------------------------------------------------
// Topology

struct Zone {
  std::string ap_id;
  std::string location;
  std::string building;
  ingest::BuildingType type = ingest::BuildingType::Other;
  std::string controller;
};

struct Campus {
  CampusConfig config;
  std::vector<Zone> zones;  // one AP per zone, in building/floor/zone order
  std::map<ingest::BuildingType, std::vector<std::size_t>> zones_by_type;
  std::map<std::string, std::vector<std::size_t>> zones_by_building;
  ingest::ApMap ap_map;
};

/// Deterministic in the config. Throws InvalidConfig.
Campus generate_campus(const CampusConfig& config);

// ---------------------------------------------------------------------------
// Agents and ground truth

struct Agent {
  std::string user;
  ingest::Role role = ingest::Role::Student;
  int cohort = 0;
  std::string phone;  // 12 lowercase hex digits
  std::optional<std::string> laptop;
  std::optional<std::string> stationary;
};

struct SimVisit {
  std::size_t zone = 0;
  Timestamp start = 0;
  Timestamp end = 0;
  bool operator==(const SimVisit&) const = default;
};

struct Population {
  std::vector<Agent> agents;
  std::vector<std::vector<SimVisit>> visits;  // per agent, time ordered, merged
  std::int64_t first_day = 0;
  int days = 0;
};

/// Agents from the config population and `days` days of visits from
/// start_day on. Consecutive visits to the same zone are merged, across
/// midnight too.
Population generate_days(const Campus& campus, const ScheduleGrammar& grammar, int days,
                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Syslog emission

struct NoiseConfig {
  double dup = 0.0;
  double drop_disassoc = 0.0;
  double reorder = 0.0;
};

/// "dup=0.05,drop=0.05,reorder=0.02"; missing keys are zero.
NoiseConfig parse_noise(std::string_view text);

struct SyslogFiles {
  std::map<std::string, std::vector<std::string>> lines;  // controller -> lines
};

/// One Assoc at the start and one Disassoc at the end of each visit, plus a
/// Reassoc refresh every refresh_minutes inside long visits and, when auth is
/// enabled, Auth/Deauth around each on-network period. Noise is applied per
/// controller file in the order drop, duplicate, swap.
SyslogFiles emit_syslog(const Campus& campus, const Population& population,
                        const NoiseConfig& noise, std::uint64_t seed);

std::string format_syslog_line(Timestamp ts, const std::string& controller, int event_id,
                               const std::string& body);

nlohmann::json ground_truth_json(const Campus& campus, const Agent& agent, const SimVisit& v);

/// Writes DIR/syslog/<controller>.log, DIR/ap_map.csv and DIR/ground_truth.jsonl.
void write_simulation(const std::filesystem::path& dir, const Campus& campus,
                      const Population& population, const SyslogFiles& files);

}  // namespace mobmod::sim
