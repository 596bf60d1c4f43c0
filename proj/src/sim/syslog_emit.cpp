#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mobmod/common/hash.hpp"
#include "mobmod/common/random.hpp"
#include "mobmod/ingest/syslog_parser.hpp"
#include "mobmod/sim/campus.hpp"

namespace mobmod::sim {

using ingest::EventKind;

NoiseConfig parse_noise(std::string_view text) {
  NoiseConfig n;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw InvalidConfig("noise: expected key=value");
    const std::string key(item.substr(0, eq));
    double value = 0;
    try {
      std::size_t used = 0;
      const std::string v(item.substr(eq + 1));
      value = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw InvalidConfig("noise: bad value for " + key);
    }
    if (value < 0 || value > 1) throw InvalidConfig("noise: " + key + " outside [0,1]");
    if (key == "dup") {
      n.dup = value;
    } else if (key == "drop") {
      n.drop_disassoc = value;
    } else if (key == "reorder") {
      n.reorder = value;
    } else {
      throw InvalidConfig("noise: unknown key " + key);
    }
  }
  return n;
}

std::string format_syslog_line(Timestamp ts, const std::string& controller, int event_id,
                               const std::string& body) {
  const CivilDate date = civil_from_days(day_index(ts));
  char head[64];
  std::snprintf(head, sizeof head, "%s %2d %s %s <%d> ",
                std::string(month_abbrev(date.month)).c_str(), date.day,
                format_clock(second_of_day(ts)).c_str(), controller.c_str(), event_id);
  return head + body;
}

namespace {

struct Line {
  Timestamp ts;
  EventKind kind;
  std::string text;
};

class Emitter {
 public:
  Emitter(const Campus& campus, const ingest::EventKindMap& kinds)
      : campus_(campus), kinds_(kinds) {}

  void device(const Agent& agent, const std::string& mac, const std::vector<SimVisit>& visits) {
    const auto refresh = static_cast<Timestamp>(campus_.config.refresh_minutes) * 60;
    for (std::size_t i = 0; i < visits.size(); ++i) {
      const SimVisit& v = visits[i];
      const Zone& z = campus_.zones[v.zone];
      const bool period_start = i == 0 || visits[i - 1].end != v.start;
      const bool period_end = i + 1 == visits.size() || visits[i + 1].start != v.end;
      if (period_start && campus_.config.auth) auth(agent, mac, z, v.start, EventKind::Auth);
      emit(z, v.start, EventKind::Assoc, "STA " + mac + " assoc to AP " + z.ap_id);
      for (Timestamp t = v.start + refresh; t < v.end; t += refresh) {
        emit(z, t, EventKind::Reassoc, "STA " + mac + " reassoc to AP " + z.ap_id);
      }
      emit(z, v.end, EventKind::Disassoc, "STA " + mac + " disassoc from AP " + z.ap_id);
      if (period_end && campus_.config.auth) auth(agent, mac, z, v.end, EventKind::Deauth);
    }
  }

  std::map<std::string, std::vector<Line>>& files() { return files_; }

 private:
  void auth(const Agent& agent, const std::string& mac, const Zone& z, Timestamp t,
            EventKind kind) {
    emit(z, t, kind,
         "user " + agent.user + " role " + std::string(ingest::to_string(agent.role)) + " " +
             (kind == EventKind::Auth ? "auth" : "deauth") + " STA " + mac);
  }

  void emit(const Zone& z, Timestamp t, EventKind kind, const std::string& body) {
    files_[z.controller].push_back(
        Line{t, kind, format_syslog_line(t, z.controller, kinds_.id_for(kind), body)});
  }

  const Campus& campus_;
  const ingest::EventKindMap& kinds_;
  std::map<std::string, std::vector<Line>> files_;
};

}  // namespace

SyslogFiles emit_syslog(const Campus& campus, const Population& population,
                        const NoiseConfig& noise, std::uint64_t seed) {
  const auto kinds = ingest::EventKindMap::defaults();
  Emitter emitter(campus, kinds);
  for (std::size_t ai = 0; ai < population.agents.size(); ++ai) {
    const Agent& agent = population.agents[ai];
    const auto& visits = population.visits[ai];
    emitter.device(agent, agent.phone, visits);
    if (agent.laptop) {
      // First visit starting between 08:00 and 12:00 each day.
      std::vector<SimVisit> laptop;
      std::int64_t last_day = -1;
      for (const auto& v : visits) {
        const auto sod = second_of_day(v.start);
        if (day_index(v.start) != last_day && sod >= 8 * 3600 && sod < 12 * 3600) {
          laptop.push_back(v);
          last_day = day_index(v.start);
        }
      }
      emitter.device(agent, *agent.laptop, laptop);
    }
    if (agent.stationary && !visits.empty()) {
      const Timestamp start = population.first_day * kSecondsPerDay;
      const Timestamp end = start + static_cast<Timestamp>(population.days) * kSecondsPerDay;
      emitter.device(agent, *agent.stationary, {SimVisit{visits.front().zone, start, end}});
    }
  }

  SyslogFiles out;
  for (auto& [controller, lines] : emitter.files()) {
    std::stable_sort(lines.begin(), lines.end(),
                     [](const Line& a, const Line& b) { return a.ts < b.ts; });
    Rng rng(mix_seed(seed, fnv1a64(controller)));
    std::vector<Line> noisy;
    noisy.reserve(lines.size());
    for (auto& line : lines) {
      if (line.kind == EventKind::Disassoc && bernoulli(rng, noise.drop_disassoc)) continue;
      const bool dup = bernoulli(rng, noise.dup);
      noisy.push_back(line);
      if (dup) noisy.push_back(line);
    }
    for (std::size_t i = 0; i + 1 < noisy.size();) {
      if (bernoulli(rng, noise.reorder)) {
        std::swap(noisy[i], noisy[i + 1]);
        i += 2;
      } else {
        i += 1;
      }
    }
    auto& text = out.lines[controller];
    text.reserve(noisy.size());
    for (auto& line : noisy) text.push_back(std::move(line.text));
  }
  return out;
}

nlohmann::json ground_truth_json(const Campus& campus, const Agent& agent, const SimVisit& v) {
  const Zone& z = campus.zones[v.zone];
  return {{"user", agent.user},
          {"role", ingest::to_string(agent.role)},
          {"ap", z.ap_id},
          {"location", z.location},
          {"building", z.building},
          {"space_type", ingest::to_string(z.type)},
          {"start", v.start},
          {"end", v.end}};
}

void write_simulation(const std::filesystem::path& dir, const Campus& campus,
                      const Population& population, const SyslogFiles& files) {
  std::filesystem::create_directories(dir / "syslog");
  for (const auto& [controller, lines] : files.lines) {
    std::ofstream out(dir / "syslog" / (controller + ".log"));
    if (!out) throw std::runtime_error("cannot write syslog for " + controller);
    for (const auto& line : lines) out << line << '\n';
  }
  {
    std::ofstream out(dir / "ap_map.csv");
    if (!out) throw std::runtime_error("cannot write ap_map.csv");
    ingest::write_ap_map(campus.ap_map, out);
  }
  std::ofstream out(dir / "ground_truth.jsonl");
  if (!out) throw std::runtime_error("cannot write ground_truth.jsonl");
  for (std::size_t ai = 0; ai < population.agents.size(); ++ai) {
    for (const auto& v : population.visits[ai]) {
      out << ground_truth_json(campus, population.agents[ai], v).dump() << '\n';
    }
  }
}

}  // namespace mobmod::sim
