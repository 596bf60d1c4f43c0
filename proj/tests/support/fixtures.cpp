#include "support/fixtures.hpp"

#include <map>
#include <tuple>
#include <vector>

#include "mobmod/common/hash.hpp"
#include "mobmod/common/random.hpp"
#include "mobmod/ingest/ingest.hpp"
#include "mobmod/trajectory/builder.hpp"

namespace mobmod::testing {

sim::CampusConfig main_campus(int students, int faculty, double epsilon, bool detours,
                              std::uint64_t seed) {
  nlohmann::json j = nlohmann::json::parse(R"({
    "start_date": "2019-09-05",
    "buildings": [
      {"name": "DORM1", "type": "Dorm", "floors": 2, "zones_per_floor": 4},
      {"name": "DORM2", "type": "Dorm", "floors": 2, "zones_per_floor": 4},
      {"name": "EDU1", "type": "Educational", "floors": 3, "zones_per_floor": 4},
      {"name": "EDU2", "type": "Educational", "floors": 3, "zones_per_floor": 4},
      {"name": "EDU3", "type": "Educational", "floors": 2, "zones_per_floor": 4},
      {"name": "DIN1", "type": "Dining", "floors": 1, "zones_per_floor": 3},
      {"name": "DIN2", "type": "Dining", "floors": 1, "zones_per_floor": 3},
      {"name": "LIB1", "type": "Library", "floors": 2, "zones_per_floor": 4},
      {"name": "REC1", "type": "Recreation", "floors": 1, "zones_per_floor": 3},
      {"name": "ADM1", "type": "Admin", "floors": 2, "zones_per_floor": 4}
    ],
    "devices": {"laptop": 0.6, "stationary": 0.3},
    "refresh_minutes": 180,
    "buildings_per_controller": 3
  })");
  j["seed"] = seed;
  j["population"] = {{"students", students}, {"faculty", faculty}};
  j["cohorts"] = {{"students", std::max(1, students / 6)}, {"faculty", std::max(1, faculty / 3)}};
  j["schedule"] = {{"epsilon", epsilon}, {"jitter_minutes", detours ? 10 : 0}};
  if (detours) j["schedule"]["detours"] = {{"short", 0.15}, {"medium", 0.2}};
  return sim::campus_config_from_json(j);
}

Fidelity dwell_fidelity(const sim::Campus& campus, const sim::Population& population,
                        const sim::SyslogFiles& files, const std::string& salt) {
  std::vector<std::vector<std::string>> streams;
  for (const auto& [controller, lines] : files.lines) streams.push_back(lines);
  ingest::IngestOptions options;
  options.salt = salt;
  options.year = civil_from_days(population.first_day).year;
  const auto events = ingest::ingest_streams(streams, options);
  const auto built = trajectory::build_trajectories(events, campus.ap_map);

  using Key = std::tuple<std::string, Timestamp, Timestamp>;
  Fidelity f;
  for (std::size_t ai = 0; ai < population.agents.size(); ++ai) {
    std::map<std::int64_t, std::vector<Key>> truth;
    for (const auto& v : population.visits[ai]) {
      if (v.end - v.start < trajectory::kDwellThreshold) continue;
      truth[day_index(v.start)].emplace_back(campus.zones[v.zone].location, v.start, v.end);
    }
    std::map<std::int64_t, std::vector<Key>> got;
    const auto it = built.visits.find(anonymize(salt, population.agents[ai].user));
    if (it != built.visits.end()) {
      for (const auto& v : it->second) got[day_index(v.start)].emplace_back(v.location, v.start, v.end);
    }
    for (int d = 0; d < population.days; ++d) {
      const std::int64_t day = population.first_day + d;
      ++f.agent_days;
      f.matched += truth[day] == got[day];
    }
  }
  return f;
}

Corpus campus_corpus(const sim::CampusConfig& config, int days, int granularity,
                     const sim::NoiseConfig& noise) {
  Corpus c{sim::generate_campus(config), {}, {}, {}};
  c.population = sim::generate_days(c.campus, c.campus.config.grammar, days, config.seed);
  const auto files = sim::emit_syslog(c.campus, c.population, noise, config.seed);
  std::vector<std::vector<std::string>> streams;
  for (const auto& [controller, lines] : files.lines) streams.push_back(lines);
  ingest::IngestOptions options;
  options.salt = "salt";
  options.year = civil_from_days(c.population.first_day).year;
  trajectory::BuildConfig build;
  build.granularity = granularity;
  c.trajectories = trajectory::build_trajectories(ingest::ingest_streams(streams, options),
                                                  c.campus.ap_map, build)
                       .trajectories;
  c.vocab = model::Vocabulary::from_ap_map(c.campus.ap_map);
  return c;
}

model::Vocabulary tiny_vocabulary() {
  trajectory::LocationHierarchy h;
  for (const char* zone : {"B1/1/1", "B1/1/2", "B1/2/1"}) h[zone] = {"B1", "Dorm"};
  return model::Vocabulary::from_hierarchy(h);
}

model::ModelConfig tiny_config(int modalities) {
  model::ModelConfig c;
  c.modalities = modalities;
  c.layers = 1;
  c.heads = 2;
  c.d_model = 8;
  c.d_ff = 32;
  c.n_max = 4;
  c.vocab_size = tiny_vocabulary().size();
  return c;
}

model::TokenSeqs random_tokens(const model::Vocabulary& vocab, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  model::TokenSeqs out;
  for (std::size_t s = 0; s < model::kScaleCount; ++s) {
    const auto [lo, hi] = vocab.range(static_cast<model::Scale>(s));
    for (std::size_t i = 0; i < n; ++i) {
      out[s].push_back(lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo))));
    }
  }
  return out;
}

}  // namespace mobmod::testing
