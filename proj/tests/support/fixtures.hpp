#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "mobmod/model/transformer.hpp"
#include "mobmod/sim/campus.hpp"
#include "mobmod/trajectory/trajectory.hpp"
#include <vector>

namespace mobmod::testing {

/// Residential campus with cohort schedules (built-in templates).
sim::CampusConfig main_campus(int students, int faculty, double epsilon, bool detours,
                              std::uint64_t seed = 7);

struct Fidelity {
  std::size_t agent_days = 0;
  std::size_t matched = 0;
  double rate() const { return agent_days ? double(matched) / double(agent_days) : 0.0; }
};

/// Ingests the emitted syslog, builds dwell visits and compares them with the
/// ground truth per agent-day (visits grouped by start day, compared on
/// location, start and end).
Fidelity dwell_fidelity(const sim::Campus& campus, const sim::Population& population,
                        const sim::SyslogFiles& files, const std::string& salt = "salt");

/// Trajectories recovered from the simulated campus through the full
/// syslog -> ingest -> build path.
struct Corpus {
  sim::Campus campus;
  sim::Population population;
  model::Vocabulary vocab;
  std::vector<trajectory::MultiScaleTrajectory> trajectories;
};

Corpus campus_corpus(const sim::CampusConfig& config, int days, int granularity,
                     const sim::NoiseConfig& noise = {});

/// One Dorm building with three zones: a shared vocabulary of 12 tokens.
model::Vocabulary tiny_vocabulary();

/// d=8, L=1, h=2, n_max=4 over tiny_vocabulary().
model::ModelConfig tiny_config(int modalities = 4);

/// Random ids drawn from each scale's range.
model::TokenSeqs random_tokens(const model::Vocabulary& vocab, std::size_t n, std::uint64_t seed);

}  // namespace mobmod::testing
