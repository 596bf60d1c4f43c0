#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobmod/model/transformer.hpp"
#include "mobmod/trajectory/trajectory.hpp"

namespace mobmod::apps {

using trajectory::MultiScaleTrajectory;

class MixedGranularity : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MissingUserModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OccupancyGrid {
  int granularity = 60;
  std::int64_t scale = 1;
  std::size_t population = 0;  // trajectories aggregated
  std::vector<std::string> zones;
  std::vector<std::vector<std::int64_t>> counts;  // [bin][zone]
  std::vector<std::int64_t> off;                  // [bin]

  /// Column of one zone, or all zeros when the zone is absent.
  std::vector<double> series(const std::string& zone) const;
  nlohmann::json to_json() const;
};

/// Counts trajectories per (bin, zone), times `scale`. With no zone list the
/// grid covers every location seen, sorted.
OccupancyGrid aggregate_occupancy(const std::vector<MultiScaleTrajectory>& trajectories,
                                  std::vector<std::string> zones = {}, std::int64_t scale = 1);

/// Header `bin_start,zone,count`, one row per bin and zone.
void write_occupancy_csv(const OccupancyGrid& grid, std::ostream& out);

/// Rolls out `population` synthetic days, each seeded with the first bin of a
/// distinct seed day drawn without replacement. Users are named sim0001...
std::vector<MultiScaleTrajectory> simulate_traces(const model::ModelParams& params,
                                                  const model::Vocabulary& vocab,
                                                  const std::vector<MultiScaleTrajectory>& seed_days,
                                                  std::size_t population, int k,
                                                  std::uint64_t seed);

struct AssistantPrediction {
  /// Per scale, best first: token and probability under the range-masked
  /// softmax. Scales the model does not predict are marginalized from the
  /// location distribution.
  std::array<std::vector<std::pair<std::string, double>>, trajectory::kScaleCount> ranked;
  nlohmann::json to_json() const;
};

AssistantPrediction assistant_next(const model::ModelParams& params, const model::Vocabulary& vocab,
                                   const model::TokenSeqs& prefix, int granularity, int k = 5);

}  // namespace mobmod::apps
