#include "mobmod/apps/apps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "mobmod/common/random.hpp"
#include "mobmod/common/time.hpp"

namespace mobmod::apps {

using trajectory::kScaleCount;
using trajectory::Scale;

namespace {

constexpr auto kLocation = static_cast<std::size_t>(Scale::Location);

std::string bin_label(std::size_t bin, int granularity) {
  return format_clock(static_cast<std::int64_t>(bin) * granularity * 60).substr(0, 5);
}

}  // namespace

std::vector<double> OccupancyGrid::series(const std::string& zone) const {
  std::vector<double> out(counts.size(), 0.0);
  const auto it = std::find(zones.begin(), zones.end(), zone);
  if (it == zones.end()) return out;
  const auto z = static_cast<std::size_t>(it - zones.begin());
  for (std::size_t t = 0; t < counts.size(); ++t) out[t] = static_cast<double>(counts[t][z]);
  return out;
}

nlohmann::json OccupancyGrid::to_json() const {
  std::vector<std::string> bins;
  for (std::size_t t = 0; t < counts.size(); ++t) bins.push_back(bin_label(t, granularity));
  return {{"granularity", granularity}, {"scale", scale}, {"population", population},
          {"zones", zones},             {"bins", bins},   {"counts", counts},
          {"off", off}};
}

OccupancyGrid aggregate_occupancy(const std::vector<MultiScaleTrajectory>& trajectories,
                                  std::vector<std::string> zones, std::int64_t scale) {
  if (scale < 1) throw std::invalid_argument("occupancy scale must be >= 1");
  OccupancyGrid grid;
  grid.scale = scale;
  grid.population = trajectories.size();
  if (!trajectories.empty()) grid.granularity = trajectories.front().granularity;
  for (const auto& t : trajectories) {
    if (t.granularity != grid.granularity) {
      throw MixedGranularity("occupancy: trajectories mix granularities " +
                             std::to_string(grid.granularity) + " and " +
                             std::to_string(t.granularity));
    }
  }
  if (zones.empty()) {
    std::set<std::string> seen;
    for (const auto& t : trajectories) {
      for (const auto& l : t.tokens[kLocation]) {
        if (l != trajectory::kOffToken) seen.insert(l);
      }
    }
    zones.assign(seen.begin(), seen.end());
  }
  grid.zones = std::move(zones);
  std::map<std::string, std::size_t> column;
  for (std::size_t z = 0; z < grid.zones.size(); ++z) column.emplace(grid.zones[z], z);

  const std::size_t bins = trajectory::bins_per_day(grid.granularity);
  grid.counts.assign(bins, std::vector<std::int64_t>(grid.zones.size(), 0));
  grid.off.assign(bins, 0);
  for (const auto& t : trajectories) {
    const auto& stream = t.tokens[kLocation];
    if (stream.size() != bins) throw std::invalid_argument("occupancy: trajectory of wrong length");
    for (std::size_t b = 0; b < bins; ++b) {
      if (stream[b] == trajectory::kOffToken) {
        grid.off[b] += scale;
      } else if (const auto it = column.find(stream[b]); it != column.end()) {
        grid.counts[b][it->second] += scale;
      }
    }
  }
  return grid;
}

void write_occupancy_csv(const OccupancyGrid& grid, std::ostream& out) {
  out << "bin_start,zone,count\n";
  for (std::size_t t = 0; t < grid.counts.size(); ++t) {
    const std::string label = bin_label(t, grid.granularity);
    for (std::size_t z = 0; z < grid.zones.size(); ++z) {
      out << label << ',' << grid.zones[z] << ',' << grid.counts[t][z] << '\n';
    }
  }
}

std::vector<MultiScaleTrajectory> simulate_traces(const model::ModelParams& params,
                                                  const model::Vocabulary& vocab,
                                                  const std::vector<MultiScaleTrajectory>& seed_days,
                                                  std::size_t population, int k,
                                                  std::uint64_t seed) {
  if (population > seed_days.size()) {
    throw std::invalid_argument("simulate_traces: population " + std::to_string(population) +
                                " exceeds " + std::to_string(seed_days.size()) + " seed days");
  }
  if (population == 0) return {};
  const int granularity = seed_days.front().granularity;
  for (const auto& d : seed_days) {
    if (d.granularity != granularity) throw MixedGranularity("simulate_traces: mixed granularities");
  }
  std::vector<std::size_t> order(seed_days.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  const int steps = static_cast<int>(trajectory::bins_per_day(granularity)) - 1;
  model::DecodeOptions options;
  options.mode = model::DecodeMode::TopK;
  options.k = k;
  options.project = true;
  options.granularity = granularity;

  constexpr std::size_t kChunk = 100;
  std::vector<MultiScaleTrajectory> out;
  out.reserve(population);
  for (std::size_t begin = 0; begin < population; begin += kChunk) {
    const std::size_t end = std::min(population, begin + kChunk);
    std::vector<model::TokenSeqs> prefixes;
    for (std::size_t i = begin; i < end; ++i) {
      const auto full = model::tokenize(seed_days[order[i]], vocab);
      model::TokenSeqs p;
      for (std::size_t s = 0; s < kScaleCount; ++s) p[s] = {full[s].front()};
      prefixes.push_back(std::move(p));
    }
    options.seed = mix_seed(seed, begin / kChunk + 1);
    const auto decoded = model::decode_batch(params, vocab, std::move(prefixes), steps, options);
    for (std::size_t i = begin; i < end; ++i) {
      char user[32];
      std::snprintf(user, sizeof user, "sim%04zu", i + 1);
      out.push_back(model::detokenize(decoded[i - begin], vocab, user, seed_days[order[i]].day,
                                      granularity));
    }
  }
  return out;
}

AssistantPrediction assistant_next(const model::ModelParams& params, const model::Vocabulary& vocab,
                                   const model::TokenSeqs& prefix, int granularity, int k) {
  if (k < 1) throw std::invalid_argument("assistant: k must be >= 1");
  const std::size_t n = prefix[kLocation].size();
  if (n == 0) throw std::invalid_argument("assistant: empty prefix");
  const auto logits = model::forward_logits(prefix, params);
  const std::size_t row = n - 1;

  const auto softmax_range = [&](Scale s) {
    const auto [lo, hi] = vocab.range(s);
    double top = -INFINITY;
    for (int id = lo; id < hi; ++id) top = std::max(top, logits(row, static_cast<std::size_t>(id)));
    std::map<int, double> p;
    double total = 0.0;
    for (int id = lo; id < hi; ++id) {
      p[id] = std::exp(logits(row, static_cast<std::size_t>(id)) - top);
      total += p[id];
    }
    for (auto& [id, v] : p) v /= total;
    return p;
  };

  const auto active = params.config.scales();
  const auto location = softmax_range(Scale::Location);
  AssistantPrediction out;
  for (std::size_t s = 0; s < kScaleCount; ++s) {
    const auto scale = static_cast<Scale>(s);
    std::map<int, double> dist;
    if (std::find(active.begin(), active.end(), scale) != active.end()) {
      dist = scale == Scale::Location ? location : softmax_range(scale);
    } else {
      for (const auto& [id, p] : location) {
        dist[model::project_location(id, n, vocab, granularity)[s]] += p;
      }
    }
    std::vector<std::pair<int, double>> ranked(dist.begin(), dist.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(static_cast<std::size_t>(k));
    for (const auto& [id, p] : ranked) out.ranked[s].emplace_back(vocab.token(id), p);
  }
  return out;
}

nlohmann::json AssistantPrediction::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t s = 0; s < kScaleCount; ++s) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [token, p] : ranked[s]) list.push_back({{"token", token}, {"probability", p}});
    j[std::string(trajectory::kScaleNames[s])] = {
        {"top1", ranked[s].empty() ? nlohmann::json() : list.front()}, {"ranked", list}};
  }
  return j;
}

}  // namespace mobmod::apps
