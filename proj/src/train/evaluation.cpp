#include <algorithm>
#include <cmath>

#include "mobmod/train/training.hpp"

namespace mobmod::train {

using trajectory::kScaleCount;
using trajectory::Scale;

std::string to_string(EvalMode mode) { return mode == EvalMode::NextStep ? "next-step" : "rollout"; }

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "next-step" || s == "next_step") return EvalMode::NextStep;
  if (s == "rollout") return EvalMode::Rollout;
  throw std::invalid_argument("unknown evaluation mode '" + s + "'");
}

double ScaleCounts::accuracy() const {
  return scored == 0 ? std::nan("") : static_cast<double>(correct) / static_cast<double>(scored);
}

double ScaleCounts::top_k_accuracy(std::size_t index) const {
  return scored == 0 ? std::nan("")
                     : static_cast<double>(top_k_hits.at(index)) / static_cast<double>(scored);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per_scale = nlohmann::json::object();
  for (Scale s : scales) {
    const auto& c = counts[static_cast<std::size_t>(s)];
    nlohmann::json top = nlohmann::json::object();
    for (std::size_t i = 0; i < kTopK.size(); ++i) top[std::to_string(kTopK[i])] = c.top_k_accuracy(i);
    per_scale[std::string(trajectory::kScaleNames[static_cast<std::size_t>(s)])] = {
        {"scored", c.scored},
        {"accuracy", c.accuracy()},
        {"top_k", top},
        {"confusion",
         {{"correct", c.correct},
          {"missed_presence", c.missed_presence},
          {"false_presence", c.false_presence},
          {"wrong_value", c.wrong_value}}}};
  }
  return {{"model", model},   {"mode", to_string(mode)}, {"granularity", granularity},
          {"days", days},     {"scales", per_scale}};
}

namespace {

void score(ScaleCounts& c, int truth, const std::vector<int>& ranked, int off) {
  ++c.scored;
  const int predicted = ranked.empty() ? -1 : ranked.front();
  if (predicted == truth) {
    ++c.correct;
  } else if (truth != off && predicted == off) {
    ++c.missed_presence;
  } else if (truth == off) {
    ++c.false_presence;
  } else {
    ++c.wrong_value;
  }
  for (std::size_t i = 0; i < kTopK.size(); ++i) {
    const auto limit = std::min(ranked.size(), static_cast<std::size_t>(kTopK[i]));
    if (std::find(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(limit), truth) !=
        ranked.begin() + static_cast<std::ptrdiff_t>(limit)) {
      ++c.top_k_hits[i];
    }
  }
}

std::size_t day_length(const std::vector<TokenSeqs>& test) {
  std::size_t n = 0;
  for (const auto& seq : test) {
    const std::size_t len = seq[static_cast<std::size_t>(Scale::Location)].size();
    if (n == 0) n = len;
    if (len != n || len < 2 || 1440 % len != 0) {
      throw std::invalid_argument("evaluate: days must share one valid length");
    }
  }
  return n;
}

constexpr int kMaxK = kTopK.back();

}  // namespace

EvalReport evaluate(const ModelParams& params, const Vocabulary& vocab,
                    const std::vector<TokenSeqs>& test, EvalMode mode) {
  if (vocab.size() != params.config.vocab_size) {
    throw VocabMismatch("evaluate: vocabulary has " + std::to_string(vocab.size()) +
                        " tokens, model expects " + std::to_string(params.config.vocab_size));
  }
  EvalReport report;
  report.model = params.config.modalities == 1 ? "simple-transformer" : "transformer";
  report.mode = mode;
  report.days = test.size();
  report.scales = {Scale::Context, Scale::SpaceType, Scale::Building, Scale::Location};
  if (test.empty()) return report;
  const std::size_t n = day_length(test);
  report.granularity = static_cast<int>(1440 / n);
  const auto active = params.config.scales();
  const auto is_active = [&](Scale s) { return std::find(active.begin(), active.end(), s) != active.end(); };

  constexpr std::size_t kChunk = 100;
  for (std::size_t begin = 0; begin < test.size(); begin += kChunk) {
    const std::size_t end = std::min(test.size(), begin + kChunk);
    std::vector<TokenSeqs> inputs(test.begin() + static_cast<std::ptrdiff_t>(begin),
                                  test.begin() + static_cast<std::ptrdiff_t>(end));
    if (mode == EvalMode::Rollout) {
      std::vector<TokenSeqs> prefixes;
      for (const auto& seq : inputs) {
        TokenSeqs p;
        for (std::size_t s = 0; s < kScaleCount; ++s) p[s] = {seq[s].front()};
        prefixes.push_back(std::move(p));
      }
      model::DecodeOptions opts;
      opts.granularity = report.granularity;
      inputs = model::decode_batch(params, vocab, std::move(prefixes), static_cast<int>(n - 1), opts);
    }
    std::vector<const TokenSeqs*> ptrs;
    for (const auto& seq : inputs) ptrs.push_back(&seq);
    const Tensor logits = model::forward_logits_batch(ptrs, params);
    for (std::size_t b = begin; b < end; ++b) {
      const TokenSeqs& truth = test[b];
      const TokenSeqs& generated = inputs[b - begin];
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t row = (b - begin) * n + i;
        const auto locations = model::top_k_in_range(logits, row, vocab, Scale::Location, kMaxK);
        for (std::size_t s = 0; s < kScaleCount; ++s) {
          const auto scale = static_cast<Scale>(s);
          std::vector<int> ranked;
          if (is_active(scale)) {
            ranked = scale == Scale::Location ? locations
                                              : model::top_k_in_range(logits, row, vocab, scale, kMaxK);
          } else {
            for (int l : locations) {
              const int id = model::project_location(l, i + 1, vocab, report.granularity)[s];
              if (std::find(ranked.begin(), ranked.end(), id) == ranked.end()) ranked.push_back(id);
            }
          }
          if (mode == EvalMode::Rollout) {
            // The decoded token is the top-1 prediction by construction.
            const int chosen = generated[s][i + 1];
            std::erase(ranked, chosen);
            ranked.insert(ranked.begin(), chosen);
          }
          score(report.counts[s], truth[s][i + 1], ranked, vocab.off_id(scale));
        }
      }
    }
  }
  return report;
}

EvalReport evaluate_baseline(const std::string& name, const BaselinePredictor& predict,
                             const Vocabulary& vocab, const std::vector<TokenSeqs>& test,
                             EvalMode mode) {
  EvalReport report;
  report.model = name;
  report.mode = mode;
  report.days = test.size();
  report.scales = {Scale::Location};
  if (test.empty()) return report;
  const std::size_t n = day_length(test);
  report.granularity = static_cast<int>(1440 / n);
  const int first = vocab.range(Scale::Location).first;
  auto& counts = report.counts[static_cast<std::size_t>(Scale::Location)];
  std::vector<int> history;
  for (const auto& seq : test) {
    const auto& stream = seq[static_cast<std::size_t>(Scale::Location)];
    history.assign(1, stream.front() - first);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto ranking = predict(history);
      std::vector<int> ranked;
      for (std::size_t r = 0; r < ranking.size() && r < static_cast<std::size_t>(kMaxK); ++r) {
        ranked.push_back(ranking[r].first);
      }
      const int truth = stream[i + 1] - first;
      score(counts, truth, ranked, 0);
      if (mode == EvalMode::NextStep) {
        history.push_back(truth);
      } else {
        history.push_back(ranked.empty() ? 0 : ranked.front());
      }
    }
  }
  return report;
}

double trajectory_similarity(const MultiScaleTrajectory& generated,
                             const MultiScaleTrajectory& observed) {
  const auto& g = generated.tokens[static_cast<std::size_t>(Scale::Location)];
  const auto& o = observed.tokens[static_cast<std::size_t>(Scale::Location)];
  if (generated.granularity != observed.granularity || g.size() != o.size() || g.empty()) {
    throw LengthMismatch("trajectory_similarity: days differ in granularity or length");
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < g.size(); ++i) same += g[i] == o[i];
  return static_cast<double>(same) / static_cast<double>(g.size());
}

double r_squared(const std::vector<double>& predicted, const std::vector<double>& observed) {
  if (predicted.size() != observed.size() || observed.size() < 2) {
    throw LengthMismatch("r_squared: series must have equal length >= 2");
  }
  double mean = 0.0;
  for (double v : observed) mean += v;
  mean /= static_cast<double>(observed.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (ss_tot == 0.0) throw ConstantObserved("r_squared: observed series is constant");
  return 1.0 - ss_res / ss_tot;
}

}  // namespace mobmod::train
