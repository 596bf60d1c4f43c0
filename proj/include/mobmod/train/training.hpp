#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mobmod/model/transformer.hpp"
#include "mobmod/numerics/optim.hpp"
#include "mobmod/trajectory/trajectory.hpp"

namespace mobmod::train {

using model::ModelParams;
using numerics::Tensor;
using model::TokenSeqs;
using model::Vocabulary;
using trajectory::MultiScaleTrajectory;

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DivergenceDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VocabMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Splits

struct SplitCounts {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
};

/// floor(0.8·D) / floor(0.1·D) / remainder. Throws InsufficientData below 3.
SplitCounts split_counts(std::size_t days);

inline constexpr std::size_t kMinUserDays = 3;

struct Datasets {
  std::vector<MultiScaleTrajectory> train;
  std::vector<MultiScaleTrajectory> dev;
  std::vector<MultiScaleTrajectory> test;
  std::vector<std::string> excluded_users;
};

/// Per-user chronological split. Users with fewer than three days are excluded
/// and listed.
Datasets make_splits(const std::vector<MultiScaleTrajectory>& trajectories);

/// Throws VocabMismatch when a token is missing from the vocabulary.
std::vector<TokenSeqs> tokenize_all(const std::vector<MultiScaleTrajectory>& trajectories,
                                    const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int epochs = 15;
  std::size_t batch_size = 100;
  numerics::AdamConfig adam;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // 0 disables clipping
  std::size_t micro_batch = 20;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;  // NaN without a dev set
};

struct TrainResult {
  ModelParams params;
  /// Row 0 holds the losses of the starting parameters.
  std::vector<EpochRecord> curve;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mean multi-modal loss over a set of equal-length sequences.
double dataset_loss(const ModelParams& params, const std::vector<TokenSeqs>& data,
                    std::size_t chunk = 100);

/// Mini-batch Adam over `train`, reshuffled each epoch. Returns the
/// parameters of the epoch with the lowest dev loss (the starting point
/// counts as epoch 0); without dev data the last epoch wins.
TrainResult train(ModelParams params, const std::vector<TokenSeqs>& train,
                  const std::vector<TokenSeqs>& dev, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct FineTuneConfig {
  int epochs = 3;
  double learning_rate = 0.001;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;
};

/// Continues training a copy of `global` on one user's days.
TrainResult fine_tune(const ModelParams& global, const std::vector<TokenSeqs>& user_train,
                      const std::vector<TokenSeqs>& user_dev, const FineTuneConfig& config);

void write_loss_csv(const std::vector<EpochRecord>& curve, std::ostream& out);
void write_loss_csv(const std::vector<EpochRecord>& curve, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Evaluation

enum class EvalMode { NextStep, Rollout };
std::string to_string(EvalMode mode);
EvalMode eval_mode_from_string(const std::string& s);

inline constexpr std::array<int, 3> kTopK = {1, 3, 5};

/// Outcome counters of the top-1 prediction; they sum to `scored`.
struct ScaleCounts {
  std::size_t scored = 0;
  std::size_t correct = 0;
  std::size_t missed_presence = 0;  // truth on-network, predicted OFF
  std::size_t false_presence = 0;   // truth OFF, predicted on-network
  std::size_t wrong_value = 0;      // both on-network, different value
  std::array<std::size_t, kTopK.size()> top_k_hits{};

  double accuracy() const;
  double top_k_accuracy(std::size_t index) const;
};

struct EvalReport {
  std::string model;
  EvalMode mode = EvalMode::NextStep;
  int granularity = 60;
  std::size_t days = 0;
  /// Scales that were scored; baselines only score the location.
  std::vector<trajectory::Scale> scales;
  std::array<ScaleCounts, trajectory::kScaleCount> counts{};

  double accuracy(trajectory::Scale s) const {
    return counts[static_cast<std::size_t>(s)].accuracy();
  }
  nlohmann::json to_json() const;
};

/// Positions 1..n-1 of every day are scored. Next-step mode teacher-forces
/// the true prefix; rollout mode seeds with bin 0 and decodes greedily.
/// Scales a simple transformer does not model are projected from its
/// location prediction.
EvalReport evaluate(const ModelParams& params, const Vocabulary& vocab,
                    const std::vector<TokenSeqs>& test, EvalMode mode);

/// Location-only evaluation of a baseline. `predict` ranks the next local
/// location id given the local history of the same day.
using BaselinePredictor = std::function<std::vector<std::pair<int, double>>(const std::vector<int>&)>;
EvalReport evaluate_baseline(const std::string& name, const BaselinePredictor& predict,
                             const Vocabulary& vocab, const std::vector<TokenSeqs>& test,
                             EvalMode mode);

// ---------------------------------------------------------------------------
// Similarity metrics

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConstantObserved : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fraction of bins with the same indoor location.
double trajectory_similarity(const MultiScaleTrajectory& generated,
                             const MultiScaleTrajectory& observed);

/// 1 - SS_res / SS_tot.
double r_squared(const std::vector<double>& predicted, const std::vector<double>& observed);

}  // namespace mobmod::train
