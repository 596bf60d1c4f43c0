#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobmod/model/vocabulary.hpp"
#include "mobmod/numerics/tensor.hpp"

namespace mobmod::baselines {

class EmptyCorpus : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TokenOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Baselines see only the indoor-location stream, as ids local to the
/// location range (0 = OFF).
using Sequence = std::vector<int>;

Sequence location_stream(const model::TokenSeqs& tokens, const model::Vocabulary& vocab);
int location_vocab_size(const model::Vocabulary& vocab);

/// Token and probability, best first (ties: smaller token first).
using Ranking = std::vector<std::pair<int, double>>;

// ---------------------------------------------------------------------------

class NgramModel {
 public:
  using Counts = std::map<int, std::uint64_t>;

  NgramModel() = default;
  /// Counts for every context length 0..order-1. Throws EmptyCorpus.
  static NgramModel fit(const std::vector<Sequence>& sequences, int order);

  int order() const { return order_; }
  /// Continuation counts of an exact context, or nullptr.
  const Counts* counts(const std::vector<int>& context) const;

  /// MLE distribution of the longest suffix of `history` (at most order-1
  /// tokens) that was observed as a context.
  Ranking predict(const std::vector<int>& history) const;

  nlohmann::json to_json() const;
  static NgramModel from_json(const nlohmann::json& j);

 private:
  int order_ = 2;
  std::map<std::vector<int>, Counts> table_;
};

// ---------------------------------------------------------------------------

struct HmmFitOptions {
  int states = 32;
  int iterations = 50;
  std::uint64_t seed = 0;
};

class HmmModel {
 public:
  HmmModel() = default;
  HmmModel(numerics::Tensor initial, numerics::Tensor transition, numerics::Tensor emission);

  /// Baum-Welch from a seeded random start. Throws EmptyCorpus.
  static HmmModel fit(const std::vector<Sequence>& sequences, int vocab_size,
                      const HmmFitOptions& options, std::vector<double>* log_likelihoods = nullptr);

  int states() const { return static_cast<int>(initial_.size()); }
  int vocab_size() const { return static_cast<int>(emission_.cols()); }
  const numerics::Tensor& initial() const { return initial_; }     // [K]
  const numerics::Tensor& transition() const { return transition_; }  // [K, K]
  const numerics::Tensor& emission() const { return emission_; }      // [K, V]

  /// Scaled forward algorithm; the empty sequence has log-likelihood 0.
  double log_likelihood(const Sequence& sequence) const;

  /// Next-token distribution after `history`: filtered posteriorᵀ·A·B, or
  /// πᵀ·B for an empty history.
  std::vector<double> next_distribution(const Sequence& history) const;
  Ranking predict(const Sequence& history) const;

  nlohmann::json to_json() const;
  static HmmModel from_json(const nlohmann::json& j);

 private:
  void check_token(int token) const;

  numerics::Tensor initial_;
  numerics::Tensor transition_;
  numerics::Tensor emission_;

  friend class HmmFilter;
};

/// Incremental filtering. An observation with zero probability under every
/// state is treated as missing: the belief is propagated without conditioning.
class HmmFilter {
 public:
  explicit HmmFilter(const HmmModel& model);
  void observe(int token);
  /// Distribution of the next token given everything observed so far.
  std::vector<double> next_distribution() const;

 private:
  const HmmModel& model_;
  std::vector<double> belief_;  // P(state of the last observation | history)
  bool started_ = false;
};

Ranking rank(const std::vector<double>& distribution);

// Checkpoints share the transformer container with kinds "ngram" and "hmm".
nlohmann::json ngram_checkpoint(const NgramModel& model, const model::Vocabulary& vocab);
nlohmann::json hmm_checkpoint(const HmmModel& model, const model::Vocabulary& vocab);
NgramModel ngram_from_checkpoint(const nlohmann::json& j, model::Vocabulary* vocab = nullptr);
HmmModel hmm_from_checkpoint(const nlohmann::json& j, model::Vocabulary* vocab = nullptr);

}  // namespace mobmod::baselines
