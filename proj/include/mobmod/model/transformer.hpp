#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobmod/model/vocabulary.hpp"
#include "mobmod/numerics/grad_tape.hpp"
#include "mobmod/numerics/tensor.hpp"

namespace mobmod::model {

using numerics::Tensor;

class InvalidModelConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SequenceTooLong : public std::length_error {
 public:
  using std::length_error::length_error;
};

class StepLimitExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct ModelConfig {
  int modalities = 4;  // 4 = multi-modal, 1 = location stream only
  int layers = 4;
  int heads = 4;
  int d_model = 64;
  int d_ff = 256;
  int n_max = 96;
  int vocab_size = 0;
  double init_std = 0.02;
  double ln_eps = 1e-5;

  int d_head() const { return d_model / heads; }
  /// Scales whose embeddings and losses are active.
  std::vector<Scale> scales() const;
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Same stack with only the indoor-location stream.
ModelConfig simple_transformer_config(ModelConfig base);

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// m·V·d + n_max·d + L·(4d² + 2·d·d_ff + d_ff + d + 4d) + d·V + V.
std::size_t param_count(const ModelConfig& c);

struct LayerParams {
  Tensor wq, wk, wv, wo;  // [d, d]
  Tensor w1, b1;          // [d, d_ff], [d_ff]
  Tensor w2, b2;          // [d_ff, d], [d]
  Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

struct ModelParams {
  ModelConfig config;
  std::vector<Tensor> embeddings;  // one [V, d] table per active scale
  Tensor position;                 // [n_max, d]
  std::vector<LayerParams> layers;
  Tensor w_out;  // [d, V]
  Tensor b_out;  // [V]

  /// Normal(0, init_std²) weights, unit LayerNorm gains, zero biases.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);
  /// Same shapes, all zero.
  static ModelParams zeros(const ModelConfig& config);

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> names() const;
  std::size_t count() const;
};

/// Per-layer activations x, h1 = MHA(x), h2 = LN(x + h1), h3 = FFN(h2),
/// out = LN(h2 + h3).
struct LayerActivations {
  Tensor x, h1, h2, h3, out;
};

/// Je[i] = Σ_k E_k[T_k[i]] + P[i] over the active scales.
Tensor embed_joint(const TokenSeqs& tokens, const ModelParams& params);

Tensor encoder_layer(const Tensor& x, const LayerParams& layer, const ModelConfig& config,
                     bool causal, LayerActivations* trace = nullptr);

/// Logits [n, V] for one sequence.
Tensor forward_logits(const TokenSeqs& tokens, const ModelParams& params,
                      std::vector<LayerActivations>* trace = nullptr);

/// Logits [S·n, V] for S sequences of equal length n.
Tensor forward_logits_batch(const std::vector<const TokenSeqs*>& batch, const ModelParams& params);

/// Σ over active scales of the mean next-step cross entropy: logits row i is
/// scored against target i+1, the last row is not scored.
double loss_multimodal(const Tensor& logits, const TokenSeqs& targets, const ModelConfig& config);

struct LossAndGradient {
  double loss = 0.0;
  ModelParams grad;
};

/// Batch loss (per-scale mean over all scored positions of the batch, summed
/// over scales) and its gradient. Sequences must share one length; the work is
/// split into micro-batches whose gradients are accumulated with weights
/// proportional to their size.
LossAndGradient loss_and_gradient(const ModelParams& params,
                                  const std::vector<const TokenSeqs*>& batch,
                                  std::size_t micro_batch = 20);

/// Records the model on a tape. Without `grads`, parameters are frozen.
numerics::Var forward_on_tape(numerics::GradTape& tape, const ModelParams& params,
                              ModelParams* grads, const std::vector<const TokenSeqs*>& batch,
                              std::vector<numerics::Var>* layer_outputs = nullptr);

// ---------------------------------------------------------------------------
// Decoding

enum class DecodeMode { Greedy, TopK };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::Greedy;
  int k = 5;
  std::uint64_t seed = 0;
  /// Derive space type and building from the location via the vocabulary
  /// hierarchy and context from the bin time. Always on for m = 1.
  bool project = false;
  int granularity = 60;
};

/// The (c, s, b, l) tuple implied by a location id at a bin position.
std::array<int, kScaleCount> project_location(int location, std::size_t position,
                                             const Vocabulary& vocab, int granularity);

/// Extends each prefix by `steps` positions. All prefixes share one length.
std::vector<TokenSeqs> decode_batch(const ModelParams& params, const Vocabulary& vocab,
                                    std::vector<TokenSeqs> prefixes, int steps,
                                    const DecodeOptions& options);

TokenSeqs decode(const ModelParams& params, const Vocabulary& vocab, const TokenSeqs& prefix,
                 int steps, const DecodeOptions& options);

/// Ids of the k best tokens of `scale` at the last position of `logits`,
/// best first (ties: smaller id first).
std::vector<int> top_k_in_range(const Tensor& logits, std::size_t row, const Vocabulary& vocab,
                                Scale scale, int k);

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr const char* kCheckpointFormat = "mobmod-checkpoint";
inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json tensors_to_json(const std::vector<std::string>& names,
                               const std::vector<const Tensor*>& tensors);

/// Container header shared by all model kinds.
nlohmann::json checkpoint_header(const std::string& kind, const Vocabulary& vocab);
/// Validates format and version and returns the kind.
std::string checkpoint_kind(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

nlohmann::json transformer_checkpoint(const ModelParams& params, const Vocabulary& vocab);
/// Throws CheckpointError on a shape that disagrees with the stored config.
ModelParams transformer_from_checkpoint(const nlohmann::json& j, Vocabulary* vocab = nullptr);

}  // namespace mobmod::model
