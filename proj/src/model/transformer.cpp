#include "mobmod/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mobmod/numerics/ops.hpp"

namespace mobmod::model {

using numerics::GradTape;
using numerics::Var;

std::vector<Scale> ModelConfig::scales() const {
  if (modalities == 1) return {Scale::Location};
  return {Scale::Context, Scale::SpaceType, Scale::Building, Scale::Location};
}

void ModelConfig::validate() const {
  if (modalities != 1 && modalities != 4) {
    throw InvalidModelConfig("modalities must be 1 or 4, got " + std::to_string(modalities));
  }
  if (layers < 1 || heads < 1 || d_model < 1 || d_ff < 1 || n_max < 1) {
    throw InvalidModelConfig("model dimensions must be positive");
  }
  if (d_model % heads != 0) throw InvalidModelConfig("heads must divide d_model");
  if (vocab_size < 1) throw InvalidModelConfig("vocabulary size must be positive");
  if (!(init_std > 0) || !(ln_eps > 0)) throw InvalidModelConfig("init_std and ln_eps must be > 0");
}

ModelConfig simple_transformer_config(ModelConfig base) {
  base.modalities = 1;
  return base;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"modalities", c.modalities}, {"layers", c.layers},   {"heads", c.heads},
          {"d_model", c.d_model},       {"d_ff", c.d_ff},       {"n_max", c.n_max},
          {"vocab_size", c.vocab_size}, {"init_std", c.init_std}, {"ln_eps", c.ln_eps}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.modalities = j.at("modalities");
  c.layers = j.at("layers");
  c.heads = j.at("heads");
  c.d_model = j.at("d_model");
  c.d_ff = j.at("d_ff");
  c.n_max = j.at("n_max");
  c.vocab_size = j.at("vocab_size");
  c.init_std = j.value("init_std", 0.02);
  c.ln_eps = j.value("ln_eps", 1e-5);
  c.validate();
  return c;
}

std::size_t param_count(const ModelConfig& c) {
  const std::size_t m = static_cast<std::size_t>(c.modalities);
  const std::size_t V = static_cast<std::size_t>(c.vocab_size);
  const std::size_t d = static_cast<std::size_t>(c.d_model);
  const std::size_t f = static_cast<std::size_t>(c.d_ff);
  const std::size_t L = static_cast<std::size_t>(c.layers);
  const std::size_t n = static_cast<std::size_t>(c.n_max);
  return m * V * d + n * d + L * (4 * d * d + 2 * d * f + f + d + 4 * d) + d * V + V;
}

namespace {

ModelParams allocate(const ModelConfig& c) {
  c.validate();
  const std::size_t V = static_cast<std::size_t>(c.vocab_size);
  const std::size_t d = static_cast<std::size_t>(c.d_model);
  const std::size_t f = static_cast<std::size_t>(c.d_ff);
  ModelParams p;
  p.config = c;
  for (int k = 0; k < c.modalities; ++k) p.embeddings.emplace_back(numerics::Shape{V, d});
  p.position = Tensor({static_cast<std::size_t>(c.n_max), d});
  for (int l = 0; l < c.layers; ++l) {
    LayerParams layer{Tensor({d, d}), Tensor({d, d}), Tensor({d, d}), Tensor({d, d}),
                      Tensor({d, f}), Tensor({f}),    Tensor({f, d}), Tensor({d}),
                      Tensor({d}),    Tensor({d}),    Tensor({d}),    Tensor({d})};
    p.layers.push_back(std::move(layer));
  }
  p.w_out = Tensor({d, V});
  p.b_out = Tensor({V});
  return p;
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& config) { return allocate(config); }

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = allocate(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  auto fill = [&](Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = normal(rng);
  };
  for (auto& e : p.embeddings) fill(e);
  fill(p.position);
  for (auto& layer : p.layers) {
    fill(layer.wq);
    fill(layer.wk);
    fill(layer.wv);
    fill(layer.wo);
    fill(layer.w1);
    fill(layer.w2);
    layer.ln1_gain.fill(1.0);
    layer.ln2_gain.fill(1.0);
  }
  fill(p.w_out);
  if (p.count() != param_count(config)) {
    throw std::logic_error("parameter count disagrees with the closed form");
  }
  return p;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& e : embeddings) out.push_back(&e);
  out.push_back(&position);
  for (auto& l : layers) {
    for (Tensor* t : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.b1, &l.w2, &l.b2, &l.ln1_gain,
                      &l.ln1_bias, &l.ln2_gain, &l.ln2_bias}) {
      out.push_back(t);
    }
  }
  out.push_back(&w_out);
  out.push_back(&b_out);
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  auto mutable_ptrs = const_cast<ModelParams*>(this)->tensors();
  return {mutable_ptrs.begin(), mutable_ptrs.end()};
}

std::vector<std::string> ModelParams::names() const {
  std::vector<std::string> out;
  for (Scale s : config.scales()) {
    out.push_back("embed." + std::string(trajectory::kScaleNames[static_cast<std::size_t>(s)]));
  }
  out.push_back("position");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (const char* n : {"wq", "wk", "wv", "wo", "w1", "b1", "w2", "b2", "ln1_gain", "ln1_bias",
                          "ln2_gain", "ln2_bias"}) {
      out.push_back("layer" + std::to_string(l) + "." + n);
    }
  }
  out.push_back("out.weight");
  out.push_back("out.bias");
  return out;
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const Tensor* t : tensors()) n += t->size();
  return n;
}

namespace {

struct LayerVars {
  Var wq, wk, wv, wo, w1, b1, w2, b2, g1, c1, g2, c2;
};

Var bind(GradTape& tape, const Tensor& value, Tensor* grad) {
  return grad ? tape.parameter(value, *grad) : tape.frozen(value);
}

LayerVars bind_layer(GradTape& tape, const LayerParams& p, LayerParams* g) {
  return {bind(tape, p.wq, g ? &g->wq : nullptr),
          bind(tape, p.wk, g ? &g->wk : nullptr),
          bind(tape, p.wv, g ? &g->wv : nullptr),
          bind(tape, p.wo, g ? &g->wo : nullptr),
          bind(tape, p.w1, g ? &g->w1 : nullptr),
          bind(tape, p.b1, g ? &g->b1 : nullptr),
          bind(tape, p.w2, g ? &g->w2 : nullptr),
          bind(tape, p.b2, g ? &g->b2 : nullptr),
          bind(tape, p.ln1_gain, g ? &g->ln1_gain : nullptr),
          bind(tape, p.ln1_bias, g ? &g->ln1_bias : nullptr),
          bind(tape, p.ln2_gain, g ? &g->ln2_gain : nullptr),
          bind(tape, p.ln2_bias, g ? &g->ln2_bias : nullptr)};
}

struct LayerNodes {
  Var h1, h2, h3, out;
};

LayerNodes apply_layer(GradTape& tape, Var x, const LayerVars& w, std::size_t seq_len,
                       const ModelConfig& c, bool causal) {
  const Var q = tape.matmul(x, w.wq);
  const Var k = tape.matmul(x, w.wk);
  const Var v = tape.matmul(x, w.wv);
  const Var heads = tape.attention(q, k, v, seq_len, static_cast<std::size_t>(c.heads), causal);
  LayerNodes n;
  n.h1 = tape.matmul(heads, w.wo);
  n.h2 = tape.layer_norm(tape.add(x, n.h1), w.g1, w.c1, c.ln_eps);
  const Var hidden = tape.gelu(tape.add_row(tape.matmul(n.h2, w.w1), w.b1));
  n.h3 = tape.add_row(tape.matmul(hidden, w.w2), w.b2);
  n.out = tape.layer_norm(tape.add(n.h2, n.h3), w.g2, w.c2, c.ln_eps);
  return n;
}

std::size_t sequence_length(const std::vector<const TokenSeqs*>& batch, const ModelConfig& c) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t n = (*batch.front())[static_cast<std::size_t>(Scale::Location)].size();
  if (n == 0) throw std::invalid_argument("empty sequence");
  if (n > static_cast<std::size_t>(c.n_max)) {
    throw SequenceTooLong("sequence of " + std::to_string(n) + " exceeds n_max " +
                          std::to_string(c.n_max));
  }
  for (const TokenSeqs* seq : batch) {
    for (Scale s : c.scales()) {
      if ((*seq)[static_cast<std::size_t>(s)].size() != n) {
        throw numerics::ShapeMismatch("batch sequences differ in length");
      }
    }
  }
  return n;
}

std::vector<int> next_step_targets(const std::vector<const TokenSeqs*>& batch, Scale s,
                                   std::size_t n) {
  std::vector<int> targets;
  targets.reserve(batch.size() * n);
  for (const TokenSeqs* seq : batch) {
    const auto& stream = (*seq)[static_cast<std::size_t>(s)];
    for (std::size_t i = 0; i + 1 < n; ++i) targets.push_back(stream[i + 1]);
    targets.push_back(numerics::kIgnoreTarget);
  }
  return targets;
}

}  // namespace

Var forward_on_tape(GradTape& tape, const ModelParams& p, ModelParams* g,
                    const std::vector<const TokenSeqs*>& batch, std::vector<Var>* layer_outputs) {
  const ModelConfig& c = p.config;
  const std::size_t n = sequence_length(batch, c);
  const auto scales = c.scales();
  std::vector<int> ids(batch.size() * n);
  Var x{};
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const auto s = static_cast<std::size_t>(scales[k]);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::copy((*batch[b])[s].begin(), (*batch[b])[s].end(), ids.begin() + static_cast<std::ptrdiff_t>(b * n));
    }
    const Var table = bind(tape, p.embeddings[k], g ? &g->embeddings[k] : nullptr);
    const Var e = tape.gather_rows(table, ids);
    x = k == 0 ? e : tape.add(x, e);
  }
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t i = 0; i < n; ++i) ids[b * n + i] = static_cast<int>(i);
  }
  x = tape.add(x, tape.gather_rows(bind(tape, p.position, g ? &g->position : nullptr), ids));
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LayerVars w = bind_layer(tape, p.layers[l], g ? &g->layers[l] : nullptr);
    x = apply_layer(tape, x, w, n, c, true).out;
    if (layer_outputs) layer_outputs->push_back(x);
  }
  const Var w_out = bind(tape, p.w_out, g ? &g->w_out : nullptr);
  const Var b_out = bind(tape, p.b_out, g ? &g->b_out : nullptr);
  return tape.add_row(tape.matmul(x, w_out), b_out);
}

Tensor embed_joint(const TokenSeqs& tokens, const ModelParams& params) {
  const std::vector<const TokenSeqs*> batch{&tokens};
  const std::size_t n = sequence_length(batch, params.config);
  const auto scales = params.config.scales();
  Tensor out({n, static_cast<std::size_t>(params.config.d_model)});
  const std::size_t d = out.cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < scales.size(); ++k) {
      const int id = tokens[static_cast<std::size_t>(scales[k])][i];
      if (id < 0 || id >= params.config.vocab_size) {
        throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
      }
      const double* row = params.embeddings[k].data() + static_cast<std::size_t>(id) * d;
      for (std::size_t c = 0; c < d; ++c) out(i, c) += row[c];
    }
    for (std::size_t c = 0; c < d; ++c) out(i, c) += params.position(i, c);
  }
  return out;
}

Tensor encoder_layer(const Tensor& x, const LayerParams& layer, const ModelConfig& config,
                     bool causal, LayerActivations* trace) {
  if (x.rank() != 2 || x.cols() != static_cast<std::size_t>(config.d_model)) {
    throw numerics::ShapeMismatch("encoder_layer: input " + numerics::shape_string(x.shape()));
  }
  GradTape tape;
  const Var xv = tape.constant(x);
  const LayerNodes n = apply_layer(tape, xv, bind_layer(tape, layer, nullptr), x.rows(), config, causal);
  if (trace) *trace = {x, tape.value(n.h1), tape.value(n.h2), tape.value(n.h3), tape.value(n.out)};
  return tape.value(n.out);
}

Tensor forward_logits(const TokenSeqs& tokens, const ModelParams& params,
                      std::vector<LayerActivations>* trace) {
  if (!trace) return forward_logits_batch({&tokens}, params);
  Tensor x = embed_joint(tokens, params);
  trace->clear();
  for (const auto& layer : params.layers) {
    LayerActivations act;
    x = encoder_layer(x, layer, params.config, true, &act);
    trace->push_back(std::move(act));
  }
  Tensor logits = numerics::matmul(x, params.w_out);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    for (std::size_t c = 0; c < logits.cols(); ++c) logits(r, c) += params.b_out[c];
  }
  return logits;
}

Tensor forward_logits_batch(const std::vector<const TokenSeqs*>& batch, const ModelParams& params) {
  GradTape tape;
  const Var logits = forward_on_tape(tape, params, nullptr, batch);
  return tape.value(logits);
}

double loss_multimodal(const Tensor& logits, const TokenSeqs& targets, const ModelConfig& config) {
  const std::vector<const TokenSeqs*> batch{&targets};
  const std::size_t n = sequence_length(batch, config);
  if (logits.rows() != n) throw numerics::ShapeMismatch("loss_multimodal: logits rows != n");
  if (n < 2) return 0.0;
  double total = 0.0;
  for (Scale s : config.scales()) {
    total += numerics::cross_entropy_mean(logits, next_step_targets(batch, s, n));
  }
  return total;
}

LossAndGradient loss_and_gradient(const ModelParams& params,
                                  const std::vector<const TokenSeqs*>& batch,
                                  std::size_t micro_batch) {
  const std::size_t n = sequence_length(batch, params.config);
  LossAndGradient out{0.0, ModelParams::zeros(params.config)};
  if (n < 2) return out;
  micro_batch = std::max<std::size_t>(1, micro_batch);
  for (std::size_t lo = 0; lo < batch.size(); lo += micro_batch) {
    const std::size_t hi = std::min(batch.size(), lo + micro_batch);
    const std::vector<const TokenSeqs*> chunk(batch.begin() + static_cast<std::ptrdiff_t>(lo),
                                              batch.begin() + static_cast<std::ptrdiff_t>(hi));
    GradTape tape;
    const Var logits = forward_on_tape(tape, params, &out.grad, chunk);
    Var loss{};
    bool first = true;
    for (Scale s : params.config.scales()) {
      const Var ce = tape.cross_entropy_mean(logits, next_step_targets(chunk, s, n));
      loss = first ? ce : tape.add(loss, ce);
      first = false;
    }
    const double weight = static_cast<double>(chunk.size()) / static_cast<double>(batch.size());
    out.loss += weight * tape.value(loss)[0];
    tape.backward(loss, weight);
  }
  return out;
}

std::vector<int> top_k_in_range(const Tensor& logits, std::size_t row, const Vocabulary& vocab,
                                Scale scale, int k) {
  const auto [lo, hi] = vocab.range(scale);
  std::vector<int> ids(static_cast<std::size_t>(hi - lo));
  for (int id = lo; id < hi; ++id) ids[static_cast<std::size_t>(id - lo)] = id;
  const auto kk = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(std::max(k, 1)));
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(kk), ids.end(),
                    [&](int a, int b) {
                      const double la = logits(row, static_cast<std::size_t>(a));
                      const double lb = logits(row, static_cast<std::size_t>(b));
                      return la != lb ? la > lb : a < b;
                    });
  ids.resize(kk);
  return ids;
}

namespace {

int pick(const Tensor& logits, std::size_t row, const Vocabulary& vocab, Scale scale,
         const DecodeOptions& options, std::mt19937_64& rng) {
  if (options.mode == DecodeMode::Greedy || options.k <= 1) {
    return top_k_in_range(logits, row, vocab, scale, 1).front();
  }
  const auto candidates = top_k_in_range(logits, row, vocab, scale, options.k);
  const double top = logits(row, static_cast<std::size_t>(candidates.front()));
  std::vector<double> weights;
  double total = 0.0;
  for (int id : candidates) {
    weights.push_back(std::exp(logits(row, static_cast<std::size_t>(id)) - top));
    total += weights.back();
  }
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    acc += weights[i];
    if (u < acc) return candidates[i];
  }
  return candidates.back();
}

void project_tuple(TokenSeqs& seq, int location, const Vocabulary& vocab, int granularity) {
  const auto tuple = project_location(location, seq[0].size(), vocab, granularity);
  for (std::size_t s = 0; s < kScaleCount; ++s) seq[s].push_back(tuple[s]);
}

}  // namespace

std::array<int, kScaleCount> project_location(int location, std::size_t position,
                                             const Vocabulary& vocab, int granularity) {
  if (location == vocab.off_id(Scale::Location)) {
    return {vocab.off_id(Scale::Context), vocab.off_id(Scale::SpaceType),
            vocab.off_id(Scale::Building), location};
  }
  const auto& info = vocab.hierarchy().at(vocab.token(location));
  const Timestamp bin_start = static_cast<Timestamp>(position) * granularity * 60;
  return {vocab.id(Scale::Context, trajectory::to_string(trajectory::annotate_context(bin_start))),
          vocab.id(Scale::SpaceType, info.space_type), vocab.id(Scale::Building, info.building),
          location};
}

std::vector<TokenSeqs> decode_batch(const ModelParams& params, const Vocabulary& vocab,
                                    std::vector<TokenSeqs> prefixes, int steps,
                                    const DecodeOptions& options) {
  if (prefixes.empty()) return prefixes;
  if (steps < 0) throw std::invalid_argument("decode: negative step count");
  if (options.k < 1) throw std::invalid_argument("decode: k must be >= 1");
  if (vocab.size() != params.config.vocab_size) {
    throw std::invalid_argument("decode: vocabulary does not match the model");
  }
  const std::size_t len = prefixes.front()[static_cast<std::size_t>(Scale::Location)].size();
  if (len == 0) throw std::invalid_argument("decode: empty prefix");
  if (steps > params.config.n_max - static_cast<int>(len)) {
    throw StepLimitExceeded("decode: " + std::to_string(steps) + " steps after a prefix of " +
                            std::to_string(len) + " exceed n_max " +
                            std::to_string(params.config.n_max));
  }
  const bool project = options.project || params.config.modalities == 1;
  std::mt19937_64 rng(options.seed);
  for (int step = 0; step < steps; ++step) {
    std::vector<const TokenSeqs*> ptrs;
    for (const auto& p : prefixes) ptrs.push_back(&p);
    const Tensor logits = forward_logits_batch(ptrs, params);
    const std::size_t n = len + static_cast<std::size_t>(step);
    for (std::size_t b = 0; b < prefixes.size(); ++b) {
      const std::size_t row = b * n + n - 1;
      if (project) {
        project_tuple(prefixes[b], pick(logits, row, vocab, Scale::Location, options, rng), vocab,
                      options.granularity);
      } else {
        for (std::size_t s = 0; s < kScaleCount; ++s) {
          prefixes[b][s].push_back(pick(logits, row, vocab, static_cast<Scale>(s), options, rng));
        }
      }
    }
  }
  return prefixes;
}

TokenSeqs decode(const ModelParams& params, const Vocabulary& vocab, const TokenSeqs& prefix,
                 int steps, const DecodeOptions& options) {
  return decode_batch(params, vocab, {prefix}, steps, options).front();
}

}  // namespace mobmod::model
