#include "mobmod/baselines/baselines.hpp"
#include "mobmod/model/transformer.hpp"

namespace mobmod::baselines {

namespace {

const nlohmann::json& body(const nlohmann::json& j, const std::string& kind, model::Vocabulary* vocab) {
  const std::string found = model::checkpoint_kind(j);
  if (found != kind) {
    throw model::CheckpointError("checkpoint holds a '" + found + "' model, not " + kind);
  }
  try {
    if (vocab) *vocab = model::Vocabulary::from_json(j.at("vocab"));
    return j.at("model");
  } catch (const nlohmann::json::exception& e) {
    throw model::CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace

nlohmann::json ngram_checkpoint(const NgramModel& m, const model::Vocabulary& vocab) {
  auto j = model::checkpoint_header("ngram", vocab);
  j["model"] = m.to_json();
  return j;
}

nlohmann::json hmm_checkpoint(const HmmModel& m, const model::Vocabulary& vocab) {
  auto j = model::checkpoint_header("hmm", vocab);
  j["model"] = m.to_json();
  return j;
}

NgramModel ngram_from_checkpoint(const nlohmann::json& j, model::Vocabulary* vocab) {
  const auto& m = body(j, "ngram", vocab);
  try {
    return NgramModel::from_json(m);
  } catch (const nlohmann::json::exception& e) {
    throw model::CheckpointError(std::string("malformed n-gram: ") + e.what());
  }
}

HmmModel hmm_from_checkpoint(const nlohmann::json& j, model::Vocabulary* vocab) {
  const auto& m = body(j, "hmm", vocab);
  try {
    return HmmModel::from_json(m);
  } catch (const nlohmann::json::exception& e) {
    throw model::CheckpointError(std::string("malformed hmm: ") + e.what());
  }
}

}  // namespace mobmod::baselines
