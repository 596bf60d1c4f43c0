#include <fstream>

#include "mobmod/model/transformer.hpp"

namespace mobmod::model {

nlohmann::json tensors_to_json(const std::vector<std::string>& names,
                               const std::vector<const Tensor*>& tensors) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    out.push_back({{"name", names[i]}, {"shape", tensors[i]->shape()}, {"data", tensors[i]->values()}});
  }
  return out;
}

nlohmann::json checkpoint_header(const std::string& kind, const Vocabulary& vocab) {
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"kind", kind},
          {"vocab", vocab.to_json()}};
}

std::string checkpoint_kind(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat) {
    throw CheckpointError("not a mobmod checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + j.value("version", nlohmann::json()).dump());
  }
  return j.at("kind").get<std::string>();
}

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << j.dump() << '\n';
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

nlohmann::json transformer_checkpoint(const ModelParams& params, const Vocabulary& vocab) {
  nlohmann::json j = checkpoint_header(params.config.modalities == 1 ? "simple" : "transformer", vocab);
  j["config"] = to_json(params.config);
  j["tensors"] = tensors_to_json(params.names(), params.tensors());
  return j;
}

ModelParams transformer_from_checkpoint(const nlohmann::json& j, Vocabulary* vocab) {
  const std::string kind = checkpoint_kind(j);
  if (kind != "transformer" && kind != "simple") {
    throw CheckpointError("checkpoint holds a '" + kind + "' model, not a transformer");
  }
  try {
    const ModelConfig config = model_config_from_json(j.at("config"));
    Vocabulary v = Vocabulary::from_json(j.at("vocab"));
    if (v.size() != config.vocab_size) throw CheckpointError("vocabulary size disagrees with config");
    ModelParams p = ModelParams::zeros(config);
    const auto names = p.names();
    const auto tensors = p.tensors();
    const auto& stored = j.at("tensors");
    if (stored.size() != tensors.size()) throw CheckpointError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& t = stored[i];
      if (t.at("name").get<std::string>() != names[i]) {
        throw CheckpointError("checkpoint tensor " + std::to_string(i) + " is " +
                              t.at("name").get<std::string>() + ", expected " + names[i]);
      }
      if (t.at("shape").get<numerics::Shape>() != tensors[i]->shape()) {
        throw CheckpointError("checkpoint tensor " + names[i] + " has shape " + t.at("shape").dump() +
                              ", config requires " + numerics::shape_string(tensors[i]->shape()));
      }
      *tensors[i] = Tensor(tensors[i]->shape(), t.at("data").get<std::vector<double>>());
    }
    if (vocab) *vocab = std::move(v);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const InvalidModelConfig& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
}

}  // namespace mobmod::model
