#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mobmod/ingest/ap_map.hpp"
#include "mobmod/trajectory/trajectory.hpp"

namespace mobmod::model {

using trajectory::kScaleCount;
using trajectory::Scale;

class UnknownToken : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Four aligned id sequences, indexed by Scale.
using TokenSeqs = std::array<std::vector<int>, kScaleCount>;

/// Shared vocabulary: PAD = 0, then one contiguous id range per scale in the
/// order context, space type, building, location. Each range starts with that
/// scale's OFF token.
class Vocabulary {
 public:
  static constexpr int kPad = 0;

  Vocabulary() = default;
  /// Space types, buildings and locations named by the hierarchy.
  static Vocabulary from_hierarchy(const trajectory::LocationHierarchy& hierarchy);
  static Vocabulary from_ap_map(const ingest::ApMap& map);

  int size() const { return static_cast<int>(tokens_.size()); }
  /// Half-open id range [first, second) of a scale.
  std::pair<int, int> range(Scale s) const { return ranges_[index(s)]; }
  int off_id(Scale s) const { return ranges_[index(s)].first; }
  bool in_range(Scale s, int id) const;

  std::optional<int> find(Scale s, std::string_view token) const;
  /// Throws UnknownToken.
  int id(Scale s, std::string_view token) const;
  const std::string& token(int id) const;
  Scale scale_of(int id) const;

  const trajectory::LocationHierarchy& hierarchy() const { return hierarchy_; }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  static std::size_t index(Scale s) { return static_cast<std::size_t>(s); }
  void add_range(Scale s, const std::vector<std::string>& values);

  std::vector<std::string> tokens_;
  std::array<std::pair<int, int>, kScaleCount> ranges_{};
  std::array<std::map<std::string, int, std::less<>>, kScaleCount> lookup_;
  trajectory::LocationHierarchy hierarchy_;
};

/// Throws UnknownToken for any value missing from the vocabulary.
TokenSeqs tokenize(const trajectory::MultiScaleTrajectory& t, const Vocabulary& vocab);

trajectory::MultiScaleTrajectory detokenize(const TokenSeqs& tokens, const Vocabulary& vocab,
                                            const std::string& user, std::int64_t day,
                                            int granularity);

/// Default sidecar path: the output path with its extension replaced by
/// ".vocab.json".
std::filesystem::path vocab_sidecar_path(const std::filesystem::path& trajectories);

}  // namespace mobmod::model
