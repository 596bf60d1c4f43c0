#include <algorithm>

#include "mobmod/baselines/baselines.hpp"

namespace mobmod::baselines {

Sequence location_stream(const model::TokenSeqs& tokens, const model::Vocabulary& vocab) {
  const int first = vocab.range(model::Scale::Location).first;
  Sequence out;
  const auto& stream = tokens[static_cast<std::size_t>(model::Scale::Location)];
  out.reserve(stream.size());
  for (int id : stream) {
    if (!vocab.in_range(model::Scale::Location, id)) {
      throw TokenOutOfRange("token " + std::to_string(id) + " is not a location");
    }
    out.push_back(id - first);
  }
  return out;
}

int location_vocab_size(const model::Vocabulary& vocab) {
  const auto [lo, hi] = vocab.range(model::Scale::Location);
  return hi - lo;
}

Ranking rank(const std::vector<double>& distribution) {
  Ranking out;
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    if (distribution[i] > 0) out.emplace_back(static_cast<int>(i), distribution[i]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

NgramModel NgramModel::fit(const std::vector<Sequence>& sequences, int order) {
  if (order < 2 || order > 4) throw std::invalid_argument("n-gram order must be 2, 3 or 4");
  NgramModel m;
  m.order_ = order;
  std::vector<int> context;
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      for (std::size_t j = 0; j < static_cast<std::size_t>(order) && j <= i; ++j) {
        context.assign(seq.begin() + static_cast<std::ptrdiff_t>(i - j),
                       seq.begin() + static_cast<std::ptrdiff_t>(i));
        ++m.table_[context][seq[i]];
      }
    }
  }
  if (m.table_.empty()) throw EmptyCorpus("n-gram fit: corpus has no tokens");
  return m;
}

const NgramModel::Counts* NgramModel::counts(const std::vector<int>& context) const {
  const auto it = table_.find(context);
  return it == table_.end() ? nullptr : &it->second;
}

Ranking NgramModel::predict(const std::vector<int>& history) const {
  const std::size_t longest = std::min(history.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t j = longest + 1; j-- > 0;) {
    const std::vector<int> context(history.end() - static_cast<std::ptrdiff_t>(j), history.end());
    const Counts* c = counts(context);
    if (!c) continue;
    std::uint64_t total = 0;
    for (const auto& [token, n] : *c) total += n;
    if (total == 0) continue;
    Ranking out;
    for (const auto& [token, n] : *c) {
      out.emplace_back(token, static_cast<double>(n) / static_cast<double>(total));
    }
    // Map order makes ties resolve to the smaller token.
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
  }
  return {};
}

nlohmann::json NgramModel::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [context, counts] : table_) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [token, n] : counts) pairs.push_back({token, n});
    rows.push_back({{"context", context}, {"next", std::move(pairs)}});
  }
  return {{"order", order_}, {"counts", std::move(rows)}};
}

NgramModel NgramModel::from_json(const nlohmann::json& j) {
  NgramModel m;
  m.order_ = j.at("order");
  if (m.order_ < 2 || m.order_ > 4) throw std::invalid_argument("n-gram order must be 2, 3 or 4");
  for (const auto& row : j.at("counts")) {
    auto& counts = m.table_[row.at("context").get<std::vector<int>>()];
    for (const auto& pair : row.at("next")) counts[pair.at(0).get<int>()] = pair.at(1).get<std::uint64_t>();
  }
  return m;
}

}  // namespace mobmod::baselines
