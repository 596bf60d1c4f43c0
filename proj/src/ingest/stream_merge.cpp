#include "mobmod/ingest/stream_merge.hpp"

#include <algorithm>

namespace mobmod::ingest {

ReorderBuffer::ReorderBuffer(Timestamp window, Sink sink)
    : window_(window), sink_(std::move(sink)) {}

void ReorderBuffer::push(PresenceEvent event) {
  if (seen_any_ && event.timestamp < newest_ - window_) {
    ++late_drops_;
    return;
  }
  if (!seen_any_ || event.timestamp > newest_) newest_ = event.timestamp;
  seen_any_ = true;
  heap_.push(std::move(event));
  while (!heap_.empty() && heap_.top().timestamp < newest_ - window_) {
    PresenceEvent top = heap_.top();
    heap_.pop();
    sink_(std::move(top));
  }
}

void ReorderBuffer::finish() {
  while (!heap_.empty()) {
    PresenceEvent top = heap_.top();
    heap_.pop();
    sink_(std::move(top));
  }
}

std::vector<PresenceEvent> stream_merge(const std::vector<std::vector<PresenceEvent>>& inputs,
                                        const MergeConfig& config, MergeStats* stats) {
  MergeStats local;
  std::vector<std::vector<PresenceEvent>> sorted(inputs.size());
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    local.input_events += inputs[s].size();
    ReorderBuffer buffer(config.window,
                         [&out = sorted[s]](PresenceEvent&& e) { out.push_back(std::move(e)); });
    for (const auto& e : inputs[s]) buffer.push(e);
    buffer.finish();
    local.late_drops += buffer.late_drops();
  }

  // k-way merge; ties between streams resolve by the event order itself, so
  // the output is independent of stream order.
  using Cursor = std::pair<std::size_t, std::size_t>;  // stream, position
  auto later = [&sorted](const Cursor& a, const Cursor& b) {
    return sorted[b.first][b.second] < sorted[a.first][a.second];
  };
  std::priority_queue<Cursor, std::vector<Cursor>, decltype(later)> heap(later);
  for (std::size_t s = 0; s < sorted.size(); ++s) {
    if (!sorted[s].empty()) heap.emplace(s, 0);
  }
  std::vector<PresenceEvent> out;
  while (!heap.empty()) {
    auto [s, i] = heap.top();
    heap.pop();
    PresenceEvent& e = sorted[s][i];
    if (!out.empty() && out.back() == e) {
      ++local.duplicates;
    } else {
      out.push_back(std::move(e));
    }
    if (i + 1 < sorted[s].size()) heap.emplace(s, i + 1);
  }
  local.output_events = out.size();
  if (stats) *stats = local;
  return out;
}

}  // namespace mobmod::ingest
