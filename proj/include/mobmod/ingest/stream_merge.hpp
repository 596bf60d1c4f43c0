#pragma once

#include <functional>
#include <queue>
#include <vector>

#include "mobmod/ingest/presence_event.hpp"

namespace mobmod::ingest {

struct MergeConfig {
  /// Out-of-order tolerance per input stream, in seconds.
  Timestamp window = 300;
};

struct MergeStats {
  std::size_t input_events = 0;
  std::size_t output_events = 0;
  std::size_t duplicates = 0;
  std::size_t late_drops = 0;
};

/// Bounded re-sorting of one nearly ordered stream. Events are released once
/// they fall `window` seconds behind the newest timestamp seen; an event that
/// arrives already behind that watermark is a late drop.
class ReorderBuffer {
 public:
  using Sink = std::function<void(PresenceEvent&&)>;

  ReorderBuffer(Timestamp window, Sink sink);

  void push(PresenceEvent event);
  void finish();
  std::size_t late_drops() const noexcept { return late_drops_; }

 private:
  struct Later {
    bool operator()(const PresenceEvent& a, const PresenceEvent& b) const { return b < a; }
  };

  Timestamp window_;
  Sink sink_;
  std::priority_queue<PresenceEvent, std::vector<PresenceEvent>, Later> heap_;
  bool seen_any_ = false;
  Timestamp newest_ = 0;
  std::size_t late_drops_ = 0;
};

/// Re-sorts each input within the window, then k-way merges into one stream in
/// the PresenceEvent total order, collapsing exact duplicates. The result does
/// not depend on how inputs were produced or in which order they are listed.
std::vector<PresenceEvent> stream_merge(const std::vector<std::vector<PresenceEvent>>& inputs,
                                        const MergeConfig& config = {},
                                        MergeStats* stats = nullptr);

}  // namespace mobmod::ingest
