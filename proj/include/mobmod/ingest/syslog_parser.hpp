#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "mobmod/ingest/presence_event.hpp"

namespace mobmod::ingest {

class InvalidKindMap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vendor event id to presence kind. Ids may also be registered as known
/// non-presence events, which the parser skips rather than reporting unknown.
class EventKindMap {
 public:
  /// 501100 assoc, 501101 reassoc, 501102 disassoc, 501110 drift,
  /// 522008 auth, 522010 deauth.
  static EventKindMap defaults();
  /// CSV with header `event_id,kind`; kind is one of the six presence kinds
  /// or `non-presence`. Every presence kind must be mapped.
  static EventKindMap load_csv(const std::filesystem::path& path);
  static EventKindMap parse_csv(std::string_view text);

  void add(int event_id, EventKind kind);
  void add_non_presence(int event_id);

  std::optional<EventKind> find(int event_id) const;
  bool is_non_presence(int event_id) const { return non_presence_.count(event_id) > 0; }
  /// Throws InvalidKindMap unless every presence kind has at least one id.
  void validate() const;
  /// First id registered for `kind` (used by the syslog emitter).
  int id_for(EventKind kind) const;

 private:
  std::map<int, EventKind> kinds_;
  std::set<int> non_presence_;
};

enum class SkipReason { NonPresence, UnknownId };

struct SkipRecord {
  SkipReason reason;
  int event_id;
};

struct MalformedLine {
  std::string reason;
};

using ParseOutcome = std::variant<PresenceEvent, SkipRecord, MalformedLine>;

/// Parses `MMM DD hh:mm:ss <controller> <<event_id>> <body>`. Device MACs
/// (lowercased) and user ids are replaced by anonymize(salt, raw).
ParseOutcome parse_line(std::string_view line, const EventKindMap& kinds,
                        std::string_view salt, int year);

struct ParseStats {
  std::size_t lines = 0;
  std::size_t events = 0;
  std::size_t malformed = 0;
  std::size_t non_presence = 0;
  std::size_t unknown_id = 0;
};

}  // namespace mobmod::ingest
