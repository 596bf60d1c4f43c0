#include "mobmod/ingest/syslog_parser.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <span>
#include <sstream>
#include <vector>

#include "mobmod/common/hash.hpp"

namespace mobmod::ingest {

namespace {

std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::optional<int> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<std::string> normalize_mac(std::string_view mac) {
  if (mac.size() != 12) return std::nullopt;
  std::string out(mac);
  for (char& c : out) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return std::nullopt;
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

EventKindMap EventKindMap::defaults() {
  EventKindMap map;
  map.add(501100, EventKind::Assoc);
  map.add(501101, EventKind::Reassoc);
  map.add(501102, EventKind::Disassoc);
  map.add(501110, EventKind::Drift);
  map.add(522008, EventKind::Auth);
  map.add(522010, EventKind::Deauth);
  return map;
}

EventKindMap EventKindMap::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidKindMap("cannot open event kind map " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

EventKindMap EventKindMap::parse_csv(std::string_view text) {
  EventKindMap map;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "event_id,kind") {
        throw InvalidKindMap("event kind map: expected header event_id,kind");
      }
      continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw InvalidKindMap("event kind map line " + std::to_string(line_no) +
                           ": expected two columns");
    }
    const auto id = parse_int(trim(line.substr(0, comma)));
    const std::string_view kind_text = trim(line.substr(comma + 1));
    if (!id) {
      throw InvalidKindMap("event kind map line " + std::to_string(line_no) +
                           ": bad event id");
    }
    if (map.find(*id) || map.is_non_presence(*id)) {
      throw InvalidKindMap("event kind map: id " + std::to_string(*id) +
                           " mapped twice");
    }
    if (kind_text == "non-presence") {
      map.add_non_presence(*id);
    } else if (const auto kind = parse_event_kind(kind_text)) {
      map.add(*id, *kind);
    } else {
      throw InvalidKindMap("event kind map: unknown kind '" + std::string(kind_text) + "'");
    }
  }
  map.validate();
  return map;
}

void EventKindMap::add(int event_id, EventKind kind) { kinds_[event_id] = kind; }

void EventKindMap::add_non_presence(int event_id) { non_presence_.insert(event_id); }

std::optional<EventKind> EventKindMap::find(int event_id) const {
  const auto it = kinds_.find(event_id);
  if (it == kinds_.end()) return std::nullopt;
  return it->second;
}

void EventKindMap::validate() const {
  for (EventKind k : kAllEventKinds) {
    bool found = false;
    for (const auto& [id, kind] : kinds_) found = found || kind == k;
    if (!found) {
      throw InvalidKindMap("event kind map: no id for kind " + std::string(to_string(k)));
    }
  }
}

int EventKindMap::id_for(EventKind kind) const {
  for (const auto& [id, k] : kinds_) {
    if (k == kind) return id;
  }
  throw InvalidKindMap("event kind map: no id for kind " + std::string(to_string(kind)));
}

ParseOutcome parse_line(std::string_view line, const EventKindMap& kinds,
                        std::string_view salt, int year) {
  const auto tokens = split_ws(line);
  if (tokens.size() < 5) return MalformedLine{"too few fields"};

  const auto month = month_from_abbrev(tokens[0]);
  const auto day = parse_int(tokens[1]);
  const auto minutes = parse_clock_minutes(tokens[2]);
  if (!month || !day || !minutes || *minutes >= 1440 || tokens[2].size() != 8 || *day < 1 ||
      *day > 31) {
    return MalformedLine{"bad timestamp"};
  }
  const CivilDate date{year, *month, *day};
  const std::int64_t days = days_from_civil(date);
  if (civil_from_days(days) != date) return MalformedLine{"bad calendar date"};
  const auto seconds = parse_int(tokens[2].substr(6, 2));
  const Timestamp ts = days * kSecondsPerDay + static_cast<Timestamp>(*minutes) * 60 + *seconds;

  const std::string_view controller = tokens[3];
  const std::string_view id_token = tokens[4];
  if (id_token.size() < 3 || id_token.front() != '<' || id_token.back() != '>') {
    return MalformedLine{"missing event id"};
  }
  const auto event_id = parse_int(id_token.substr(1, id_token.size() - 2));
  if (!event_id) return MalformedLine{"bad event id"};

  const auto kind = kinds.find(*event_id);
  if (!kind) {
    if (kinds.is_non_presence(*event_id)) return SkipRecord{SkipReason::NonPresence, *event_id};
    return SkipRecord{SkipReason::UnknownId, *event_id};
  }

  PresenceEvent event;
  event.timestamp = ts;
  event.controller = std::string(controller);
  event.kind = *kind;
  const std::span<const std::string_view> body(tokens.data() + 5, tokens.size() - 5);

  if (is_auth_family(*kind)) {
    // user <uid> role <student|staff> <verb...> STA <mac>
    if (body.size() < 6 || body[0] != "user" || body[2] != "role" ||
        body[body.size() - 2] != "STA") {
      return MalformedLine{"auth body does not match grammar"};
    }
    const auto role = parse_role(body[3]);
    if (!role) return MalformedLine{"unknown role"};
    const auto mac = normalize_mac(body.back());
    if (!mac) return MalformedLine{"bad MAC"};
    event.username = anonymize(salt, body[1]);
    event.role = *role;
    event.device = anonymize(salt, *mac);
    return event;
  }

  // STA <mac> <verb...> AP <ap_id>
  if (body.size() < 4 || body[0] != "STA" || body[body.size() - 2] != "AP") {
    return MalformedLine{"association body does not match grammar"};
  }
  const auto mac = normalize_mac(body[1]);
  if (!mac) return MalformedLine{"bad MAC"};
  event.device = anonymize(salt, *mac);
  event.ap = std::string(body.back());
  return event;
}

}  // namespace mobmod::ingest
