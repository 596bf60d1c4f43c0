#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mobmod/ingest/presence_event.hpp"
#include "mobmod/ingest/stream_merge.hpp"
#include "mobmod/ingest/syslog_parser.hpp"

namespace mobmod::ingest {

struct IngestOptions {
  int year = 2019;
  std::string salt;
  EventKindMap kinds = EventKindMap::defaults();
  MergeConfig merge;
};

struct IngestReport {
  ParseStats parse;
  MergeStats merge;
};

/// Parses every line of one controller stream, in input order.
std::vector<PresenceEvent> parse_stream(std::istream& in, const IngestOptions& options,
                                        ParseStats& stats);

/// Parses and merges in-memory streams, one per controller.
std::vector<PresenceEvent> ingest_streams(const std::vector<std::vector<std::string>>& streams,
                                          const IngestOptions& options,
                                          IngestReport* report = nullptr);

/// Parses every regular file under `dir` (one stream per file, parsed
/// concurrently) and merges them.
std::vector<PresenceEvent> ingest_directory(const std::filesystem::path& dir,
                                            const IngestOptions& options,
                                            IngestReport* report = nullptr);

void write_events_jsonl(const std::vector<PresenceEvent>& events, std::ostream& out);
std::vector<PresenceEvent> read_events_jsonl(std::istream& in);
std::vector<PresenceEvent> read_events_jsonl(const std::filesystem::path& path);

}  // namespace mobmod::ingest
