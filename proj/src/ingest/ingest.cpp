#include "mobmod/ingest/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mobmod::ingest {

namespace {

void add(ParseStats& total, const ParseStats& part) {
  total.lines += part.lines;
  total.events += part.events;
  total.malformed += part.malformed;
  total.non_presence += part.non_presence;
  total.unknown_id += part.unknown_id;
}

void count(ParseStats& stats, const ParseOutcome& outcome) {
  if (std::holds_alternative<PresenceEvent>(outcome)) {
    ++stats.events;
  } else if (const auto* skip = std::get_if<SkipRecord>(&outcome)) {
    if (skip->reason == SkipReason::NonPresence) {
      ++stats.non_presence;
    } else {
      ++stats.unknown_id;
    }
  } else {
    ++stats.malformed;
  }
}

}  // namespace

std::vector<PresenceEvent> parse_stream(std::istream& in, const IngestOptions& options,
                                        ParseStats& stats) {
  std::vector<PresenceEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++stats.lines;
    auto outcome = parse_line(line, options.kinds, options.salt, options.year);
    count(stats, outcome);
    if (auto* event = std::get_if<PresenceEvent>(&outcome)) events.push_back(std::move(*event));
  }
  return events;
}


std::vector<PresenceEvent> ingest_streams(const std::vector<std::vector<std::string>>& streams,
                                          const IngestOptions& options, IngestReport* report) {
  IngestReport local;
  std::vector<std::vector<PresenceEvent>> parsed(streams.size());
  for (std::size_t s = 0; s < streams.size(); ++s) {
    for (const auto& line : streams[s]) {
      if (line.empty()) continue;
      ++local.parse.lines;
      auto outcome = parse_line(line, options.kinds, options.salt, options.year);
      count(local.parse, outcome);
      if (auto* e = std::get_if<PresenceEvent>(&outcome)) parsed[s].push_back(std::move(*e));
    }
  }
  auto merged = stream_merge(parsed, options.merge, &local.merge);
  if (report) *report = local;
  return merged;
}

std::vector<PresenceEvent> ingest_directory(const std::filesystem::path& dir,
                                            const IngestOptions& options,
                                            IngestReport* report) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("ingest: not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  struct Parsed {
    std::vector<PresenceEvent> events;
    ParseStats stats;
  };
  std::vector<std::future<Parsed>> jobs;
  for (const auto& file : files) {
    jobs.push_back(std::async(std::launch::async, [&options, file] {
      std::ifstream in(file);
      if (!in) throw std::runtime_error("ingest: cannot open " + file.string());
      Parsed p;
      p.events = parse_stream(in, options, p.stats);
      return p;
    }));
  }
  IngestReport local;
  std::vector<std::vector<PresenceEvent>> streams;
  for (auto& job : jobs) {
    Parsed p = job.get();
    add(local.parse, p.stats);
    streams.push_back(std::move(p.events));
  }
  auto merged = stream_merge(streams, options.merge, &local.merge);
  if (report) *report = local;
  return merged;
}

void write_events_jsonl(const std::vector<PresenceEvent>& events, std::ostream& out) {
  for (const auto& e : events) out << to_json(e).dump() << '\n';
}

std::vector<PresenceEvent> read_events_jsonl(std::istream& in) {
  std::vector<PresenceEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("events line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

std::vector<PresenceEvent> read_events_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open events file " + path.string());
  return read_events_jsonl(in);
}

}  // namespace mobmod::ingest
