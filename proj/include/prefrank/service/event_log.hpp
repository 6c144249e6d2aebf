#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefrank {

enum class EventType {
  kSessionCreated,
  kAspirationsSet,
  kDiscoveryAnswer,
  kDirectAdd,
  kComparisonAnswer,
  kUndo,
  kStageCompleted,
};

std::string_view event_type_name(EventType type);
EventType parse_event_type(std::string_view token);

struct SessionEvent {
  std::string timestamp;  // ISO-8601 UTC
  std::string session_id;
  EventType event_type = EventType::kSessionCreated;
  std::string payload = "{}";  // compact JSON object
  std::int64_t seq = 0;         // per session, from 0
  std::string prev_hash;        // hash of the session's previous event, empty for seq 0
  std::string hash;             // sha256(prev_hash + canonical event body)

  bool operator==(const SessionEvent&) const = default;
};

// One JSON object per line.
std::string encode_event(const SessionEvent& event);
SessionEvent decode_event(std::string_view line);
std::string event_digest(const SessionEvent& event);

struct LogRecovery {
  std::size_t events = 0;
  std::size_t truncated_bytes = 0;  // partial trailing line dropped on open
};

// Append-only JSONL store with a SHA-256 chain per session. Opening reads
// and verifies every line; a trailing line without its newline (an
// interrupted write) is cut off, anything else malformed raises
// Error(kCorruptLog). Appends are flushed and fsynced before returning.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  // Fills timestamp, seq and hashes, writes durably, returns the stored event.
  SessionEvent append(const std::string& session_id, EventType type, const std::string& payload);

  std::vector<SessionEvent> events() const;
  std::vector<SessionEvent> events_for(const std::string& session_id) const;
  std::size_t size() const;
  const LogRecovery& recovery() const { return recovery_; }
  const std::filesystem::path& path() const { return path_; }

  void close();

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  mutable std::mutex mutex_;
  std::vector<SessionEvent> events_;
  std::map<std::string, std::pair<std::int64_t, std::string>> heads_;  // session -> (last seq, last hash)
  LogRecovery recovery_;
};

// Re-reads a log file and checks line syntax, per-session seq order and the
// hash chain. Returns human-readable problems, empty when intact.
std::vector<std::string> verify_event_log(const std::filesystem::path& path);

}  // namespace prefrank
