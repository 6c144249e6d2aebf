#include "prefrank/service/event_log.hpp"

#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>

#include "prefrank/core/hash.hpp"
#include "prefrank/error.hpp"

namespace prefrank {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<EventType, std::string_view> kEventNames[] = {
    {EventType::kSessionCreated, "SESSION_CREATED"},     {EventType::kAspirationsSet, "ASPIRATIONS_SET"},
    {EventType::kDiscoveryAnswer, "DISCOVERY_ANSWER"},   {EventType::kDirectAdd, "DIRECT_ADD"},
    {EventType::kComparisonAnswer, "COMPARISON_ANSWER"}, {EventType::kUndo, "UNDO"},
    {EventType::kStageCompleted, "STAGE_COMPLETED"},
};

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(now - secs).count();
  const std::time_t t = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
  return out;
}

json body_of(const SessionEvent& e) {
  return json{{"timestamp", e.timestamp}, {"session_id", e.session_id},
              {"event_type", std::string(event_type_name(e.event_type))},
              {"payload", json::parse(e.payload)}, {"seq", e.seq}, {"prev_hash", e.prev_hash}};
}

struct ChainCheck {
  std::map<std::string, std::pair<std::int64_t, std::string>> heads;

  std::optional<std::string> accept(const SessionEvent& e) {
    auto it = heads.find(e.session_id);
    const std::int64_t expected_seq = it == heads.end() ? 0 : it->second.first + 1;
    const std::string expected_prev = it == heads.end() ? "" : it->second.second;
    if (e.seq != expected_seq) {
      return "session " + e.session_id + ": seq " + std::to_string(e.seq) + ", expected " + std::to_string(expected_seq);
    }
    if (e.prev_hash != expected_prev) return "session " + e.session_id + ": broken chain at seq " + std::to_string(e.seq);
    if (event_digest(e) != e.hash) return "session " + e.session_id + ": hash mismatch at seq " + std::to_string(e.seq);
    heads[e.session_id] = {e.seq, e.hash};
    return std::nullopt;
  }
};

}  // namespace

std::string_view event_type_name(EventType type) {
  for (const auto& [t, name] : kEventNames) {
    if (t == type) return name;
  }
  return "?";
}

EventType parse_event_type(std::string_view token) {
  for (const auto& [t, name] : kEventNames) {
    if (name == token) return t;
  }
  throw Error(ErrorCode::kParse, "unknown event type '" + std::string(token) + "'");
}

std::string event_digest(const SessionEvent& event) { return sha256_hex(event.prev_hash + body_of(event).dump()); }

std::string encode_event(const SessionEvent& event) {
  json j = body_of(event);
  j["hash"] = event.hash;
  return j.dump();
}

SessionEvent decode_event(std::string_view line) {
  try {
    const json j = json::parse(line);
    SessionEvent e;
    e.timestamp = j.at("timestamp").get<std::string>();
    e.session_id = j.at("session_id").get<std::string>();
    e.event_type = parse_event_type(j.at("event_type").get<std::string>());
    if (!j.at("payload").is_object()) throw Error(ErrorCode::kParse, "payload must be an object");
    e.payload = j.at("payload").dump();
    e.seq = j.at("seq").get<std::int64_t>();
    e.prev_hash = j.at("prev_hash").get<std::string>();
    e.hash = j.at("hash").get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kParse, std::string("event line: ") + ex.what());
  }
}

EventLog::EventLog(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw Error(ErrorCode::kIo, "cannot open event log " + path_.string());
  if (::flock(::fileno(file_), LOCK_EX | LOCK_NB) != 0) {
    std::fclose(file_);
    file_ = nullptr;
    throw Error(ErrorCode::kIo, "event log " + path_.string() + " is in use by another writer");
  }
  std::string content;
  {
    std::ifstream in(path_, std::ios::binary);
    content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  ChainCheck chain;
  std::size_t offset = 0, line_no = 0;
  while (offset < content.size()) {
    const auto nl = content.find('\n', offset);
    if (nl == std::string::npos) {
      recovery_.truncated_bytes = content.size() - offset;
      break;
    }
    ++line_no;
    const std::string_view line(content.data() + offset, nl - offset);
    SessionEvent e;
    std::optional<std::string> problem;
    try {
      e = decode_event(line);
      problem = chain.accept(e);
    } catch (const Error& ex) {
      problem = ex.what();
    }
    if (problem) {
      std::fclose(file_);
      file_ = nullptr;
      throw Error(ErrorCode::kCorruptLog, path_.string() + ":" + std::to_string(line_no) + ": " + *problem);
    }
    events_.push_back(std::move(e));
    offset = nl + 1;
  }
  if (recovery_.truncated_bytes > 0) fs::resize_file(path_, offset);
  heads_ = std::move(chain.heads);
  recovery_.events = events_.size();
}

EventLog::~EventLog() { close(); }

void EventLog::close() {
  std::lock_guard lock(mutex_);
  if (file_) {
    std::fflush(file_);
    ::fsync(::fileno(file_));
    std::fclose(file_);
    file_ = nullptr;
  }
}

SessionEvent EventLog::append(const std::string& session_id, EventType type, const std::string& payload) {
  std::lock_guard lock(mutex_);
  if (!file_) throw Error(ErrorCode::kIo, "event log is closed");
  SessionEvent e;
  e.timestamp = now_iso8601();
  e.session_id = session_id;
  e.event_type = type;
  e.payload = json::parse(payload).dump();
  auto it = heads_.find(session_id);
  e.seq = it == heads_.end() ? 0 : it->second.first + 1;
  e.prev_hash = it == heads_.end() ? "" : it->second.second;
  e.hash = event_digest(e);
  const std::string line = encode_event(e) + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0 ||
      ::fsync(::fileno(file_)) != 0) {
    throw Error(ErrorCode::kIo, "failed to append to " + path_.string());
  }
  heads_[session_id] = {e.seq, e.hash};
  events_.push_back(e);
  return e;
}

std::vector<SessionEvent> EventLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::vector<SessionEvent> EventLog::events_for(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  std::vector<SessionEvent> out;
  for (const auto& e : events_) {
    if (e.session_id == session_id) out.push_back(e);
  }
  return out;
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

std::vector<std::string> verify_event_log(const fs::path& path) {
  std::vector<std::string> problems;
  std::ifstream in(path, std::ios::binary);
  if (!in) return {"cannot read " + path.string()};
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ChainCheck chain;
  std::size_t offset = 0, line_no = 0;
  while (offset < content.size()) {
    auto nl = content.find('\n', offset);
    ++line_no;
    if (nl == std::string::npos) {
      problems.push_back("line " + std::to_string(line_no) + ": unterminated");
      break;
    }
    try {
      if (auto problem = chain.accept(decode_event(std::string_view(content.data() + offset, nl - offset)))) {
        problems.push_back("line " + std::to_string(line_no) + ": " + *problem);
      }
    } catch (const Error& ex) {
      problems.push_back("line " + std::to_string(line_no) + ": " + ex.what());
    }
    offset = nl + 1;
  }
  return problems;
}

}  // namespace prefrank
