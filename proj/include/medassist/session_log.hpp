#pragma once

// Line-delimited session log: one header line, one line per processed event,
// one closing line. Every line is a JSON object.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medassist/core/error.hpp"
#include "medassist/orchestrator.hpp"

namespace medassist::log {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

struct LogHeader {
  int schema_version{kSchemaVersion};
  std::string artifact_version{kArtifactVersion};
  std::string scenario;
  std::string scenario_hash;
  std::string condition;
  std::uint64_t seed{0};
  std::string profile;
  double episode_cap{0.0};
  double start_time{0.0};
};

struct LogRecord {
  std::int64_t seq{0};
  double t{0.0};
  std::string phase_before;
  std::string phase;
  std::string assist_level;
  Json event = Json::object();
  Json actions = Json::array();
  bool accepted{true};
  std::string note;
  int rounds{0};
};

struct LogEnd {
  double t{0.0};
  std::string final_phase;
  std::string reason;
  int interaction_rounds{0};
};

struct SessionLog {
  LogHeader header;
  std::vector<LogRecord> records;
  LogEnd end;

  bool completed() const { return end.final_phase == "Done"; }
};

inline Json event_json(const orchestrator::AssistEvent& e) {
  using orchestrator::EventKind;
  Json j;
  j["kind"] = std::string(to_string(e.kind));
  switch (e.kind) {
    case EventKind::RecordPressed: j["transcript"] = e.transcript; break;
    case EventKind::Intent: j["intent"] = std::string(to_string(e.intent)); break;
    case EventKind::Timeout: j["phase"] = std::string(to_string(e.timeout_phase)); break;
    case EventKind::Found:
      j["roi"] = e.roi;
      if (e.found) {
        const auto& p = e.found->target_base;
        j["target_base"] = {p.x, p.y, p.z};
        j["pan"] = e.found->pan;
        if (!e.found->center_hit) j["warning"] = "center pixel outside mask; used largest component";
      }
      break;
    case EventKind::Miss:
    case EventKind::RoiUnreachable:
    case EventKind::Arrived: j["roi"] = e.roi; break;
    case EventKind::UserAction: j["action"] = std::string(to_string(e.action)); break;
    default: break;
  }
  return j;
}

inline Json action_json(const orchestrator::Action& a) {
  using orchestrator::ActionKind;
  Json j;
  j["kind"] = std::string(to_string(a.kind));
  if (!a.text.empty()) j["text"] = a.text;
  if (a.kind == ActionKind::Speak && a.prompt != orchestrator::PromptKind::None) {
    j["prompt"] = std::string(to_string(a.prompt));
    if (a.prompt == orchestrator::PromptKind::Step) j["step"] = std::string(to_string(a.step));
  }
  if (a.roi >= 0) j["roi"] = a.roi;
  if (a.pointing) {
    j["yaw"] = a.pointing->yaw;
    j["pitch"] = a.pointing->pitch;
  }
  if (a.kind == ActionKind::RotateBase || a.kind == ActionKind::Reposition) j["value"] = a.value;
  return j;
}

inline Json to_json(const LogHeader& h) {
  Json j;
  j["type"] = "header";
  j["schema_version"] = h.schema_version;
  j["artifact_version"] = h.artifact_version;
  j["scenario"] = h.scenario;
  j["scenario_hash"] = h.scenario_hash;
  j["condition"] = h.condition;
  j["seed"] = h.seed;
  j["profile"] = h.profile;
  j["episode_cap"] = h.episode_cap;
  j["start_time"] = h.start_time;
  return j;
}

inline Json to_json(const LogRecord& r) {
  Json j;
  j["type"] = "event";
  j["seq"] = r.seq;
  j["timestamp"] = r.t;
  j["phase_before"] = r.phase_before;
  j["phase"] = r.phase;
  j["assist_level"] = r.assist_level;
  j["event"] = r.event;
  j["actions"] = r.actions;
  j["accepted"] = r.accepted;
  if (!r.note.empty()) j["note"] = r.note;
  j["rounds"] = r.rounds;
  return j;
}

inline Json to_json(const LogEnd& e) {
  Json j;
  j["type"] = "end";
  j["timestamp"] = e.t;
  j["final_phase"] = e.final_phase;
  j["reason"] = e.reason;
  j["interaction_rounds"] = e.interaction_rounds;
  return j;
}

inline void write_log(std::ostream& os, const SessionLog& log) {
  os << to_json(log.header).dump() << '\n';
  for (const auto& r : log.records) os << to_json(r).dump() << '\n';
  os << to_json(log.end).dump() << '\n';
}

inline std::string to_text(const SessionLog& log) {
  std::ostringstream os;
  write_log(os, log);
  return os.str();
}

namespace detail {

inline std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

template <class T>
T field(const Json& j, const char* key, const std::string& at) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::ValidationError, at + "missing field '" + key + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::ValidationError, at + "field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Parses and validates a log. Errors name the source, line and record.
inline SessionLog parse_log(std::istream& is, const std::string& source = "<log>") {
  SessionLog log;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false, have_end = false;
  double prev_t = -INFINITY;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string at = detail::where(source, lineno);
    if (have_end) throw Error(Errc::ValidationError, at + "content after the end record");
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::ParseError, at + "malformed record: " + e.what());
    }
    if (!j.is_object()) throw Error(Errc::ValidationError, at + "record is not an object");
    const auto type = detail::field<std::string>(j, "type", at);
    if (!have_header) {
      if (type != "header") throw Error(Errc::ValidationError, at + "first record must be the header");
      auto& h = log.header;
      h.schema_version = detail::field<int>(j, "schema_version", at);
      if (h.schema_version != kSchemaVersion)
        throw Error(Errc::ValidationError,
                    at + "unsupported schema_version " + std::to_string(h.schema_version));
      h.artifact_version = detail::field<std::string>(j, "artifact_version", at);
      h.scenario = detail::field<std::string>(j, "scenario", at);
      h.scenario_hash = detail::field<std::string>(j, "scenario_hash", at);
      h.condition = detail::field<std::string>(j, "condition", at);
      if (h.condition != "A" && h.condition != "B")
        throw Error(Errc::ValidationError, at + "condition must be A or B");
      h.seed = detail::field<std::uint64_t>(j, "seed", at);
      h.profile = detail::field<std::string>(j, "profile", at);
      h.episode_cap = detail::field<double>(j, "episode_cap", at);
      h.start_time = detail::field<double>(j, "start_time", at);
      prev_t = h.start_time;
      have_header = true;
      continue;
    }
    if (type == "event") {
      LogRecord r;
      r.seq = detail::field<std::int64_t>(j, "seq", at);
      const std::string rec = at + "record seq=" + std::to_string(r.seq) + ": ";
      if (r.seq != static_cast<std::int64_t>(log.records.size()))
        throw Error(Errc::ValidationError,
                    rec + "expected seq=" + std::to_string(log.records.size()));
      r.t = detail::field<double>(j, "timestamp", rec);
      if (!std::isfinite(r.t)) throw Error(Errc::ValidationError, rec + "non-finite timestamp");
      if (r.t < prev_t)
        throw Error(Errc::ValidationError, rec + "timestamp " + std::to_string(r.t) +
                                               " decreases from previous " + std::to_string(prev_t));
      prev_t = r.t;
      r.phase_before = detail::field<std::string>(j, "phase_before", rec);
      r.phase = detail::field<std::string>(j, "phase", rec);
      r.assist_level = detail::field<std::string>(j, "assist_level", rec);
      r.event = detail::field<Json>(j, "event", rec);
      if (!r.event.is_object() || !r.event.contains("kind"))
        throw Error(Errc::ValidationError, rec + "event must be an object with a kind");
      r.actions = detail::field<Json>(j, "actions", rec);
      if (!r.actions.is_array()) throw Error(Errc::ValidationError, rec + "actions must be an array");
      r.accepted = detail::field<bool>(j, "accepted", rec);
      if (auto it = j.find("note"); it != j.end() && it->is_string()) r.note = it->get<std::string>();
      r.rounds = detail::field<int>(j, "rounds", rec);
      log.records.push_back(std::move(r));
    } else if (type == "end") {
      auto& e = log.end;
      e.t = detail::field<double>(j, "timestamp", at);
      if (e.t < prev_t) throw Error(Errc::ValidationError, at + "end record: timestamp decreases");
      e.final_phase = detail::field<std::string>(j, "final_phase", at);
      e.reason = detail::field<std::string>(j, "reason", at);
      e.interaction_rounds = detail::field<int>(j, "interaction_rounds", at);
      have_end = true;
    } else {
      throw Error(Errc::ValidationError, at + "unknown record type '" + type + "'");
    }
  }
  if (!have_header) throw Error(Errc::ValidationError, source + ": empty log");
  if (!have_end) throw Error(Errc::ValidationError, source + ": missing end record");
  return log;
}

inline SessionLog parse_log_text(const std::string& text, const std::string& source = "<log>") {
  std::istringstream is(text);
  return parse_log(is, source);
}

inline SessionLog load_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::FileNotFound, "cannot open log '" + path + "'");
  return parse_log(in, path);
}

}  // namespace medassist::log
