#pragma once

// Operator commands: run one episode, run paired batches, regenerate reports.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medassist/core/error.hpp"
#include "medassist/episode.hpp"
#include "medassist/metrics.hpp"
#include "medassist/scenario.hpp"
#include "medassist/session_log.hpp"
#include "medassist/usersim.hpp"

namespace medassist::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using orchestrator::Condition;

inline Condition parse_condition(const std::string& s) {
  if (s == "A" || s == "a") return Condition::A;
  if (s == "B" || s == "b") return Condition::B;
  throw Error(Errc::InvalidArgument, "condition must be A or B, got '" + s + "'");
}

inline std::string run_stem(Condition c, std::uint64_t seed) {
  return "run_" + std::string(to_string(c)) + "_seed" + std::to_string(seed);
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::FileNotFound, "cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error(Errc::FileNotFound, "write failed for '" + p.string() + "'");
}

inline Json metrics_json(const metrics::SessionMetrics& m) {
  Json j;
  j["condition"] = m.condition;
  j["seed"] = m.seed;
  j["time_to_locate"] = m.time_to_locate;
  j["censored"] = m.censored;
  j["interaction_rounds"] = m.interaction_rounds;
  j["completed"] = m.completed;
  j["final_phase"] = m.final_phase;
  j["confusion_events"] = m.confusion_events;
  j["level_trace"] = m.level_trace;
  return j;
}

struct RunFiles {
  Condition condition{Condition::B};
  std::uint64_t seed{0};
  std::string log, gaze, metrics;
  int exit_code{1};
  std::string reason;
  std::string error;
  std::optional<metrics::SessionMetrics> session;
};

/// Runs one episode and writes `<stem>.log.jsonl`, `<stem>.gaze.csv` and
/// `<stem>.metrics.json` into `dir`.
inline RunFiles run_to_dir(const scenario::ScenarioConfig& sc, Condition c, std::uint64_t seed, const fs::path& dir) {
  RunFiles f;
  f.condition = c;
  f.seed = seed;
  const auto res = episode::run_episode(sc, c, seed);
  fs::create_directories(dir);
  const std::string stem = run_stem(c, seed);
  f.log = stem + ".log.jsonl";
  f.gaze = stem + ".gaze.csv";
  f.metrics = stem + ".metrics.json";
  write_text(dir / f.log, log::to_text(res.log));
  write_text(dir / f.gaze, usersim::gaze_csv(res.gaze.samples));
  write_text(dir / f.metrics, metrics_json(res.metrics).dump(2) + "\n");
  f.exit_code = res.exit_code;
  f.reason = std::string(to_string(res.reason));
  f.session = res.metrics;
  return f;
}

inline Json manifest_json(const scenario::ScenarioConfig& sc, const std::vector<std::uint64_t>& seeds,
                          const std::vector<RunFiles>& runs) {
  Json j;
  j["artifact_version"] = log::kArtifactVersion;
  j["log_schema_version"] = log::kSchemaVersion;
  j["scenario"] = sc.source;
  j["scenario_hash"] = sc.hash;
  j["seeds"] = seeds;
  Json arr = Json::array();
  for (const auto& r : runs) {
    Json e;
    e["condition"] = std::string(to_string(r.condition));
    e["seed"] = r.seed;
    if (r.error.empty()) {
      e["log"] = r.log;
      e["gaze"] = r.gaze;
      e["metrics"] = r.metrics;
      e["reason"] = r.reason;
      e["exit_code"] = r.exit_code;
    } else {
      e["error"] = r.error;
    }
    arr.push_back(e);
  }
  j["runs"] = arr;
  return j;
}

/// `run`: exit 0 on Done, 2 on any other ending.
inline int cmd_run(const std::string& scenario_path, const std::string& condition, std::uint64_t seed,
                   const std::string& out_dir, std::ostream& out) {
  const auto sc = scenario::load_scenario(scenario_path);
  const Condition c = parse_condition(condition);
  const auto f = run_to_dir(sc, c, seed, out_dir);
  write_text(fs::path(out_dir) / "manifest.json", manifest_json(sc, {seed}, {f}).dump(2) + "\n");
  const auto& m = *f.session;
  out << "condition " << to_string(c) << " seed " << seed << ": " << f.reason << ", time-to-locate "
      << format_fixed(m.time_to_locate, 2) << " s" << (m.censored ? " (censored)" : "") << ", rounds "
      << m.interaction_rounds << "\n";
  return f.exit_code;
}

struct ReportFiles {
  metrics::MetricsReport report;
  std::string summary;
};

inline ReportFiles write_report(const fs::path& dir, const std::vector<metrics::SessionMetrics>& sessions,
                                const std::vector<metrics::Questionnaire>& questionnaires, const std::string& note) {
  ReportFiles r;
  r.report = metrics::aggregate(sessions, questionnaires);
  r.summary = metrics::summary_text(r.report);
  if (!note.empty()) r.summary += note;
  write_text(dir / "runs.csv", metrics::runs_csv(sessions));
  write_text(dir / "report.csv", metrics::report_csv(r.report));
  write_text(dir / "summary.txt", r.summary);
  return r;
}

/// `batch`: every seed under every requested condition, same seeds for each
/// condition. Runs may execute on `jobs` threads; outputs do not depend on it.
inline int cmd_batch(const std::string& scenario_path, int n_seeds, const std::string& out_dir,
                     const std::vector<std::string>& condition_names, const std::string& questionnaire_path,
                     int jobs, std::ostream& out, std::uint64_t first_seed = 1) {
  if (n_seeds < 1) throw Error(Errc::InvalidArgument, "--seeds must be >= 1");
  const auto sc = scenario::load_scenario(scenario_path);
  std::vector<Condition> conds;
  for (const auto& s : condition_names) {
    const Condition c = parse_condition(s);
    if (std::find(conds.begin(), conds.end(), c) == conds.end()) conds.push_back(c);
  }
  if (conds.empty()) conds = {Condition::A, Condition::B};
  std::sort(conds.begin(), conds.end());
  const auto questionnaires =
      questionnaire_path.empty() ? std::vector<metrics::Questionnaire>{} : metrics::load_questionnaires(questionnaire_path);

  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(first_seed + static_cast<std::uint64_t>(i));
  struct Job {
    Condition c;
    std::uint64_t seed;
  };
  std::vector<Job> work;
  for (auto seed : seeds)
    for (auto c : conds) work.push_back({c, seed});

  const fs::path dir(out_dir);
  const fs::path runs_dir = dir / "runs";
  fs::create_directories(runs_dir);
  std::vector<RunFiles> results(work.size());
  auto do_one = [&](std::size_t i) {
    try {
      results[i] = run_to_dir(sc, work[i].c, work[i].seed, runs_dir);
    } catch (const std::exception& e) {
      results[i].condition = work[i].c;
      results[i].seed = work[i].seed;
      results[i].error = e.what();
    }
  };
  const std::size_t threads = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::future<void>> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t i = t; i < work.size(); i += threads) do_one(i);
    }));
  for (auto& f : pool) f.get();

  std::vector<metrics::SessionMetrics> sessions;
  std::string failures;
  std::size_t failed = 0;
  for (auto& r : results) {
    if (!r.error.empty()) {
      ++failed;
      failures += "  " + std::string(to_string(r.condition)) + " seed " + std::to_string(r.seed) + ": " + r.error + "\n";
      continue;
    }
    r.log = "runs/" + r.log;
    r.gaze = "runs/" + r.gaze;
    r.metrics = "runs/" + r.metrics;
    sessions.push_back(*r.session);
  }
  write_text(dir / "manifest.json", manifest_json(sc, seeds, results).dump(2) + "\n");
  const std::string note =
      failed ? "\nPARTIAL RESULTS: " + std::to_string(failed) + " run(s) failed\n" + failures : std::string();
  if (sessions.empty()) {
    out << note;
    throw Error(Errc::EmptyCondition, "every run failed");
  }
  const auto rep = write_report(dir, sessions, questionnaires, note);
  out << rep.summary;
  return failed ? 1 : 0;
}

/// `report`: recomputes everything from stored logs and gaze files.
inline int cmd_report(const std::string& run_dir, const std::string& questionnaire_path, std::ostream& out) {
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir)) throw Error(Errc::MissingLogs, "'" + run_dir + "' is not a directory");
  std::vector<fs::path> logs;
  for (const auto& sub : {dir, dir / "runs"}) {
    if (!fs::is_directory(sub)) continue;
    for (const auto& e : fs::directory_iterator(sub)) {
      const auto name = e.path().filename().string();
      if (e.is_regular_file() && name.size() > 10 && name.ends_with(".log.jsonl")) logs.push_back(e.path());
    }
  }
  if (logs.empty()) throw Error(Errc::MissingLogs, "no *.log.jsonl files in '" + run_dir + "'");
  std::sort(logs.begin(), logs.end());
  std::vector<metrics::SessionMetrics> sessions;
  for (const auto& p : logs) {
    const auto lg = log::load_log(p.string());
    std::string gaze = p.string();
    gaze.replace(gaze.size() - std::string(".log.jsonl").size(), std::string::npos, ".gaze.csv");
    if (!fs::exists(gaze)) throw Error(Errc::MissingLogs, "gaze file '" + gaze + "' is missing for '" + p.string() + "'");
    sessions.push_back(metrics::session_metrics(lg, usersim::load_gaze_csv(gaze)));
  }
  const auto questionnaires =
      questionnaire_path.empty() ? std::vector<metrics::Questionnaire>{} : metrics::load_questionnaires(questionnaire_path);
  const auto rep = write_report(dir, sessions, questionnaires, {});
  out << rep.summary;
  return 0;
}

}  // namespace medassist::cli
