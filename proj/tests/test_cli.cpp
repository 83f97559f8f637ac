#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "medassist/cli.hpp"

using namespace medassist;
namespace fs = std::filesystem;
using orchestrator::Action;
using orchestrator::AssistEvent;
using orchestrator::Condition;
using orchestrator::EventKind;
using orchestrator::PromptKind;
using orchestrator::UserActionKind;

namespace {

const std::string kLab = std::string(MEDASSIST_SCENARIOS) + "/lab.json";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("medassist_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Proc {
  int code;
  std::string out, err;
};

Proc run_cli(const std::string& args, const fs::path& work) {
  const auto out = work / "stdout.txt", err = work / "stderr.txt";
  const std::string cmd = std::string(MEDASSIST_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

// A user who always does the right thing after one second. In Condition A
// they ask for help twice before opening the bottle.
episode::Responder scripted(Condition c) {
  return [c](const Action& a, const orchestrator::OrchestratorState&, CounterRng&) {
    std::vector<usersim::TimedUserEvent> out;
    switch (a.prompt) {
      case PromptKind::Reminder:
        out.push_back({1.0, AssistEvent::user(0, UserActionKind::Acknowledge)});
        if (c == Condition::A) {
          out.push_back({2.0, AssistEvent::record(0, std::string(usersim::phrases::kHelp))});
          out.push_back({3.0, AssistEvent::record(0, std::string(usersim::phrases::kHelp))});
          out.push_back({4.0, AssistEvent::user(0, UserActionKind::OpenedBottle)});
        }
        break;
      case PromptKind::FollowMe:
        out.push_back({1.0, AssistEvent::at(0, EventKind::StartNavigationPressed)});
        break;
      case PromptKind::Step:
        if (a.step != orchestrator::GuidanceStep::ConfirmIntake)
          out.push_back({1.0, AssistEvent::user(0, usersim::matching_action(a.step))});
        out.push_back({1.5, AssistEvent::record(0, std::string(usersim::phrases::confirm(a.step)))});
        break;
      case PromptKind::FinalConfirm:
        out.push_back({1.0, AssistEvent::record(0, std::string(usersim::phrases::kFinal))});
        break;
      case PromptKind::None:
        break;
    }
    return out;
  };
}

}  // namespace

TEST(CliRun, WritesFilesAndExitsZeroOnDone) {
  const auto dir = scratch("run");
  const auto p = run_cli("run --scenario " + kLab + " --condition B --seed 7 --out " + (dir / "out").string(), dir);
  EXPECT_EQ(p.code, 0) << p.out << p.err;
  for (auto f : {"run_B_seed7.log.jsonl", "run_B_seed7.gaze.csv", "run_B_seed7.metrics.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  EXPECT_NE(p.out.find("condition B seed 7: Done"), std::string::npos) << p.out;
  const auto lg = log::load_log((dir / "out" / "run_B_seed7.log.jsonl").string());
  EXPECT_EQ(lg.end.final_phase, "Done");
  const auto m = nlohmann::json::parse(slurp(dir / "out" / "run_B_seed7.metrics.json"));
  EXPECT_EQ(m["completed"], true);
}

TEST(CliRun, MissingMapNamesThePath) {
  const auto dir = scratch("missing_map");
  auto j = nlohmann::json::parse(slurp(kLab));
  j["map"] = "does_not_exist.map";
  std::ofstream(dir / "bad.json") << j.dump(2);
  const auto p = run_cli("run --scenario " + (dir / "bad.json").string() + " --condition B --seed 1 --out " +
                             (dir / "out").string(),
                         dir);
  EXPECT_EQ(p.code, 1);
  EXPECT_NE(p.err.find("does_not_exist.map"), std::string::npos) << p.err;
  EXPECT_NE(p.err.find("FileNotFound"), std::string::npos) << p.err;
}

TEST(CliRun, RerunsAreByteIdentical) {
  const auto dir = scratch("rerun");
  for (auto sub : {"a", "b"}) {
    const auto p = run_cli("run --scenario " + kLab + " --condition A --seed 3 --out " + (dir / sub).string(), dir);
    ASSERT_NE(p.code, 1) << p.err;
  }
  for (auto f : {"run_A_seed3.log.jsonl", "run_A_seed3.gaze.csv", "run_A_seed3.metrics.json", "manifest.json"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(CliBatch, ReportReproducesBatchSummary) {
  const auto dir = scratch("batch");
  const auto b = run_cli("batch --scenario " + kLab + " --seeds 3 --jobs 2 --out " + (dir / "out").string(), dir);
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string summary = slurp(dir / "out" / "summary.txt");
  const std::string report_csv = slurp(dir / "out" / "report.csv");
  EXPECT_EQ(b.out, summary);
  const auto r = run_cli("report --dir " + (dir / "out").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, summary);
  EXPECT_EQ(slurp(dir / "out" / "report.csv"), report_csv);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["runs"].size(), 6u);
}

TEST(CliBatch, JobsDoNotChangeOutputs) {
  const auto dir = scratch("jobs");
  std::ostringstream s1, s2;
  cli::cmd_batch(kLab, 2, (dir / "one").string(), {}, "", 1, s1);
  cli::cmd_batch(kLab, 2, (dir / "two").string(), {}, "", 2, s2);
  EXPECT_EQ(s1.str(), s2.str());
  EXPECT_EQ(slurp(dir / "one" / "runs.csv"), slurp(dir / "two" / "runs.csv"));
  EXPECT_EQ(slurp(dir / "one" / "runs" / "run_B_seed2.log.jsonl"), slurp(dir / "two" / "runs" / "run_B_seed2.log.jsonl"));
}

TEST(CliBatch, SingleConditionSingleSeed) {
  const auto dir = scratch("single");
  std::ostringstream out;
  cli::cmd_batch(kLab, 1, dir.string(), {"A"}, "", 1, out);
  const std::string s = out.str();
  EXPECT_NE(s.find("\nA | "), std::string::npos);
  EXPECT_EQ(s.find("\nB | "), std::string::npos);
  EXPECT_NE(s.find("95% CI n/a"), std::string::npos);
}

TEST(CliReport, EmptyDirectoryIsMissingLogs) {
  const auto dir = scratch("empty");
  std::ostringstream out;
  EXPECT_EQ(code_of([&] { cli::cmd_report(dir.string(), "", out); }), Errc::MissingLogs);
  const auto p = run_cli("report --dir " + (dir / "nothing").string(), dir);
  EXPECT_EQ(p.code, 1);
  EXPECT_NE(p.err.find("MissingLogs"), std::string::npos);
}

TEST(CliReport, TamperedLogNamesTheRecord) {
  const auto dir = scratch("tamper");
  std::ostringstream out;
  ASSERT_EQ(cli::cmd_run(kLab, "B", 5, dir.string(), out), 0);
  const auto path = dir / "run_B_seed5.log.jsonl";
  std::istringstream lines(slurp(path));
  std::string line, text;
  int n = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::ordered_json::parse(line);
    if (j["type"] == "event" && j["seq"] == 3) j["timestamp"] = -5.0;
    text += j.dump() + "\n";
    ++n;
  }
  ASSERT_GT(n, 5);
  std::ofstream(path, std::ios::binary) << text;
  try {
    cli::cmd_report(dir.string(), "", out);
    FAIL() << "tampered log accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ValidationError);
    EXPECT_NE(std::string(e.what()).find("seq=3"), std::string::npos) << e.what();
  }
}

TEST(Scenario, ParseErrorsCarryLineNumbers) {
  const std::string text = slurp(kLab);
  // Break the value on the line that holds "episode_cap_s".
  std::string broken = text;
  const auto at = broken.find("\"episode_cap_s\": 600");
  ASSERT_NE(at, std::string::npos);
  broken.replace(at, std::string("\"episode_cap_s\": 600").size(), "\"episode_cap_s\": \"long\"");
  const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at), '\n'));
  try {
    scenario::parse_scenario(broken, "lab.json", MEDASSIST_SCENARIOS);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("lab.json:" + std::to_string(line) + ":"), std::string::npos) << e.what();
  }
  try {
    scenario::parse_scenario("{\n  \"name\": \"x\",\n  oops\n}", "s.json", MEDASSIST_SCENARIOS);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseError);
    EXPECT_NE(std::string(e.what()).find("s.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Episode, ConditionAScriptedHelpRequests) {
  const auto sc = scenario::load_scenario(kLab);
  episode::EpisodeOptions opt;
  opt.responder = scripted(Condition::A);
  const auto res = episode::run_episode(sc, Condition::A, 1, opt);
  EXPECT_EQ(res.reason, episode::EndReason::Done);
  // Two help requests plus the spoken final confirmation.
  EXPECT_EQ(res.metrics.interaction_rounds, 3);
  int hints = 0;
  for (const auto& r : res.log.records)
    for (const auto& a : r.actions) {
      EXPECT_NE(a["kind"], "NavigateTo");
      EXPECT_NE(a["kind"], "Gesture");
      if (a.value("text", std::string()).find("might be at the") != std::string::npos) ++hints;
    }
  EXPECT_EQ(hints, 2);
}

TEST(Episode, ConditionBBottleAtLastRoi) {
  auto sc = scenario::load_scenario(kLab);
  sc.placement.slots = {sc.placement.slots.back()};
  sc.detector.true_positive_rate = 1.0;
  sc.detector.false_positive_rate = 0.0;
  sc.detector.box_noise_sigma = 0.0;
  episode::EpisodeOptions opt;
  opt.responder = scripted(Condition::B);
  const auto res = episode::run_episode(sc, Condition::B, 4, opt);
  EXPECT_EQ(res.reason, episode::EndReason::Done);
  std::vector<std::pair<std::string, int>> search;
  for (const auto& r : res.log.records) {
    const auto k = r.event.value("kind", std::string());
    if (k == "Miss" || k == "Found" || k == "RoiUnreachable") search.emplace_back(k, r.event.value("roi", -1));
  }
  EXPECT_EQ(search, (std::vector<std::pair<std::string, int>>{{"Miss", 0}, {"Miss", 1}, {"Found", 2}}));

  // Steps follow the fixed order.
  std::vector<std::string> steps;
  for (const auto& r : res.log.records)
    for (const auto& a : r.actions)
      if (a.value("prompt", std::string()) == "Step" && (steps.empty() || steps.back() != a["step"]))
        steps.push_back(a["step"]);
  EXPECT_EQ(steps, (std::vector<std::string>{"LocateBottle", "OpenBottle", "TakePills", "DrinkWater", "ConfirmIntake"}));
}

TEST(Episode, ConditionBWithoutBottleIsInvalid) {
  auto sc = scenario::load_scenario(kLab);
  sc.placement.slots.clear();
  EXPECT_EQ(code_of([&] { episode::run_episode(sc, Condition::B, 1); }), Errc::ScenarioInvalid);
  // Condition A does not need one.
  EXPECT_NO_THROW(episode::run_episode(sc, Condition::A, 1));
}

TEST(Episode, SameSeedSameLog) {
  const auto sc = scenario::load_scenario(kLab);
  for (auto c : {Condition::A, Condition::B}) {
    const auto a = episode::run_episode(sc, c, 11), b = episode::run_episode(sc, c, 11);
    EXPECT_EQ(log::to_text(a.log), log::to_text(b.log));
    EXPECT_EQ(usersim::gaze_csv(a.gaze.samples), usersim::gaze_csv(b.gaze.samples));
  }
}
