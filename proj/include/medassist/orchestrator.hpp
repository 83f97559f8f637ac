#pragma once

// Event-driven assist-as-needed state machine: graded escalation from verbal
// reminders to full multimodal guidance, stepwise medication dialogue with
// repeat-on-timeout, and a pluggable intent interpreter.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "medassist/core/error.hpp"
#include "medassist/core/vec.hpp"
#include "medassist/geometry.hpp"

namespace medassist::orchestrator {

using geometry::PointingCommand;

enum class Condition { A, B };

inline std::string_view to_string(Condition c) { return c == Condition::A ? "A" : "B"; }

enum class AssistLevel { L1_VerbalReminder = 1, L2_VerbalPlusGesture = 2, L3_FullMultimodal = 3 };

inline std::string_view to_string(AssistLevel l) {
  switch (l) {
    case AssistLevel::L1_VerbalReminder: return "L1";
    case AssistLevel::L2_VerbalPlusGesture: return "L2";
    case AssistLevel::L3_FullMultimodal: return "L3";
  }
  return "?";
}

inline int rank(AssistLevel l) { return static_cast<int>(l); }

enum class GuidanceStep { LocateBottle, OpenBottle, TakePills, DrinkWater, ConfirmIntake };

inline constexpr std::array<GuidanceStep, 5> kStepOrder{GuidanceStep::LocateBottle, GuidanceStep::OpenBottle,
                                                        GuidanceStep::TakePills, GuidanceStep::DrinkWater,
                                                        GuidanceStep::ConfirmIntake};

inline std::string_view to_string(GuidanceStep s) {
  switch (s) {
    case GuidanceStep::LocateBottle: return "LocateBottle";
    case GuidanceStep::OpenBottle: return "OpenBottle";
    case GuidanceStep::TakePills: return "TakePills";
    case GuidanceStep::DrinkWater: return "DrinkWater";
    case GuidanceStep::ConfirmIntake: return "ConfirmIntake";
  }
  return "?";
}

enum class PhaseKind { Idle, Reminding, Navigating, Scanning, Pointing, StepGuidance, AwaitingFinalConfirm, Done, Aborted };

struct Phase {
  PhaseKind kind{PhaseKind::Idle};
  GuidanceStep step{GuidanceStep::LocateBottle};  // meaningful for StepGuidance only

  bool operator==(const Phase& o) const {
    return kind == o.kind && (kind != PhaseKind::StepGuidance || step == o.step);
  }
  bool terminal() const { return kind == PhaseKind::Done || kind == PhaseKind::Aborted; }
};

inline std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::Idle: return "Idle";
    case PhaseKind::Reminding: return "Reminding";
    case PhaseKind::Navigating: return "Navigating";
    case PhaseKind::Scanning: return "Scanning";
    case PhaseKind::Pointing: return "Pointing";
    case PhaseKind::StepGuidance: return "StepGuidance";
    case PhaseKind::AwaitingFinalConfirm: return "AwaitingFinalConfirm";
    case PhaseKind::Done: return "Done";
    case PhaseKind::Aborted: return "Aborted";
  }
  return "?";
}

inline std::string to_string(const Phase& p) {
  std::string s(to_string(p.kind));
  if (p.kind == PhaseKind::StepGuidance) s += "(" + std::string(to_string(p.step)) + ")";
  return s;
}

enum class IntentKind { Confirm, Deny, RepeatRequest, HelpRequest, Refusal, OffTopic, Unknown };

inline std::string_view to_string(IntentKind k) {
  switch (k) {
    case IntentKind::Confirm: return "Confirm";
    case IntentKind::Deny: return "Deny";
    case IntentKind::RepeatRequest: return "RepeatRequest";
    case IntentKind::HelpRequest: return "HelpRequest";
    case IntentKind::Refusal: return "Refusal";
    case IntentKind::OffTopic: return "OffTopic";
    case IntentKind::Unknown: return "Unknown";
  }
  return "?";
}

enum class UserActionKind { Acknowledge, LocatedBottle, OpenedBottle, TookPills, DrankWater, Failed };

inline std::string_view to_string(UserActionKind k) {
  switch (k) {
    case UserActionKind::Acknowledge: return "Acknowledge";
    case UserActionKind::LocatedBottle: return "LocatedBottle";
    case UserActionKind::OpenedBottle: return "OpenedBottle";
    case UserActionKind::TookPills: return "TookPills";
    case UserActionKind::DrankWater: return "DrankWater";
    case UserActionKind::Failed: return "Failed";
  }
  return "?";
}

/// Declaration order doubles as the tie-break order for simultaneous events.
enum class EventKind {
  ScheduleDue,
  StartNavigationPressed,
  RecordPressed,
  Intent,
  Timeout,
  Found,
  Miss,
  Exhausted,
  RoiUnreachable,
  UserAction,
  GazeConfusion,
  Arrived,
  GestureComplete,
};

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::ScheduleDue: return "ScheduleDue";
    case EventKind::StartNavigationPressed: return "StartNavigationPressed";
    case EventKind::RecordPressed: return "RecordPressed";
    case EventKind::Intent: return "Intent";
    case EventKind::Timeout: return "Timeout";
    case EventKind::Found: return "Found";
    case EventKind::Miss: return "Miss";
    case EventKind::Exhausted: return "Exhausted";
    case EventKind::RoiUnreachable: return "RoiUnreachable";
    case EventKind::UserAction: return "UserAction";
    case EventKind::GazeConfusion: return "GazeConfusion";
    case EventKind::Arrived: return "Arrived";
    case EventKind::GestureComplete: return "GestureComplete";
  }
  return "?";
}

struct FoundPayload {
  Vec3 target_base;            // bottle centroid in the base frame
  geometry::BoundingBox box;
  double pan{0.0};
  bool center_hit{true};  // false when segmentation fell back to the largest component
  bool operator==(const FoundPayload&) const = default;
};

struct AssistEvent {
  double time{0.0};
  EventKind kind{EventKind::ScheduleDue};
  std::string transcript;                        // RecordPressed
  IntentKind intent{IntentKind::Unknown};        // Intent
  PhaseKind timeout_phase{PhaseKind::Idle};      // Timeout
  int roi{-1};                                   // Found, Miss, RoiUnreachable, Arrived
  std::optional<FoundPayload> found;             // Found
  UserActionKind action{UserActionKind::Acknowledge};  // UserAction

  static AssistEvent at(double t, EventKind k) {
    AssistEvent e;
    e.time = t;
    e.kind = k;
    return e;
  }
  static AssistEvent record(double t, std::string text) {
    AssistEvent e = at(t, EventKind::RecordPressed);
    e.transcript = std::move(text);
    return e;
  }
  static AssistEvent intent_of(double t, IntentKind i) {
    AssistEvent e = at(t, EventKind::Intent);
    e.intent = i;
    return e;
  }
  static AssistEvent timeout(double t, PhaseKind p) {
    AssistEvent e = at(t, EventKind::Timeout);
    e.timeout_phase = p;
    return e;
  }
  static AssistEvent roi_event(double t, EventKind k, int roi) {
    AssistEvent e = at(t, k);
    e.roi = roi;
    return e;
  }
  static AssistEvent found_at(double t, int roi, FoundPayload payload) {
    AssistEvent e = at(t, EventKind::Found);
    e.roi = roi;
    e.found = payload;
    return e;
  }
  static AssistEvent user(double t, UserActionKind a) {
    AssistEvent e = at(t, EventKind::UserAction);
    e.action = a;
    return e;
  }
};

enum class ActionKind { Speak, Gesture, GazeAlign, NavigateTo, ScanRoi, RotateBase, Reposition, ShowTablet, NotifyCaregiver };

inline std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Speak: return "Speak";
    case ActionKind::Gesture: return "Gesture";
    case ActionKind::GazeAlign: return "GazeAlign";
    case ActionKind::NavigateTo: return "NavigateTo";
    case ActionKind::ScanRoi: return "ScanRoi";
    case ActionKind::RotateBase: return "RotateBase";
    case ActionKind::Reposition: return "Reposition";
    case ActionKind::ShowTablet: return "ShowTablet";
    case ActionKind::NotifyCaregiver: return "NotifyCaregiver";
  }
  return "?";
}

/// What a spoken utterance asks of the user.
enum class PromptKind { None, Reminder, FollowMe, Step, FinalConfirm };

inline std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::None: return "None";
    case PromptKind::Reminder: return "Reminder";
    case PromptKind::FollowMe: return "FollowMe";
    case PromptKind::Step: return "Step";
    case PromptKind::FinalConfirm: return "FinalConfirm";
  }
  return "?";
}

struct Action {
  ActionKind kind{ActionKind::Speak};
  std::string text;                         // Speak, ShowTablet, NotifyCaregiver
  PromptKind prompt{PromptKind::None};      // Speak
  GuidanceStep step{GuidanceStep::LocateBottle};  // Speak with PromptKind::Step
  int roi{-1};                              // NavigateTo, ScanRoi
  std::optional<PointingCommand> pointing;  // Gesture (empty for an attention gesture), GazeAlign
  double value{0.0};                        // RotateBase angle (rad), Reposition distance (m)

  static Action speak(std::string t, PromptKind p = PromptKind::None) {
    Action a;
    a.text = std::move(t);
    a.prompt = p;
    return a;
  }
  static Action of(ActionKind k) {
    Action a;
    a.kind = k;
    return a;
  }
};

// ---------------------------------------------------------------------------
// Intent interpretation.

class IntentInterpreter {
 public:
  virtual ~IntentInterpreter() = default;
  virtual IntentKind interpret(std::string_view transcript) const = 0;
};

/// Keyword/phrase matcher over lower-cased word tokens. Precedence:
/// Refusal > RepeatRequest > HelpRequest > Deny > Confirm > OffTopic.
class RuleBasedInterpreter final : public IntentInterpreter {
 public:
  IntentKind interpret(std::string_view transcript) const override {
    const auto words = tokenize(transcript);
    if (words.empty()) return IntentKind::Unknown;
    for (const auto& [kind, phrases] : table())
      for (const auto& phrase : phrases)
        if (contains_phrase(words, phrase)) return kind;
    return IntentKind::Unknown;
  }

  static std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
      const auto c = static_cast<unsigned char>(ch);
      if (std::isalnum(c) || c == '\'') {
        cur.push_back(static_cast<char>(std::tolower(c)));
      } else if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    for (auto& w : out) {
      // Fold contractions so "don't" and "dont" match the same entry.
      w.erase(std::remove(w.begin(), w.end(), '\''), w.end());
    }
    return out;
  }

 private:
  using Table = std::vector<std::pair<IntentKind, std::vector<std::vector<std::string>>>>;

  static bool contains_phrase(const std::vector<std::string>& words, const std::vector<std::string>& phrase) {
    if (phrase.size() > words.size()) return false;
    for (std::size_t i = 0; i + phrase.size() <= words.size(); ++i)
      if (std::equal(phrase.begin(), phrase.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    return false;
  }

  static const Table& table() {
    static const Table t = [] {
      auto P = [](std::initializer_list<const char*> phrases) {
        std::vector<std::vector<std::string>> out;
        for (const char* p : phrases) out.push_back(tokenize(p));
        return out;
      };
      return Table{
          {IntentKind::Refusal, P({"i won't", "i will not", "i don't want", "i do not want", "refuse",
                                   "leave me alone", "not taking", "go away", "stop it"})},
          {IntentKind::RepeatRequest, P({"again", "repeat", "pardon", "didn't hear", "did not hear",
                                         "what did you say", "say that", "sorry what"})},
          {IntentKind::HelpRequest, P({"help", "where", "can't find", "cannot find", "don't know", "how do i",
                                       "show me", "confused", "lost"})},
          {IntentKind::Deny, P({"no", "not yet", "not done", "haven't", "have not", "nope", "wait"})},
          {IntentKind::Confirm, P({"yes", "yeah", "done", "ok", "okay", "took", "finished", "i did", "got it",
                                   "found it", "i see it", "opened", "sure", "ready"})},
          {IntentKind::OffTopic, P({"weather", "television", "tv", "lunch", "dinner", "breakfast", "news",
                                    "music", "family", "football", "garden"})},
      };
    }();
    return t;
  }
};

/// Wraps an external backend (e.g. a hosted language model) and substitutes
/// Unknown when it does not answer within the declared timeout.
class TimedInterpreter final : public IntentInterpreter {
 public:
  using Backend = std::function<IntentKind(std::string)>;

  TimedInterpreter(Backend backend, std::chrono::milliseconds timeout)
      : backend_(std::move(backend)), timeout_(timeout) {}

  IntentKind interpret(std::string_view transcript) const override {
    auto task = std::make_shared<std::packaged_task<IntentKind()>>(
        [b = backend_, t = std::string(transcript)] { return b(t); });
    auto fut = task->get_future();
    std::thread([task] { (*task)(); }).detach();
    if (fut.wait_for(timeout_) != std::future_status::ready) return IntentKind::Unknown;
    try {
      return fut.get();
    } catch (...) {
      return IntentKind::Unknown;
    }
  }

 private:
  Backend backend_;
  std::chrono::milliseconds timeout_;
};

inline const IntentInterpreter& default_interpreter() {
  static const RuleBasedInterpreter rules;
  return rules;
}

inline IntentKind interpret(std::string_view transcript) { return default_interpreter().interpret(transcript); }

// ---------------------------------------------------------------------------
// Configuration and state.

struct OrchestratorConfig {
  Condition condition{Condition::B};
  AssistLevel start_level{AssistLevel::L3_FullMultimodal};
  AssistLevel max_level{AssistLevel::L3_FullMultimodal};
  int failure_threshold{2};
  double prompt_timeout{20.0};
  int max_repeats{2};
  int refusal_limit{2};
  bool gaze_confusion_enabled{false};
  bool strict{false};
  double min_standoff{0.6};
  Vec3 arm_origin{0.0, -0.15, 0.9};
  Vec3 head_origin{0.0, 0.0, 1.15};
  int num_rois{1};
  std::vector<std::string> roi_labels;  // hint order for Condition A
  const IntentInterpreter* interpreter{nullptr};

  /// Highest reachable level. Condition A is the passive verbal-only baseline.
  AssistLevel level_cap() const {
    return condition == Condition::A ? AssistLevel::L1_VerbalReminder : max_level;
  }
  AssistLevel initial_level() const {
    return condition == Condition::A ? AssistLevel::L1_VerbalReminder : std::min(start_level, max_level);
  }
};

struct OrchestratorState {
  Phase phase{};
  AssistLevel level{AssistLevel::L1_VerbalReminder};
  int failure_count{0};
  int repeat_count{0};
  int refusals{0};
  double clock{0.0};
  std::optional<double> deadline;  // Timeout fires here if nothing else happens
  int steps_confirmed{0};          // number of kStepOrder entries confirmed
  int current_roi{-1};
  int hints_given{0};
  int interaction_rounds{0};
  bool bottle_located{false};      // seen by the user (Condition A bookkeeping)
  std::optional<Vec3> target_base;

  static OrchestratorState initial(const OrchestratorConfig& cfg) {
    OrchestratorState s;
    s.level = cfg.initial_level();
    return s;
  }
};

struct StepOutcome {
  OrchestratorState state;
  std::vector<Action> actions;
  bool accepted{true};
  std::string note;  // reason when not accepted
};

// ---------------------------------------------------------------------------
// Prompts.

namespace text {
inline std::string reminder(AssistLevel level, bool repeat) {
  if (level == AssistLevel::L3_FullMultimodal) return "Time to take your medicine, follow me!";
  return repeat ? "Just a reminder: it is time to take your medicine." : "Time to take your medicine.";
}

inline std::string step_prompt(GuidanceStep s, int repeat) {
  switch (s) {
    case GuidanceStep::LocateBottle:
      return repeat == 0 ? "Your medicine bottle is right here. Press Start Recording when you see it."
                         : "Look where I am pointing. The medicine bottle is there.";
    case GuidanceStep::OpenBottle:
      return repeat == 0 ? "Open the bottle." : "Please twist the cap to open the bottle.";
    case GuidanceStep::TakePills:
      return repeat == 0 ? "Take the prescribed number of pills." : "Please take your pills from the bottle now.";
    case GuidanceStep::DrinkWater:
      return repeat == 0 ? "Drink water." : "Please have a sip of water with your pills.";
    case GuidanceStep::ConfirmIntake:
      return repeat == 0 ? "Did you take your medicine?" : "Please tell me when you have taken your medicine.";
  }
  return {};
}
}  // namespace text

/// Joint-attention actions for a detected target: optional base rotation so
/// the arm yaw stays within +-90 degrees, optional reposition to keep the
/// standoff, then head-gaze alignment and the pointing gesture.
inline std::vector<Action> gesture_action(const Vec3& target_base, const Vec3& arm_origin, double min_standoff,
                                          const Vec3& head_origin = {0.0, 0.0, 1.15}) {
  std::vector<Action> out;
  Vec3 target = target_base;
  const PointingCommand initial = geometry::pointing_angles(target, arm_origin);
  if (std::abs(initial.yaw) > kPi / 2.0) {
    const double turn = std::atan2(target.y, target.x);
    Action rot = Action::of(ActionKind::RotateBase);
    rot.value = turn;
    out.push_back(rot);
    target = Mat3::rot_z(-turn) * target;
  }
  const double planar = std::hypot(target.x, target.y);
  if (planar < min_standoff) {
    const double back = min_standoff - planar;
    Action rep = Action::of(ActionKind::Reposition);
    rep.value = back;
    out.push_back(rep);
    // Backing up along -x moves the target further ahead.
    target.x += back;
  }
  Action gaze = Action::of(ActionKind::GazeAlign);
  gaze.pointing = geometry::pointing_angles(target, head_origin);
  out.push_back(gaze);
  Action g = Action::of(ActionKind::Gesture);
  g.pointing = geometry::pointing_angles(target, arm_origin);
  out.push_back(g);
  return out;
}

namespace detail {

inline void set_prompt_deadline(OrchestratorState& s, const OrchestratorConfig& cfg) {
  s.deadline = s.clock + cfg.prompt_timeout;
}

inline std::vector<Action> reminder_actions(const OrchestratorState& s, bool repeat) {
  std::vector<Action> out;
  const bool l3 = s.level == AssistLevel::L3_FullMultimodal;
  out.push_back(Action::speak(text::reminder(s.level, repeat), l3 ? PromptKind::FollowMe : PromptKind::Reminder));
  if (rank(s.level) >= 2) out.push_back(Action::of(ActionKind::Gesture));
  if (l3) {
    Action tab = Action::of(ActionKind::ShowTablet);
    tab.text = "Start Navigation";
    out.push_back(tab);
  }
  return out;
}

inline std::vector<Action> step_actions(const OrchestratorState& s, const OrchestratorConfig& cfg,
                                        GuidanceStep step, int repeat) {
  std::vector<Action> out;
  Action sp = Action::speak(text::step_prompt(step, repeat), PromptKind::Step);
  sp.step = step;
  out.push_back(sp);
  if (rank(s.level) >= 2) {
    Action g = Action::of(ActionKind::Gesture);
    if (s.target_base) {
      try {
        g.pointing = geometry::pointing_angles(*s.target_base, cfg.arm_origin);
      } catch (const Error&) {
      }
    }
    out.push_back(g);
  }
  if (s.level == AssistLevel::L3_FullMultimodal) {
    Action tab = Action::of(ActionKind::ShowTablet);
    tab.text = std::string(to_string(step));
    out.push_back(tab);
  }
  return out;
}

inline void abort_with_caregiver(OrchestratorState& s, std::vector<Action>& out, std::string reason) {
  s.phase = {PhaseKind::Aborted};
  s.deadline.reset();
  out.push_back(Action::speak("I will let your caregiver know."));
  Action n = Action::of(ActionKind::NotifyCaregiver);
  n.text = std::move(reason);
  out.push_back(n);
}

inline void start_search(OrchestratorState& s, const OrchestratorConfig& cfg, std::vector<Action>& out) {
  s.phase = {PhaseKind::Navigating};
  s.deadline.reset();
  s.failure_count = 0;
  s.current_roi = 0;
  out.push_back(Action::speak("Looking for your medicine bottle."));
  Action nav = Action::of(ActionKind::NavigateTo);
  nav.roi = 0;
  out.push_back(nav);
  (void)cfg;
}

inline void enter_step(OrchestratorState& s, const OrchestratorConfig& cfg, std::vector<Action>& out) {
  const GuidanceStep step = kStepOrder[static_cast<std::size_t>(s.steps_confirmed)];
  s.phase = {PhaseKind::StepGuidance, step};
  s.repeat_count = 0;
  s.failure_count = 0;
  auto acts = step_actions(s, cfg, step, 0);
  out.insert(out.end(), acts.begin(), acts.end());
  set_prompt_deadline(s, cfg);
}

/// Raises the assist level by one. Returns false when already at the cap.
inline bool escalate(OrchestratorState& s, const OrchestratorConfig& cfg) {
  if (rank(s.level) >= rank(cfg.level_cap())) return false;
  s.level = static_cast<AssistLevel>(rank(s.level) + 1);
  return true;
}

/// Timeout, Deny or failed action while a reminder or final confirmation is pending.
inline void reminder_failure(OrchestratorState& s, const OrchestratorConfig& cfg, std::vector<Action>& out) {
  ++s.failure_count;
  const bool final_confirm = s.phase.kind == PhaseKind::AwaitingFinalConfirm;
  if (s.failure_count < cfg.failure_threshold) {
    if (final_confirm)
      out.push_back(Action::speak(text::step_prompt(GuidanceStep::ConfirmIntake, 1), PromptKind::FinalConfirm));
    else {
      auto acts = reminder_actions(s, true);
      out.insert(out.end(), acts.begin(), acts.end());
    }
    set_prompt_deadline(s, cfg);
    return;
  }
  s.failure_count = 0;
  if (!escalate(s, cfg)) {
    abort_with_caregiver(s, out, "no response at highest assistance level");
    return;
  }
  if (final_confirm) {
    out.push_back(Action::speak(text::step_prompt(GuidanceStep::ConfirmIntake, 1), PromptKind::FinalConfirm));
    if (rank(s.level) >= 2) out.push_back(Action::of(ActionKind::Gesture));
    set_prompt_deadline(s, cfg);
    return;
  }
  if (s.level == AssistLevel::L3_FullMultimodal) {
    out.push_back(Action::speak(text::reminder(s.level, false)));
    start_search(s, cfg, out);
    return;
  }
  auto acts = reminder_actions(s, false);
  out.insert(out.end(), acts.begin(), acts.end());
  set_prompt_deadline(s, cfg);
}

/// Anything short of a confirmation during a guidance step.
inline void step_failure(OrchestratorState& s, const OrchestratorConfig& cfg, std::vector<Action>& out) {
  const GuidanceStep step = s.phase.step;
  ++s.repeat_count;
  if (s.repeat_count <= cfg.max_repeats) {
    auto acts = step_actions(s, cfg, step, s.repeat_count);
    out.insert(out.end(), acts.begin(), acts.end());
    set_prompt_deadline(s, cfg);
    return;
  }
  if (!escalate(s, cfg)) {
    abort_with_caregiver(s, out, "step '" + std::string(to_string(step)) + "' not completed");
    return;
  }
  s.repeat_count = 0;
  if (s.level == AssistLevel::L3_FullMultimodal && step == GuidanceStep::LocateBottle && !s.target_base) {
    start_search(s, cfg, out);
    return;
  }
  auto acts = step_actions(s, cfg, step, 0);
  out.insert(out.end(), acts.begin(), acts.end());
  set_prompt_deadline(s, cfg);
}

inline void handle_refusal(OrchestratorState& s, const OrchestratorConfig& cfg, std::vector<Action>& out) {
  ++s.refusals;
  if (s.refusals >= cfg.refusal_limit) {
    abort_with_caregiver(s, out, "medication refused");
    return;
  }
  out.push_back(Action::speak("Your medicine helps you stay well. Shall we continue together?"));
  if (s.deadline) set_prompt_deadline(s, cfg);
}

inline std::string hint_text(OrchestratorState& s, const OrchestratorConfig& cfg) {
  if (cfg.roi_labels.empty()) return "Your medicine might be nearby. Take your time.";
  const auto& label = cfg.roi_labels[static_cast<std::size_t>(s.hints_given) % cfg.roi_labels.size()];
  ++s.hints_given;
  return "Your medicine might be at the " + label + ".";
}

inline void handle_intent(OrchestratorState& s, const OrchestratorConfig& cfg, IntentKind intent,
                          std::vector<Action>& out) {
  if (intent == IntentKind::Refusal) {
    handle_refusal(s, cfg, out);
    return;
  }
  switch (s.phase.kind) {
    case PhaseKind::Idle:
      out.push_back(Action::speak("Hello! I will remind you when it is time for your medicine."));
      return;
    case PhaseKind::Reminding:
      if (cfg.condition == Condition::A) {
        if (intent == IntentKind::HelpRequest) {
          out.push_back(Action::speak(hint_text(s, cfg)));
        } else if (intent == IntentKind::Confirm) {
          s.deadline.reset();
          s.failure_count = 0;
          out.push_back(Action::speak("Okay. Let me know if you need help."));
        } else if (intent == IntentKind::Deny && s.deadline) {
          reminder_failure(s, cfg, out);
        } else {
          out.push_back(Action::speak("You can ask me where your medicine might be."));
        }
        return;
      }
      switch (intent) {
        case IntentKind::Confirm:
          if (s.level == AssistLevel::L3_FullMultimodal) {
            start_search(s, cfg, out);
          } else {
            s.deadline.reset();
            s.failure_count = 0;
            out.push_back(Action::speak("Great. Let me know if you need help."));
          }
          return;
        case IntentKind::HelpRequest:
          if (s.level != AssistLevel::L3_FullMultimodal) {
            out.push_back(Action::speak(hint_text(s, cfg)));
            return;
          }
          [[fallthrough]];
        default:
          reminder_failure(s, cfg, out);
          return;
      }
    case PhaseKind::StepGuidance:
      if (intent == IntentKind::Confirm) {
        ++s.steps_confirmed;
        if (s.phase.step == GuidanceStep::ConfirmIntake) {
          s.phase = {PhaseKind::Done};
          s.deadline.reset();
          out.push_back(Action::speak("Well done! You have taken your medicine."));
        } else {
          enter_step(s, cfg, out);
        }
        return;
      }
      step_failure(s, cfg, out);
      return;
    case PhaseKind::AwaitingFinalConfirm:
      if (intent == IntentKind::Confirm) {
        s.steps_confirmed = static_cast<int>(kStepOrder.size());
        s.phase = {PhaseKind::Done};
        s.deadline.reset();
        out.push_back(Action::speak("Well done! You have taken your medicine."));
        return;
      }
      reminder_failure(s, cfg, out);
      return;
    case PhaseKind::Navigating:
    case PhaseKind::Scanning:
    case PhaseKind::Pointing:
      out.push_back(Action::speak("I am finding your medicine. Please stay with me."));
      return;
    default:
      return;
  }
}

}  // namespace detail

/// One transition. Events that are impossible in the current phase are
/// rejected: in strict mode with InvalidEvent, otherwise returned unaccepted
/// with the state unchanged.
inline StepOutcome step(const OrchestratorState& state, const AssistEvent& event, const OrchestratorConfig& cfg) {
  StepOutcome r{state, {}, true, {}};
  auto reject = [&](std::string why) {
    if (cfg.strict) throw Error(Errc::InvalidEvent, std::string(to_string(event.kind)) + " in " +
                                                        to_string(state.phase) + ": " + why);
    r.state = state;
    r.actions.clear();
    r.accepted = false;
    r.note = std::move(why);
    return r;
  };
  if (event.time < state.clock) return reject("event precedes the current clock");
  if (state.phase.terminal()) return reject("episode already finished");

  OrchestratorState& s = r.state;
  s.clock = event.time;
  auto& out = r.actions;
  const PhaseKind phase = s.phase.kind;
  const bool passive = cfg.condition == Condition::A;

  switch (event.kind) {
    case EventKind::ScheduleDue:
      if (phase != PhaseKind::Idle) return reject("reminder already active");
      s.phase = {PhaseKind::Reminding};
      out = detail::reminder_actions(s, false);
      detail::set_prompt_deadline(s, cfg);
      break;

    case EventKind::StartNavigationPressed:
      if (passive || phase != PhaseKind::Reminding || s.level != AssistLevel::L3_FullMultimodal)
        return reject("navigation not offered");
      detail::start_search(s, cfg, out);
      break;

    case EventKind::RecordPressed: {
      ++s.interaction_rounds;
      const IntentInterpreter& interp = cfg.interpreter ? *cfg.interpreter : default_interpreter();
      detail::handle_intent(s, cfg, interp.interpret(event.transcript), out);
      if (out.empty()) out.push_back(Action::speak("I am here if you need me."));
      break;
    }

    case EventKind::Intent:
      detail::handle_intent(s, cfg, event.intent, out);
      break;

    case EventKind::Timeout:
      if (event.timeout_phase != phase || !state.deadline) return reject("stale timeout");
      if (phase == PhaseKind::StepGuidance)
        detail::step_failure(s, cfg, out);
      else if (phase == PhaseKind::Reminding || phase == PhaseKind::AwaitingFinalConfirm)
        detail::reminder_failure(s, cfg, out);
      else
        return reject("no timeout in this phase");
      break;

    case EventKind::Arrived:
      if ((phase != PhaseKind::Navigating && phase != PhaseKind::Scanning) || event.roi != s.current_roi)
        return reject("not travelling to this ROI");
      s.phase = {PhaseKind::Scanning};
      {
        Action scan = Action::of(ActionKind::ScanRoi);
        scan.roi = event.roi;
        out.push_back(scan);
      }
      break;

    case EventKind::Found:
      if (phase != PhaseKind::Scanning || event.roi != s.current_roi || !event.found)
        return reject("not scanning this ROI");
      s.phase = {PhaseKind::Pointing};
      s.target_base = event.found->target_base;
      out = gesture_action(event.found->target_base, cfg.arm_origin, cfg.min_standoff, cfg.head_origin);
      out.push_back(Action::speak("Here is your medicine bottle."));
      break;

    case EventKind::Miss:
    case EventKind::RoiUnreachable:
      if ((phase != PhaseKind::Scanning && phase != PhaseKind::Navigating) || event.roi != s.current_roi)
        return reject("not visiting this ROI");
      s.phase = {PhaseKind::Scanning};
      if (event.roi + 1 < cfg.num_rois) {
        s.current_roi = event.roi + 1;
        Action nav = Action::of(ActionKind::NavigateTo);
        nav.roi = s.current_roi;
        out.push_back(nav);
      }
      break;

    case EventKind::Exhausted:
      if (phase != PhaseKind::Scanning && phase != PhaseKind::Navigating) return reject("no search in progress");
      out.push_back(Action::speak("I could not find your medicine."));
      detail::abort_with_caregiver(s, out, "medication not found at any ROI");
      break;

    case EventKind::GestureComplete:
      if (phase != PhaseKind::Pointing) return reject("no gesture in progress");
      s.steps_confirmed = 0;
      detail::enter_step(s, cfg, out);
      break;

    case EventKind::UserAction:
      switch (event.action) {
        case UserActionKind::Acknowledge:
          if (phase == PhaseKind::Reminding && s.level != AssistLevel::L3_FullMultimodal) {
            s.deadline.reset();
            s.failure_count = 0;
          }
          break;
        case UserActionKind::LocatedBottle:
          s.bottle_located = true;
          if (phase == PhaseKind::Reminding && !passive && s.level != AssistLevel::L3_FullMultimodal) {
            s.steps_confirmed = 1;
            out.push_back(Action::speak("You found it."));
            detail::enter_step(s, cfg, out);
          }
          break;
        case UserActionKind::OpenedBottle:
          if (phase == PhaseKind::Reminding && passive) {
            s.phase = {PhaseKind::AwaitingFinalConfirm};
            s.failure_count = 0;
            out.push_back(Action::speak(text::step_prompt(GuidanceStep::ConfirmIntake, 0), PromptKind::FinalConfirm));
            detail::set_prompt_deadline(s, cfg);
          }
          break;
        case UserActionKind::TookPills:
        case UserActionKind::DrankWater:
          break;
        case UserActionKind::Failed:
          if (phase == PhaseKind::StepGuidance)
            detail::step_failure(s, cfg, out);
          else if ((phase == PhaseKind::Reminding && s.deadline) || phase == PhaseKind::AwaitingFinalConfirm)
            detail::reminder_failure(s, cfg, out);
          else if (phase == PhaseKind::Reminding && !passive)
            detail::reminder_failure(s, cfg, out);
          break;
      }
      break;

    case EventKind::GazeConfusion:
      if (cfg.gaze_confusion_enabled && phase == PhaseKind::StepGuidance) {
        auto acts = detail::step_actions(s, cfg, s.phase.step, std::max(1, s.repeat_count));
        out.insert(out.end(), acts.begin(), acts.end());
        detail::set_prompt_deadline(s, cfg);
      }
      break;
  }
  return r;
}

}  // namespace medassist::orchestrator
