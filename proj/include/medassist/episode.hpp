#pragma once

// Discrete-event episode loop: the orchestrator consumes one totally ordered
// event queue fed by the simulated user, the ROI sequencer and deadlines.

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "medassist/core/error.hpp"
#include "medassist/core/rng.hpp"
#include "medassist/geometry.hpp"
#include "medassist/metrics.hpp"
#include "medassist/navigation.hpp"
#include "medassist/orchestrator.hpp"
#include "medassist/scenario.hpp"
#include "medassist/session_log.hpp"
#include "medassist/usersim.hpp"
#include "medassist/worldsim.hpp"

namespace medassist::episode {

using orchestrator::Action;
using orchestrator::ActionKind;
using orchestrator::AssistEvent;
using orchestrator::Condition;
using orchestrator::EventKind;
using orchestrator::OrchestratorState;
using orchestrator::PhaseKind;
using orchestrator::PromptKind;

/// Produces the user's reaction to a prompt; delays are relative to the prompt.
using Responder = std::function<std::vector<usersim::TimedUserEvent>(const Action& prompt, const OrchestratorState& state,
                                                                     CounterRng& rng)>;

struct EpisodeOptions {
  Responder responder;  // empty: sample from the scenario's user profile
  const orchestrator::IntentInterpreter* interpreter{nullptr};
  bool strict{false};
};

enum class EndReason { Done, Aborted, TimeCap, Stalled };

inline std::string_view to_string(EndReason r) {
  switch (r) {
    case EndReason::Done: return "Done";
    case EndReason::Aborted: return "Aborted";
    case EndReason::TimeCap: return "TimeCap";
    case EndReason::Stalled: return "Stalled";
  }
  return "?";
}

struct EpisodeResult {
  log::SessionLog log;
  usersim::GazeStream gaze;
  metrics::SessionMetrics metrics;
  EndReason reason{EndReason::Stalled};
  int exit_code{2};
};

namespace detail {

struct Pending {
  AssistEvent event;
  std::uint64_t seq{0};
  std::uint64_t generation{0};  // prompt generation for user events, 0 otherwise
  bool from_user{false};
};

struct Later {
  bool operator()(const Pending& a, const Pending& b) const {
    if (a.event.time != b.event.time) return a.event.time > b.event.time;
    if (a.event.kind != b.event.kind) return a.event.kind > b.event.kind;
    return a.seq > b.seq;
  }
};

inline bool is_prompt(const Action& a) { return a.kind == ActionKind::Speak && a.prompt != PromptKind::None; }

/// Checks that Condition B can terminate without relying on the time cap.
inline void check_condition_b(const scenario::ScenarioConfig& sc, const std::vector<worldsim::SceneObject>& objects,
                              const navigation::Costmap& cm) {
  const bool bottle = std::any_of(objects.begin(), objects.end(), [](const worldsim::SceneObject& o) {
    return o.kind == worldsim::ObjectKind::PillBottle;
  });
  if (!bottle) throw Error(Errc::ScenarioInvalid, sc.source + ": no pill bottle placed for Condition B");
  if (sc.detector.true_positive_rate == 0.0 && sc.detector.false_positive_rate == 0.0)
    throw Error(Errc::ScenarioInvalid, sc.source + ": detector rates are both zero; the bottle can never be found");
  bool reachable = false;
  for (const auto& roi : sc.rois) {
    try {
      navigation::plan_global(cm, sc.start_pose.x, sc.start_pose.y, roi.pose.x, roi.pose.y);
      reachable = true;
      break;
    } catch (const Error& e) {
      if (e.code() != Errc::NoPath && e.code() != Errc::LethalEndpoint) throw;
    }
  }
  if (!reachable) throw Error(Errc::ScenarioInvalid, sc.source + ": no ROI is reachable from the start pose");
}

/// Applies a base rotation or reposition issued before a gesture.
inline void apply_body_action(const Action& a, worldsim::RobotState& robot, const worldsim::OccupancyGrid& grid) {
  if (a.kind == ActionKind::RotateBase) {
    robot.pose.heading = wrap_angle(robot.pose.heading + a.value);
  } else if (a.kind == ActionKind::Reposition) {
    const double nx = robot.pose.x - a.value * std::cos(robot.pose.heading);
    const double ny = robot.pose.y - a.value * std::sin(robot.pose.heading);
    if (!grid.blocked_world(nx, ny)) robot.pose.x = nx, robot.pose.y = ny;
  }
}

}  // namespace detail

inline EpisodeResult run_episode(const scenario::ScenarioConfig& sc, Condition condition, std::uint64_t seed,
                                 const EpisodeOptions& options = {}) {
  orchestrator::OrchestratorConfig cfg = sc.orchestrator;
  cfg.condition = condition;
  cfg.strict = options.strict;
  if (options.interpreter) cfg.interpreter = options.interpreter;

  worldsim::Scene scene{sc.grid, scenario::place_objects(sc, condition, seed)};
  const navigation::Costmap costmap = navigation::build_costmap(sc.nav_grid, sc.inflation);
  if (condition == Condition::B) detail::check_condition_b(sc, scene.objects, costmap);

  navigation::SequencerConfig seq_cfg;
  seq_cfg.navigate = sc.navigate;
  seq_cfg.camera = sc.camera;
  seq_cfg.detector = sc.detector;
  seq_cfg.pan_schedule = sc.pan_schedule;
  navigation::RoiSequencer sequencer(scene, costmap, sc.rois, seq_cfg);

  const CounterRng root(seed);
  CounterRng user_rng = root.fork("user");
  CounterRng world_rng = root.fork("world");
  CounterRng gaze_rng = root.fork("gaze");

  Responder responder = options.responder;
  if (!responder) {
    const usersim::PromptContext ctx{condition, sc.search};
    responder = [&sc, ctx](const Action& a, const OrchestratorState&, CounterRng& rng) {
      return usersim::respond(sc.profile, a, ctx, rng);
    };
  }

  worldsim::RobotState robot;
  robot.pose = sc.start_pose;
  robot.camera_mount = worldsim::make_camera_mount(sc.mount_xyz, sc.mount_tilt);

  EpisodeResult res;
  auto& lg = res.log;
  lg.header.scenario = sc.name;
  lg.header.scenario_hash = sc.hash;
  lg.header.condition = std::string(to_string(condition));
  lg.header.seed = seed;
  lg.header.profile = sc.profile.name;
  lg.header.episode_cap = sc.episode_cap;
  lg.header.start_time = 0.0;

  std::priority_queue<detail::Pending, std::vector<detail::Pending>, detail::Later> queue;
  std::uint64_t next_seq = 0;
  std::uint64_t generation = 0;
  auto push = [&](AssistEvent e, bool from_user = false) {
    queue.push({std::move(e), next_seq++, from_user ? generation : 0, from_user});
  };

  usersim::EpisodeTimeline timeline;
  std::vector<double> user_times;
  std::vector<std::pair<double, double>> timeout_windows;

  OrchestratorState state = OrchestratorState::initial(cfg);
  push(AssistEvent::at(sc.schedule_time, EventKind::ScheduleDue));
  double now = 0.0;
  res.reason = EndReason::Stalled;

  while (!queue.empty()) {
    detail::Pending p = queue.top();
    queue.pop();
    if (p.event.time > sc.episode_cap) {
      res.reason = EndReason::TimeCap;
      now = sc.episode_cap;
      break;
    }
    if (p.from_user && p.generation != generation) continue;
    if (p.event.kind == EventKind::Timeout && (!state.deadline || *state.deadline != p.event.time)) continue;

    const AssistEvent& ev = p.event;
    now = ev.time;
    const auto phase_before = state.phase;
    const auto outcome = orchestrator::step(state, ev, cfg);

    log::LogRecord rec;
    rec.seq = static_cast<std::int64_t>(lg.records.size());
    rec.t = ev.time;
    rec.phase_before = orchestrator::to_string(phase_before);
    rec.phase = orchestrator::to_string(outcome.state.phase);
    rec.assist_level = std::string(to_string(outcome.state.level));
    rec.event = log::event_json(ev);
    for (const auto& a : outcome.actions) rec.actions.push_back(log::action_json(a));
    rec.accepted = outcome.accepted;
    rec.note = outcome.note;
    rec.rounds = outcome.state.interaction_rounds;
    lg.records.push_back(std::move(rec));

    if (!outcome.accepted) continue;
    const OrchestratorState before = state;
    state = outcome.state;

    if (p.from_user) {
      user_times.push_back(ev.time);
      if (ev.kind == EventKind::RecordPressed || ev.kind == EventKind::StartNavigationPressed)
        timeline.presses.push_back(ev.time);
      if (ev.kind == EventKind::UserAction && ev.action == orchestrator::UserActionKind::LocatedBottle && !timeline.located)
        timeline.located = ev.time;
    }
    if (ev.kind == EventKind::Timeout &&
        (phase_before.kind == PhaseKind::StepGuidance || phase_before.kind == PhaseKind::AwaitingFinalConfirm))
      timeout_windows.emplace_back(ev.time - cfg.prompt_timeout, ev.time);

    for (const Action& a : outcome.actions) {
      if (a.kind == ActionKind::Speak) timeline.speech.push_back(now);
      if (detail::is_prompt(a)) {
        ++generation;
        for (auto& r : responder(a, state, user_rng)) {
          r.event.time = now + r.delay;
          push(std::move(r.event), true);
        }
      }
      switch (a.kind) {
        case ActionKind::NavigateTo: {
          double clock = now;
          const auto ne = sequencer.travel(a.roi, robot, clock);
          push(AssistEvent::roi_event(clock, ne.kind == navigation::NavEventKind::Arrived ? EventKind::Arrived
                                                                                         : EventKind::RoiUnreachable,
                                      a.roi));
          break;
        }
        case ActionKind::ScanRoi: {
          double clock = now;
          auto ne = sequencer.scan(a.roi, robot, clock, world_rng);
          std::optional<orchestrator::FoundPayload> payload;
          if (ne.kind == navigation::NavEventKind::Found && ne.scan && ne.scan->detection) {
            try {
              const auto est = geometry::localize_target(ne.scan->frame.depth, ne.scan->detection->box,
                                                         sc.camera.intrinsics, ne.scan->base_from_camera);
              payload = orchestrator::FoundPayload{est.centroid_base, ne.scan->detection->box, ne.scan->pan,
                                                 est.mask.center_hit};
            } catch (const Error&) {
              // An unusable depth patch counts as a miss.
            }
          }
          if (payload) push(AssistEvent::found_at(clock, a.roi, *payload));
          else push(AssistEvent::roi_event(clock, EventKind::Miss, a.roi));
          break;
        }
        case ActionKind::RotateBase:
        case ActionKind::Reposition:
          detail::apply_body_action(a, robot, sc.grid);
          break;
        default:
          break;
      }
    }
    if ((ev.kind == EventKind::Miss || ev.kind == EventKind::RoiUnreachable) && ev.roi + 1 >= cfg.num_rois)
      push(AssistEvent::at(now, EventKind::Exhausted));
    if (state.phase.kind == PhaseKind::Pointing && before.phase.kind != PhaseKind::Pointing)
      push(AssistEvent::at(now + sc.gesture_duration, EventKind::GestureComplete));
    if (state.deadline && (!before.deadline || *before.deadline != *state.deadline))
      push(AssistEvent::timeout(*state.deadline, state.phase.kind));

    if (state.phase.terminal()) {
      res.reason = state.phase.kind == PhaseKind::Done ? EndReason::Done : EndReason::Aborted;
      break;
    }
  }

  lg.end.t = now;
  lg.end.final_phase = orchestrator::to_string(state.phase);
  lg.end.reason = std::string(to_string(res.reason));
  lg.end.interaction_rounds = state.interaction_rounds;
  res.exit_code = res.reason == EndReason::Done ? 0 : 2;

  timeline.end = now;
  for (const auto& [ws, we] : timeout_windows) {
    const bool quiet = std::none_of(user_times.begin(), user_times.end(), [&](double t) { return t >= ws && t < we; });
    if (quiet) timeline.silences.emplace_back(ws, we);
  }
  res.gaze = usersim::gaze_stream(timeline, sc.profile, gaze_rng, sc.gaze);
  res.metrics = metrics::session_metrics(lg, res.gaze.samples);
  return res;
}

}  // namespace medassist::episode
