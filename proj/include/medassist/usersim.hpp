#pragma once

// Simulated participants: capability profiles, prompt responses, search time,
// and a synthetic 180 Hz gaze stream with confusion-event detection.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "medassist/core/error.hpp"
#include "medassist/core/format.hpp"
#include "medassist/core/rng.hpp"
#include "medassist/orchestrator.hpp"

namespace medassist::usersim {

using orchestrator::Action;
using orchestrator::AssistEvent;
using orchestrator::AssistLevel;
using orchestrator::Condition;
using orchestrator::GuidanceStep;
using orchestrator::PromptKind;
using orchestrator::UserActionKind;

/// Capability parameters. Probabilities are per prompt.
struct UserProfile {
  std::string name{"Custom"};
  double forgetfulness{0.0};     // p_f: ignores a reminder
  double disorientation{0.0};    // p_d: scales unaided search time
  double step_difficulty{0.0};   // p_s: a guidance step fails
  double latency_mean{2.5};      // s
  double latency_sigma{0.8};     // s
  double compliance{1.0};
  double repeat_request_rate{0.1};
  double help_propensity{0.5};   // chance of asking for help at each help interval while searching
  int max_help_requests{3};

  void validate() const {
    for (double p : {forgetfulness, disorientation, step_difficulty, compliance, repeat_request_rate, help_propensity})
      if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::InvalidArgument, "profile probabilities must lie in [0, 1]");
    if (!(latency_mean > 0.0) || !(latency_sigma >= 0.0))
      throw Error(Errc::InvalidArgument, "latency mean must be > 0 and sigma >= 0");
    if (max_help_requests < 0) throw Error(Errc::InvalidArgument, "max_help_requests must be >= 0");
  }
};

/// Named presets. Parameter values are modelling choices.
inline UserProfile preset_profile(std::string_view name) {
  UserProfile p;
  p.name = std::string(name);
  if (name == "Healthy") {
    p.forgetfulness = 0.0, p.disorientation = 0.1, p.step_difficulty = 0.05;
    p.latency_mean = 2.0, p.latency_sigma = 0.5, p.help_propensity = 0.4;
  } else if (name == "Forgets") {
    p.forgetfulness = 0.5, p.disorientation = 0.2, p.step_difficulty = 0.1;
    p.latency_mean = 3.0, p.latency_sigma = 1.0, p.help_propensity = 0.5;
  } else if (name == "Misplaces") {
    p.forgetfulness = 0.1, p.disorientation = 0.8, p.step_difficulty = 0.1;
    p.latency_mean = 3.0, p.latency_sigma = 1.0, p.help_propensity = 0.8;
  } else if (name == "NeedsStepByStep") {
    p.forgetfulness = 0.2, p.disorientation = 0.4, p.step_difficulty = 0.45;
    p.latency_mean = 4.0, p.latency_sigma = 1.5, p.help_propensity = 0.6;
  } else {
    throw Error(Errc::InvalidArgument, "unknown profile preset '" + std::string(name) + "'");
  }
  return p;
}

struct SearchParams {
  double unaided_base{60.0};     // s
  double disorientation_gain{1.0};
  double unaided_sigma{8.0};
  double guided_baseline{4.0};   // s to acquire the bottle after a pointing gesture
  double guided_sigma{1.0};
  double help_interval{25.0};    // s between opportunities to ask for help while searching
};

/// Time to first fixation on the bottle. Unaided: base * (1 + k * p_d) + noise.
/// Guided: short acquisition time + noise. One normal draw either way, so
/// paired seeds give paired noise.
inline double search_behavior(const UserProfile& profile, bool guided, const SearchParams& params, CounterRng& rng) {
  const double z = rng.normal();
  if (guided) return std::max(0.5, params.guided_baseline + params.guided_sigma * z);
  return std::max(1.0, params.unaided_base * (1.0 + params.disorientation_gain * profile.disorientation) +
                           params.unaided_sigma * z);
}

inline double sample_latency(const UserProfile& p, CounterRng& rng) {
  return std::max(0.3, rng.normal(p.latency_mean, p.latency_sigma));
}

namespace phrases {
inline constexpr std::string_view kDeny = "no, not yet";
inline constexpr std::string_view kRepeat = "can you say that again";
inline constexpr std::string_view kHelp = "where is my medicine";
inline constexpr std::string_view kFinal = "yes, I took my medicine";

inline std::string_view confirm(GuidanceStep s) {
  switch (s) {
    case GuidanceStep::LocateBottle: return "yes, I see it";
    case GuidanceStep::OpenBottle: return "done, I opened it";
    case GuidanceStep::TakePills: return "done, I took them";
    case GuidanceStep::DrinkWater: return "okay, I drank the water";
    case GuidanceStep::ConfirmIntake: return "yes, I took my medicine";
  }
  return "yes";
}
}  // namespace phrases

inline UserActionKind matching_action(GuidanceStep s) {
  switch (s) {
    case GuidanceStep::LocateBottle: return UserActionKind::LocatedBottle;
    case GuidanceStep::OpenBottle: return UserActionKind::OpenedBottle;
    case GuidanceStep::TakePills: return UserActionKind::TookPills;
    case GuidanceStep::DrinkWater: return UserActionKind::DrankWater;
    case GuidanceStep::ConfirmIntake: return UserActionKind::Acknowledge;
  }
  return UserActionKind::Acknowledge;
}

/// A user event `delay` seconds after the prompt.
struct TimedUserEvent {
  double delay{0.0};
  AssistEvent event;
};

struct PromptContext {
  Condition condition{Condition::B};
  SearchParams search{};
};

/// Samples the user's reaction to one spoken prompt. An empty result is
/// silence, which the orchestrator sees as a Timeout.
inline std::vector<TimedUserEvent> respond(const UserProfile& p, const Action& prompt, const PromptContext& ctx,
                                           CounterRng& rng) {
  std::vector<TimedUserEvent> out;
  if (prompt.kind != orchestrator::ActionKind::Speak || prompt.prompt == PromptKind::None) return out;
  const bool complies = rng.bernoulli(p.compliance);
  const double lat = sample_latency(p, rng);
  auto rec = [](double d, std::string_view text) { return TimedUserEvent{d, AssistEvent::record(0.0, std::string(text))}; };
  auto act = [](double d, UserActionKind k) { return TimedUserEvent{d, AssistEvent::user(0.0, k)}; };

  switch (prompt.prompt) {
    case PromptKind::None:
      break;
    case PromptKind::Reminder: {
      const bool forgot = rng.bernoulli(p.forgetfulness);
      if (!complies || forgot) break;
      out.push_back(act(lat, UserActionKind::Acknowledge));
      const double search = search_behavior(p, false, ctx.search, rng);
      for (int k = 1; k <= p.max_help_requests; ++k) {
        const double t = k * ctx.search.help_interval;
        if (t >= search) break;
        if (rng.bernoulli(p.help_propensity)) out.push_back(rec(lat + t, phrases::kHelp));
      }
      out.push_back(act(lat + search, UserActionKind::LocatedBottle));
      if (ctx.condition == Condition::A) out.push_back(act(lat + search + sample_latency(p, rng), UserActionKind::OpenedBottle));
      break;
    }
    case PromptKind::FollowMe: {
      const bool forgot = rng.bernoulli(p.forgetfulness);
      if (!complies || forgot) break;
      out.push_back({lat, AssistEvent::at(0.0, orchestrator::EventKind::StartNavigationPressed)});
      break;
    }
    case PromptKind::Step: {
      if (!complies) break;
      if (rng.bernoulli(p.step_difficulty)) {
        if (rng.bernoulli(0.5)) out.push_back(rec(lat, phrases::kDeny));
        break;
      }
      if (rng.bernoulli(p.repeat_request_rate)) {
        out.push_back(rec(lat, phrases::kRepeat));
        break;
      }
      if (prompt.step == GuidanceStep::LocateBottle) {
        const double acquire = search_behavior(p, true, ctx.search, rng);
        out.push_back(act(acquire, UserActionKind::LocatedBottle));
        out.push_back(rec(acquire + lat, phrases::confirm(prompt.step)));
      } else if (prompt.step == GuidanceStep::ConfirmIntake) {
        out.push_back(rec(lat, phrases::confirm(prompt.step)));
      } else {
        out.push_back(act(lat, matching_action(prompt.step)));
        out.push_back(rec(lat + 1.0, phrases::confirm(prompt.step)));
      }
      break;
    }
    case PromptKind::FinalConfirm:
      if (complies) out.push_back(rec(lat, phrases::kFinal));
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaze.

inline constexpr double kGazeRate = 180.0;

enum class Aoi { Bottle, Robot, TabletUI, Elsewhere };

inline std::string_view to_string(Aoi a) {
  switch (a) {
    case Aoi::Bottle: return "Bottle";
    case Aoi::Robot: return "Robot";
    case Aoi::TabletUI: return "TabletUI";
    case Aoi::Elsewhere: return "Elsewhere";
  }
  return "?";
}

inline Aoi aoi_from_string(std::string_view s) {
  if (s == "Bottle") return Aoi::Bottle;
  if (s == "Robot") return Aoi::Robot;
  if (s == "TabletUI") return Aoi::TabletUI;
  if (s == "Elsewhere") return Aoi::Elsewhere;
  throw Error(Errc::ParseError, "unknown AOI '" + std::string(s) + "'");
}

struct GazeSample {
  double timestamp{0.0};
  Aoi aoi{Aoi::Elsewhere};
  bool is_fixation{false};
  bool operator==(const GazeSample&) const = default;
};

struct ConfusionEvent {
  double start{0.0};
  double end{0.0};
  Aoi aoi{Aoi::Bottle};
  bool acted{false};
  bool operator==(const ConfusionEvent&) const = default;
};

/// Episode facts the gaze generator keys on.
struct EpisodeTimeline {
  double end{0.0};
  std::optional<double> located;                     // first time the user has the bottle in view
  std::vector<double> speech;                        // robot utterance start times
  std::vector<double> presses;                       // tablet presses (record / navigation)
  std::vector<std::pair<double, double>> silences;   // prompt -> timeout windows without user activity
};

struct GazeParams {
  double confusion_threshold{3.0};
  double fixation_min{0.15};
  double fixation_max{0.8};
  int saccade_min_samples{3};
  int saccade_max_samples{8};
};

struct GazeStream {
  std::vector<GazeSample> samples;
  std::vector<ConfusionEvent> inserted;  // ground truth
};

inline double sample_time(std::size_t i) { return static_cast<double>(i) / kGazeRate; }

/// Fixation/saccade stream at exactly 1/180 s spacing. Bottle fixations never
/// start before `located`, and the first one starts at the first sample at or
/// after it. With probability min(1, 2*p_s) each silence window after the
/// bottle is located receives one inserted Bottle fixation longer than the
/// confusion threshold. Spontaneous fixations stay below `fixation_max`.
inline GazeStream gaze_stream(const EpisodeTimeline& tl, const UserProfile& profile, CounterRng& rng,
                              const GazeParams& params = {}) {
  GazeStream out;
  if (!(tl.end > 0.0)) return out;
  const auto n = static_cast<std::size_t>(std::llround(tl.end * kGazeRate));
  out.samples.reserve(n);

  struct Forced {
    std::size_t begin, end;  // [begin, end)
    bool confusion;
  };
  std::vector<Forced> forced;
  auto idx_at = [](double t) { return static_cast<std::size_t>(std::ceil(t * kGazeRate - 1e-9)); };
  auto natural_len = [&] {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(rng.uniform(params.fixation_min, params.fixation_max) * kGazeRate)));
  };
  if (tl.located) {
    const std::size_t b = idx_at(*tl.located);
    if (b < n) forced.push_back({b, std::min(n, b + natural_len()), false});
    const double p_insert = std::min(1.0, 2.0 * profile.step_difficulty);
    for (const auto& [ws, we] : tl.silences) {
      if (ws < *tl.located) continue;
      const bool insert = rng.bernoulli(p_insert);
      const double dur = rng.uniform(params.confusion_threshold + 0.5, params.confusion_threshold + 2.5);
      const double start = ws + 1.0;
      if (!insert || start + dur + 0.2 >= we) continue;
      const std::size_t b0 = idx_at(start), b1 = idx_at(start + dur);
      if (b1 >= n || (!forced.empty() && b0 < forced.back().end + 4)) continue;
      forced.push_back({b0, b1, true});
    }
  }

  auto context_aoi = [&](double t) {
    const bool have_bottle = tl.located && t >= *tl.located;
    for (double p : tl.presses)
      if (t >= p - 1.0 && t < p) return Aoi::TabletUI;
    for (double s : tl.speech)
      if (t >= s && t < s + 1.5 && rng.bernoulli(0.8)) return Aoi::Robot;
    const double u = rng.uniform();
    if (have_bottle) return u < 0.45 ? Aoi::Bottle : u < 0.7 ? Aoi::Robot : u < 0.85 ? Aoi::TabletUI : Aoi::Elsewhere;
    return u < 0.7 ? Aoi::Elsewhere : u < 0.9 ? Aoi::Robot : Aoi::TabletUI;
  };
  auto emit = [&](std::size_t count, Aoi aoi, bool fix) {
    for (std::size_t k = 0; k < count && out.samples.size() < n; ++k)
      out.samples.push_back({sample_time(out.samples.size()), aoi, fix});
  };
  auto saccade = [&](std::size_t limit) {
    const auto len = static_cast<std::size_t>(params.saccade_min_samples +
                                              static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                                  params.saccade_max_samples - params.saccade_min_samples + 1))));
    emit(std::min(len, limit - out.samples.size()), Aoi::Elsewhere, false);
  };
  // Natural fixation/saccade alternation up to `limit`, leaving a saccade gap
  // of at least two samples before it.
  auto fill = [&](std::size_t limit) {
    while (out.samples.size() + 2 < limit) {
      const double t = sample_time(out.samples.size());
      Aoi aoi = context_aoi(t);
      const std::size_t len = std::min(natural_len(), limit - 2 - out.samples.size());
      // Natural Bottle fixations must not begin before the located instant.
      if (aoi == Aoi::Bottle && (!tl.located || t < *tl.located)) aoi = Aoi::Elsewhere;
      emit(len, aoi, true);
      if (out.samples.size() < limit) saccade(limit);
    }
    emit(limit - std::min(limit, out.samples.size()), Aoi::Elsewhere, false);
  };

  for (const Forced& f : forced) {
    if (f.begin < out.samples.size()) continue;
    fill(f.begin);
    emit(f.end - f.begin, Aoi::Bottle, true);
    if (f.confusion)
      out.inserted.push_back({sample_time(f.begin), sample_time(f.end - 1) + 1.0 / kGazeRate, Aoi::Bottle, false});
    if (out.samples.size() < n) saccade(std::min(n, out.samples.size() + params.saccade_max_samples));
  }
  fill(n);
  return out;
}

inline bool is_task_aoi(Aoi a) { return a != Aoi::Elsewhere; }

/// Maximal fixation runs on one task AOI lasting at least `threshold` seconds
/// with no user action inside [start, end). A run's end is its last sample
/// time plus one nominal sample period.
inline std::vector<ConfusionEvent> detect_confusion(const std::vector<GazeSample>& stream,
                                                    const std::vector<double>& action_times, double threshold) {
  for (std::size_t i = 1; i < stream.size(); ++i)
    if (!(stream[i].timestamp > stream[i - 1].timestamp))
      throw Error(Errc::UnorderedStream, "gaze sample " + std::to_string(i) + " is not after its predecessor");
  std::vector<ConfusionEvent> events;
  std::size_t i = 0;
  while (i < stream.size()) {
    if (!stream[i].is_fixation || !is_task_aoi(stream[i].aoi)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < stream.size() && stream[j + 1].is_fixation && stream[j + 1].aoi == stream[i].aoi) ++j;
    const double start = stream[i].timestamp;
    const double end = stream[j].timestamp + 1.0 / kGazeRate;
    if (end - start >= threshold - 1e-9) {
      const bool acted = std::any_of(action_times.begin(), action_times.end(),
                                     [&](double t) { return t >= start && t < end; });
      if (!acted) events.push_back({start, end, stream[i].aoi, false});
    }
    i = j + 1;
  }
  return events;
}

inline std::string gaze_csv(const std::vector<GazeSample>& stream) {
  std::string out = "timestamp,aoi,is_fixation\n";
  for (const auto& g : stream) {
    out += format_double(g.timestamp);
    out += ',';
    out += to_string(g.aoi);
    out += g.is_fixation ? ",1\n" : ",0\n";
  }
  return out;
}

inline std::vector<GazeSample> parse_gaze_csv(std::istream& is, const std::string& source = "<gaze>") {
  std::string line;
  if (!std::getline(is, line) || line.rfind("timestamp,aoi,is_fixation", 0) != 0)
    throw Error(Errc::ParseError, source + ":1: expected header 'timestamp,aoi,is_fixation'");
  std::vector<GazeSample> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string at = source + ":" + std::to_string(lineno) + ": ";
    const auto c1 = line.find(','), c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw Error(Errc::ParseError, at + "expected 3 fields");
    GazeSample g;
    if (!parse_double(std::string_view(line).substr(0, c1), g.timestamp))
      throw Error(Errc::ParseError, at + "bad timestamp");
    try {
      g.aoi = aoi_from_string(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
    } catch (const Error& e) {
      throw Error(Errc::ParseError, at + e.what());
    }
    const auto fix = std::string_view(line).substr(c2 + 1);
    if (fix != "0" && fix != "1") throw Error(Errc::ParseError, at + "is_fixation must be 0 or 1");
    g.is_fixation = fix == "1";
    out.push_back(g);
  }
  return out;
}

inline std::vector<GazeSample> load_gaze_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileNotFound, "cannot open gaze file '" + path + "'");
  return parse_gaze_csv(in, path);
}

}  // namespace medassist::usersim
