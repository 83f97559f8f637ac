#pragma once

// Scenario files: JSON configuration plus an ASCII map, validated with
// file:line messages, bottle placement and a content hash.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medassist/core/error.hpp"
#include "medassist/core/rng.hpp"
#include "medassist/core/vec.hpp"
#include "medassist/navigation.hpp"
#include "medassist/orchestrator.hpp"
#include "medassist/usersim.hpp"
#include "medassist/worldsim.hpp"

namespace medassist::scenario {

inline constexpr int kScenarioSchemaVersion = 1;

using orchestrator::AssistLevel;
using orchestrator::Condition;
using worldsim::ObjectKind;
using worldsim::SceneObject;

struct BottlePlacement {
  double radius{0.035};
  double height{0.12};
  std::vector<Vec3> slots;  // (x, y, supporting surface height)
};

struct ScenarioConfig {
  std::string name;
  std::string source;     // scenario file path
  std::string map_path;   // resolved
  worldsim::OccupancyGrid grid;      // walls, used for rendering and collisions
  worldsim::OccupancyGrid nav_grid;  // walls plus furniture footprints, used for the costmap
  worldsim::DepthCamera camera;
  Vec3 mount_xyz{0.1, 0.0, 1.1};
  double mount_tilt{deg2rad(25.0)};
  std::vector<worldsim::RegionOfInterest> rois;
  std::vector<SceneObject> objects;  // fixed objects, possibly including the bottle
  BottlePlacement placement;
  worldsim::DetectorModel detector;
  usersim::UserProfile profile;
  usersim::SearchParams search;
  usersim::GazeParams gaze;
  orchestrator::OrchestratorConfig orchestrator;
  navigation::InflationParams inflation;
  navigation::NavigateOptions navigate;
  std::vector<double> pan_schedule{worldsim::default_pan_schedule()};
  double episode_cap{600.0};
  double schedule_time{2.0};
  double gesture_duration{2.0};
  worldsim::Pose2 start_pose;
  std::string hash;  // hex FNV-1a over the canonical JSON and the map bytes

  bool has_fixed_bottle() const {
    for (const auto& o : objects)
      if (o.kind == ObjectKind::PillBottle) return true;
    return false;
  }
};

namespace detail {

using Json = nlohmann::json;

/// Maps JSON pointers to the 1-based line where each value starts. The input
/// must already be valid JSON.
inline std::map<std::string, int> json_value_lines(const std::string& text) {
  std::map<std::string, int> lines;
  struct Level {
    bool object;
    std::string base;
    std::string key;
    int index;
  };
  std::vector<Level> stack;
  int line = 1;
  std::size_t i = 0;
  auto escape = [](const std::string& k) {
    std::string out;
    for (char c : k) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  };
  auto current_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const Level& l = stack.back();
    return l.base + "/" + (l.object ? escape(l.key) : std::to_string(l.index));
  };
  auto read_string = [&]() {
    std::string s;
    ++i;
    while (i < text.size() && text[i] != '"') {
      if (text[i] == '\\' && i + 1 < text.size()) {
        s += text[i + 1];
        i += 2;
        continue;
      }
      s += text[i++];
    }
    ++i;
    return s;
  };
  bool expect_key = false;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == ':') {
      ++i;
      continue;
    }
    if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object) expect_key = true;
        else ++stack.back().index;
      }
      ++i;
      continue;
    }
    if (c == '}' || c == ']') {
      stack.pop_back();
      expect_key = false;
      ++i;
      continue;
    }
    if (expect_key && c == '"') {
      stack.back().key = read_string();
      expect_key = false;
      continue;
    }
    // A value starts here.
    const std::string path = current_path();
    lines.emplace(path, line);
    if (c == '{' || c == '[') {
      stack.push_back({c == '{', path, {}, 0});
      expect_key = c == '{';
      ++i;
    } else if (c == '"') {
      read_string();
    } else {
      while (i < text.size() && std::string_view(",}] \t\r\n").find(text[i]) == std::string_view::npos) ++i;
    }
  }
  return lines;
}

/// Typed access to a parsed scenario with file:line error messages.
class Reader {
 public:
  Reader(const Json& root, std::string source, std::map<std::string, int> lines)
      : root_(root), source_(std::move(source)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    std::string p = ptr;
    int line = 1;
    while (true) {
      if (auto it = lines_.find(p); it != lines_.end()) {
        line = it->second;
        break;
      }
      const auto slash = p.rfind('/');
      if (slash == std::string::npos) break;
      p = p.substr(0, slash);
    }
    throw Error(Errc::ScenarioInvalid, source_ + ":" + std::to_string(line) + ": " + (ptr.empty() ? "/" : ptr) + ": " + msg);
  }

  bool has(const std::string& ptr) const { return root_.contains(Json::json_pointer(ptr)); }
  const Json& at(const std::string& ptr) const {
    if (!has(ptr)) fail(ptr, "missing required field");
    return root_.at(Json::json_pointer(ptr));
  }

  double number(const std::string& ptr) const {
    const Json& j = at(ptr);
    if (!j.is_number()) fail(ptr, "expected a number");
    return j.get<double>();
  }
  double number(const std::string& ptr, double def) const { return has(ptr) ? number(ptr) : def; }
  double positive(const std::string& ptr, double def) const {
    const double v = number(ptr, def);
    if (!(v > 0.0)) fail(ptr, "must be > 0");
    return v;
  }
  double nonneg(const std::string& ptr, double def) const {
    const double v = number(ptr, def);
    if (!(v >= 0.0)) fail(ptr, "must be >= 0");
    return v;
  }
  double probability(const std::string& ptr, double def) const {
    const double v = number(ptr, def);
    if (!(v >= 0.0 && v <= 1.0)) fail(ptr, "must lie in [0, 1]");
    return v;
  }
  int integer(const std::string& ptr, int def) const {
    if (!has(ptr)) return def;
    const Json& j = at(ptr);
    if (!j.is_number_integer()) fail(ptr, "expected an integer");
    return j.get<int>();
  }
  bool boolean(const std::string& ptr, bool def) const {
    if (!has(ptr)) return def;
    const Json& j = at(ptr);
    if (!j.is_boolean()) fail(ptr, "expected true or false");
    return j.get<bool>();
  }
  std::string string(const std::string& ptr) const {
    const Json& j = at(ptr);
    if (!j.is_string()) fail(ptr, "expected a string");
    return j.get<std::string>();
  }
  std::string string(const std::string& ptr, const std::string& def) const { return has(ptr) ? string(ptr) : def; }
  std::vector<double> numbers(const std::string& ptr, std::size_t min_n, std::size_t max_n) const {
    const Json& j = at(ptr);
    if (!j.is_array() || j.size() < min_n || j.size() > max_n)
      fail(ptr, min_n == max_n ? "expected an array of " + std::to_string(min_n) + " numbers"
                               : "expected an array of " + std::to_string(min_n) + " to " + std::to_string(max_n) +
                                     " numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(ptr + "/" + std::to_string(k)));
    return out;
  }
  std::size_t array_size(const std::string& ptr) const {
    const Json& j = at(ptr);
    if (!j.is_array()) fail(ptr, "expected an array");
    return j.size();
  }
  void require_object(const std::string& ptr) const {
    if (!at(ptr).is_object()) fail(ptr, "expected an object");
  }
  /// Rejects keys outside `allowed` so typos do not pass silently.
  void only_keys(const std::string& ptr, std::initializer_list<std::string_view> allowed) const {
    require_object(ptr);
    for (const auto& [k, v] : at(ptr).items()) {
      (void)v;
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) fail(ptr + "/" + k, "unknown field");
    }
  }

 private:
  const Json& root_;
  std::string source_;
  std::map<std::string, int> lines_;
};

inline AssistLevel parse_level(const Reader& r, const std::string& ptr, AssistLevel def) {
  if (!r.has(ptr)) return def;
  const auto s = r.string(ptr);
  if (s == "L1") return AssistLevel::L1_VerbalReminder;
  if (s == "L2") return AssistLevel::L2_VerbalPlusGesture;
  if (s == "L3") return AssistLevel::L3_FullMultimodal;
  r.fail(ptr, "expected L1, L2 or L3");
}

inline ObjectKind parse_kind(const Reader& r, const std::string& ptr) {
  const auto s = r.string(ptr);
  if (s == "PillBottle") return ObjectKind::PillBottle;
  if (s == "WaterBottle") return ObjectKind::WaterBottle;
  if (s == "Distractor") return ObjectKind::Distractor;
  r.fail(ptr, "expected PillBottle, WaterBottle or Distractor");
}

inline worldsim::Pose2 parse_pose(const Reader& r, const std::string& ptr) {
  const auto v = r.numbers(ptr, 3, 3);
  return {v[0], v[1], wrap_angle(deg2rad(v[2]))};
}

inline Vec3 parse_vec3(const Reader& r, const std::string& ptr) {
  const auto v = r.numbers(ptr, 3, 3);
  return {v[0], v[1], v[2]};
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::FileNotFound, std::string("cannot open ") + what + " '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Marks cells whose centers fall inside an object's footprint.
inline void rasterize_footprint(worldsim::OccupancyGrid& g, const SceneObject& o) {
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) {
      const auto [cx, cy] = g.cell_center(x, y);
      const bool inside = std::visit(
          [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, worldsim::BoxShape>)
              return std::abs(cx - o.position.x) <= s.size.x / 2 && std::abs(cy - o.position.y) <= s.size.y / 2;
            else
              return std::hypot(cx - o.position.x, cy - o.position.y) <= s.radius;
          },
          o.shape);
      if (inside) g.set(x, y, worldsim::CellState::Occupied);
    }
}

}  // namespace detail

/// Parses scenario JSON. `base_dir` resolves the relative map path.
inline ScenarioConfig parse_scenario(const std::string& text, const std::string& source,
                                     const std::filesystem::path& base_dir) {
  using detail::Json;
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Convert the byte offset into a line number.
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw Error(Errc::ParseError, source + ":" + std::to_string(line) + ": malformed JSON");
  }
  const detail::Reader r(root, source, detail::json_value_lines(text));
  r.require_object("");
  r.only_keys("", {"schema_version", "name", "map", "map_origin", "camera", "rois", "objects", "placement",
                   "detector", "user_profile", "orchestrator", "navigation", "search", "gaze", "episode_cap_s",
                   "start_pose", "schedule_time_s", "gesture_duration_s", "pan_schedule_deg"});

  if (r.integer("/schema_version", -1) != kScenarioSchemaVersion)
    r.fail("/schema_version", "expected schema_version " + std::to_string(kScenarioSchemaVersion));

  ScenarioConfig sc;
  sc.source = source;
  sc.name = r.string("/name", std::filesystem::path(source).stem().string());

  // Map.
  const std::filesystem::path map_rel = r.string("/map");
  sc.map_path = (map_rel.is_absolute() ? map_rel : base_dir / map_rel).lexically_normal().string();
  const std::string map_text = detail::read_file(sc.map_path, "map file");
  sc.grid = worldsim::parse_ascii_map(map_text, sc.map_path);
  if (r.has("/map_origin")) {
    const auto o = r.numbers("/map_origin", 2, 2);
    sc.grid.set_origin(o[0], o[1]);
  }

  // Camera.
  if (r.has("/camera")) {
    r.only_keys("/camera", {"fx", "fy", "cx", "cy", "width", "height", "max_range", "noise_sigma", "mount"});
    auto& c = sc.camera;
    c.intrinsics.fx = r.positive("/camera/fx", c.intrinsics.fx);
    c.intrinsics.fy = r.positive("/camera/fy", c.intrinsics.fy);
    c.intrinsics.cx = r.number("/camera/cx", c.intrinsics.cx);
    c.intrinsics.cy = r.number("/camera/cy", c.intrinsics.cy);
    c.intrinsics.width = r.integer("/camera/width", c.intrinsics.width);
    c.intrinsics.height = r.integer("/camera/height", c.intrinsics.height);
    if (c.intrinsics.width <= 0) r.fail("/camera/width", "must be > 0");
    if (c.intrinsics.height <= 0) r.fail("/camera/height", "must be > 0");
    c.max_range = r.positive("/camera/max_range", c.max_range);
    c.noise_sigma = r.nonneg("/camera/noise_sigma", c.noise_sigma);
    if (r.has("/camera/mount")) {
      r.only_keys("/camera/mount", {"xyz", "tilt_deg"});
      if (r.has("/camera/mount/xyz")) sc.mount_xyz = detail::parse_vec3(r, "/camera/mount/xyz");
      sc.mount_tilt = deg2rad(r.number("/camera/mount/tilt_deg", rad2deg(sc.mount_tilt)));
    }
  }
  if (r.has("/pan_schedule_deg")) {
    sc.pan_schedule.clear();
    for (double d : r.numbers("/pan_schedule_deg", 1, 64)) sc.pan_schedule.push_back(deg2rad(d));
  }

  // ROIs.
  const std::size_t n_roi = r.array_size("/rois");
  if (n_roi == 0) r.fail("/rois", "at least one ROI required");
  for (std::size_t i = 0; i < n_roi; ++i) {
    const std::string p = "/rois/" + std::to_string(i);
    r.only_keys(p, {"id", "label", "pose"});
    worldsim::RegionOfInterest roi;
    roi.id = r.string(p + "/id");
    roi.label = r.string(p + "/label", roi.id);
    roi.pose = detail::parse_pose(r, p + "/pose");
    if (sc.grid.blocked_world(roi.pose.x, roi.pose.y)) r.fail(p + "/pose", "ROI pose lies in an occupied or off-map cell");
    sc.rois.push_back(roi);
  }

  // Objects.
  sc.nav_grid = sc.grid;
  if (r.has("/objects")) {
    const std::size_t n = r.array_size("/objects");
    for (std::size_t i = 0; i < n; ++i) {
      const std::string p = "/objects/" + std::to_string(i);
      r.only_keys(p, {"kind", "shape", "position", "size", "radius", "height", "obstacle"});
      SceneObject o;
      o.kind = detail::parse_kind(r, p + "/kind");
      o.position = detail::parse_vec3(r, p + "/position");
      const std::string shape = r.string(p + "/shape");
      if (shape == "box") {
        o.shape = worldsim::BoxShape{detail::parse_vec3(r, p + "/size")};
      } else if (shape == "cylinder") {
        o.shape = worldsim::CylinderShape{r.number(p + "/radius"), r.number(p + "/height")};
      } else {
        r.fail(p + "/shape", "expected box or cylinder");
      }
      try {
        o.validate();
      } catch (const Error& e) {
        r.fail(p, e.what());
      }
      if (r.boolean(p + "/obstacle", o.kind == ObjectKind::Distractor)) detail::rasterize_footprint(sc.nav_grid, o);
      sc.objects.push_back(o);
    }
  }
  const auto fixed_bottles = std::count_if(sc.objects.begin(), sc.objects.end(),
                                           [](const SceneObject& o) { return o.kind == ObjectKind::PillBottle; });
  if (fixed_bottles > 1) r.fail("/objects", "more than one pill bottle");
  if (r.has("/placement")) {
    r.only_keys("/placement", {"bottle_radius", "bottle_height", "slots"});
    if (fixed_bottles == 1) r.fail("/placement", "placement slots given but a pill bottle is already placed");
    sc.placement.radius = r.positive("/placement/bottle_radius", sc.placement.radius);
    sc.placement.height = r.positive("/placement/bottle_height", sc.placement.height);
    const std::size_t n = r.array_size("/placement/slots");
    if (n == 0) r.fail("/placement/slots", "at least one slot required");
    for (std::size_t i = 0; i < n; ++i) sc.placement.slots.push_back(detail::parse_vec3(r, "/placement/slots/" + std::to_string(i)));
  }

  // Detector.
  if (r.has("/detector")) {
    r.only_keys("/detector", {"tpr", "fpr", "box_noise_sigma", "max_range", "min_visible_pixels"});
    auto& d = sc.detector;
    d.true_positive_rate = r.probability("/detector/tpr", d.true_positive_rate);
    d.false_positive_rate = r.probability("/detector/fpr", d.false_positive_rate);
    d.box_noise_sigma = r.nonneg("/detector/box_noise_sigma", d.box_noise_sigma);
    d.max_range = r.positive("/detector/max_range", d.max_range);
    d.min_visible_pixels = r.integer("/detector/min_visible_pixels", d.min_visible_pixels);
  }

  // User profile: a preset name or an object with an optional preset and overrides.
  if (r.has("/user_profile")) {
    const auto& j = r.at("/user_profile");
    try {
      if (j.is_string()) {
        sc.profile = usersim::preset_profile(j.get<std::string>());
      } else {
        r.only_keys("/user_profile", {"preset", "name", "forgetfulness", "disorientation", "step_difficulty",
                                      "latency_mean", "latency_sigma", "compliance", "repeat_request_rate",
                                      "help_propensity", "max_help_requests"});
        if (r.has("/user_profile/preset")) sc.profile = usersim::preset_profile(r.string("/user_profile/preset"));
        auto& p = sc.profile;
        p.name = r.string("/user_profile/name", p.name);
        p.forgetfulness = r.probability("/user_profile/forgetfulness", p.forgetfulness);
        p.disorientation = r.probability("/user_profile/disorientation", p.disorientation);
        p.step_difficulty = r.probability("/user_profile/step_difficulty", p.step_difficulty);
        p.latency_mean = r.positive("/user_profile/latency_mean", p.latency_mean);
        p.latency_sigma = r.nonneg("/user_profile/latency_sigma", p.latency_sigma);
        p.compliance = r.probability("/user_profile/compliance", p.compliance);
        p.repeat_request_rate = r.probability("/user_profile/repeat_request_rate", p.repeat_request_rate);
        p.help_propensity = r.probability("/user_profile/help_propensity", p.help_propensity);
        p.max_help_requests = r.integer("/user_profile/max_help_requests", p.max_help_requests);
        p.validate();
      }
    } catch (const Error& e) {
      if (e.code() == Errc::ScenarioInvalid) throw;
      r.fail("/user_profile", e.what());
    }
  }
  if (r.has("/search")) {
    r.only_keys("/search", {"unaided_base", "disorientation_gain", "unaided_sigma", "guided_baseline",
                            "guided_sigma", "help_interval"});
    auto& s = sc.search;
    s.unaided_base = r.positive("/search/unaided_base", s.unaided_base);
    s.disorientation_gain = r.nonneg("/search/disorientation_gain", s.disorientation_gain);
    s.unaided_sigma = r.nonneg("/search/unaided_sigma", s.unaided_sigma);
    s.guided_baseline = r.positive("/search/guided_baseline", s.guided_baseline);
    s.guided_sigma = r.nonneg("/search/guided_sigma", s.guided_sigma);
    s.help_interval = r.positive("/search/help_interval", s.help_interval);
  }
  if (r.has("/gaze")) {
    r.only_keys("/gaze", {"confusion_threshold"});
    sc.gaze.confusion_threshold = r.positive("/gaze/confusion_threshold", sc.gaze.confusion_threshold);
  }

  // Orchestrator.
  auto& oc = sc.orchestrator;
  if (r.has("/orchestrator")) {
    r.only_keys("/orchestrator", {"start_level", "max_level", "failure_threshold", "prompt_timeout_s", "max_repeats",
                                  "refusal_limit", "min_standoff", "arm_origin", "head_origin", "gaze_confusion"});
    oc.start_level = detail::parse_level(r, "/orchestrator/start_level", oc.start_level);
    oc.max_level = detail::parse_level(r, "/orchestrator/max_level", oc.max_level);
    if (rank(oc.start_level) > rank(oc.max_level)) r.fail("/orchestrator/start_level", "exceeds max_level");
    oc.failure_threshold = r.integer("/orchestrator/failure_threshold", oc.failure_threshold);
    if (oc.failure_threshold < 1) r.fail("/orchestrator/failure_threshold", "must be >= 1");
    oc.prompt_timeout = r.positive("/orchestrator/prompt_timeout_s", oc.prompt_timeout);
    oc.max_repeats = r.integer("/orchestrator/max_repeats", oc.max_repeats);
    if (oc.max_repeats < 0) r.fail("/orchestrator/max_repeats", "must be >= 0");
    oc.refusal_limit = r.integer("/orchestrator/refusal_limit", oc.refusal_limit);
    if (oc.refusal_limit < 1) r.fail("/orchestrator/refusal_limit", "must be >= 1");
    oc.min_standoff = r.nonneg("/orchestrator/min_standoff", oc.min_standoff);
    if (r.has("/orchestrator/arm_origin")) oc.arm_origin = detail::parse_vec3(r, "/orchestrator/arm_origin");
    if (r.has("/orchestrator/head_origin")) oc.head_origin = detail::parse_vec3(r, "/orchestrator/head_origin");
    oc.gaze_confusion_enabled = r.boolean("/orchestrator/gaze_confusion", oc.gaze_confusion_enabled);
  }
  oc.num_rois = static_cast<int>(sc.rois.size());
  oc.roi_labels.clear();
  for (const auto& roi : sc.rois) oc.roi_labels.push_back(roi.label);

  // Navigation.
  if (r.has("/navigation")) {
    r.only_keys("/navigation", {"inflation_radius", "inflation_decay", "robot_radius", "arrival_distance",
                                "arrival_heading_deg", "dt", "max_time_s", "dwa"});
    sc.inflation.radius = r.nonneg("/navigation/inflation_radius", sc.inflation.radius);
    sc.inflation.decay = r.positive("/navigation/inflation_decay", sc.inflation.decay);
    sc.inflation.robot_radius = r.nonneg("/navigation/robot_radius", sc.inflation.robot_radius);
    auto& n = sc.navigate;
    n.arrival_distance = r.positive("/navigation/arrival_distance", n.arrival_distance);
    n.arrival_heading = deg2rad(r.positive("/navigation/arrival_heading_deg", rad2deg(n.arrival_heading)));
    n.dt = r.positive("/navigation/dt", n.dt);
    n.max_time = r.positive("/navigation/max_time_s", n.max_time);
    if (r.has("/navigation/dwa")) {
      r.only_keys("/navigation/dwa", {"v_max", "v_accel", "omega_max", "omega_accel", "v_samples", "omega_samples",
                                      "horizon", "sim_step", "heading_weight", "clearance_weight", "velocity_weight",
                                      "lookahead"});
      auto& d = n.dwa;
      d.v_max = r.positive("/navigation/dwa/v_max", d.v_max);
      d.v_accel = r.positive("/navigation/dwa/v_accel", d.v_accel);
      d.omega_max = r.positive("/navigation/dwa/omega_max", d.omega_max);
      d.omega_min = -d.omega_max;
      d.omega_accel = r.positive("/navigation/dwa/omega_accel", d.omega_accel);
      d.v_samples = r.integer("/navigation/dwa/v_samples", d.v_samples);
      d.omega_samples = r.integer("/navigation/dwa/omega_samples", d.omega_samples);
      d.horizon = r.positive("/navigation/dwa/horizon", d.horizon);
      d.sim_step = r.positive("/navigation/dwa/sim_step", d.sim_step);
      d.heading_weight = r.nonneg("/navigation/dwa/heading_weight", d.heading_weight);
      d.clearance_weight = r.nonneg("/navigation/dwa/clearance_weight", d.clearance_weight);
      d.velocity_weight = r.nonneg("/navigation/dwa/velocity_weight", d.velocity_weight);
      d.lookahead = r.positive("/navigation/dwa/lookahead", d.lookahead);
      try {
        d.validate();
      } catch (const Error& e) {
        r.fail("/navigation/dwa", e.what());
      }
    }
    n.limits.v_max = n.dwa.v_max;
    n.limits.omega_max = n.dwa.omega_max;
  }

  sc.episode_cap = r.positive("/episode_cap_s", sc.episode_cap);
  sc.schedule_time = r.nonneg("/schedule_time_s", sc.schedule_time);
  sc.gesture_duration = r.positive("/gesture_duration_s", sc.gesture_duration);
  sc.start_pose = detail::parse_pose(r, "/start_pose");
  if (sc.grid.blocked_world(sc.start_pose.x, sc.start_pose.y))
    r.fail("/start_pose", "start pose lies in an occupied or off-map cell");

  std::uint64_t h = CounterRng::fnv1a(root.dump());
  h ^= CounterRng::fnv1a(map_text) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  sc.hash = detail::hex64(h);
  return sc;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  const std::string text = detail::read_file(path, "scenario file");
  return parse_scenario(text, path, std::filesystem::path(path).parent_path());
}

/// Objects for one run: fixed objects plus the pill bottle on a slot drawn
/// from the run's placement stream.
inline std::vector<SceneObject> place_objects(const ScenarioConfig& sc, Condition condition, std::uint64_t seed) {
  std::vector<SceneObject> objs = sc.objects;
  if (!sc.placement.slots.empty()) {
    CounterRng rng = CounterRng(seed).fork("placement").fork(static_cast<std::uint64_t>(condition));
    const Vec3& slot = sc.placement.slots[rng.below(sc.placement.slots.size())];
    SceneObject b;
    b.kind = ObjectKind::PillBottle;
    b.position = {slot.x, slot.y, slot.z + sc.placement.height / 2.0};
    b.shape = worldsim::CylinderShape{sc.placement.radius, sc.placement.height};
    objs.push_back(b);
  }
  return objs;
}

}  // namespace medassist::scenario
