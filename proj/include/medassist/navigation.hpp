#pragma once

// Layered costmap, A* global planning, Dynamic Window local planning and the
// sequential ROI visiting policy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "medassist/core/error.hpp"
#include "medassist/core/rng.hpp"
#include "medassist/core/vec.hpp"
#include "medassist/geometry.hpp"
#include "medassist/worldsim.hpp"

namespace medassist::navigation {

using worldsim::Cell;
using worldsim::CellState;
using worldsim::OccupancyGrid;
using worldsim::Pose2;
using worldsim::RobotState;

inline constexpr std::uint8_t kFreeCost = 0;
inline constexpr std::uint8_t kInscribedCost = 253;
inline constexpr std::uint8_t kLethalCost = 255;

struct InflationParams {
  double radius{0.45};         // meters
  double decay{10.0};          // k in 254*exp(-k*(d - r_robot)), 1/m
  double robot_radius{0.2};    // meters
};

class Costmap {
 public:
  Costmap() = default;
  Costmap(int width, int height, double resolution, double origin_x, double origin_y)
      : width_(width), height_(height), resolution_(resolution), origin_x_(origin_x), origin_y_(origin_y),
        cost_(static_cast<std::size_t>(width) * height, kFreeCost) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  const InflationParams& inflation() const { return inflation_; }
  void set_inflation(const InflationParams& p) { inflation_ = p; }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  std::uint8_t at(int x, int y) const { return cost_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, std::uint8_t c) { cost_[static_cast<std::size_t>(y) * width_ + x] = c; }

  std::optional<Cell> world_to_cell(double wx, double wy) const {
    const int x = static_cast<int>(std::floor((wx - origin_x_) / resolution_));
    const int y = static_cast<int>(std::floor((wy - origin_y_) / resolution_));
    if (!in_bounds(x, y)) return std::nullopt;
    return Cell{x, y};
  }
  std::pair<double, double> cell_center(int x, int y) const {
    return {origin_x_ + (x + 0.5) * resolution_, origin_y_ + (y + 0.5) * resolution_};
  }
  /// Cost at a world point; off-map reads as lethal.
  std::uint8_t cost_world(double wx, double wy) const {
    const auto c = world_to_cell(wx, wy);
    return c ? at(c->x, c->y) : kLethalCost;
  }

  bool operator==(const Costmap&) const = default;

 private:
  int width_{0};
  int height_{0};
  double resolution_{1.0};
  double origin_x_{0.0};
  double origin_y_{0.0};
  InflationParams inflation_{};
  std::vector<std::uint8_t> cost_;
};

/// Static layer (Occupied and Unknown are lethal) plus an inflation layer:
/// free cells within `radius` of the nearest lethal cell get
/// clamp(254*exp(-k*(d - r_robot)), 1, 253); free cells beyond get 0.
inline Costmap build_costmap(const OccupancyGrid& grid, const InflationParams& params) {
  if (!(params.radius >= 0.0)) throw Error(Errc::InvalidArgument, "inflation radius must be >= 0");
  Costmap cm(grid.width(), grid.height(), grid.resolution(), grid.origin_x(), grid.origin_y());
  cm.set_inflation(params);
  std::vector<Cell> lethal;
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x)
      if (grid.at(x, y) != CellState::Free) {
        cm.set(x, y, kLethalCost);
        lethal.push_back({x, y});
      }
  if (params.radius <= 0.0 || lethal.empty()) return cm;

  const double res = grid.resolution();
  const int reach = static_cast<int>(std::floor(params.radius / res + 1e-9));
  std::vector<double> dist(static_cast<std::size_t>(grid.width()) * grid.height(),
                           std::numeric_limits<double>::infinity());
  for (const Cell& c : lethal) {
    for (int dy = -reach; dy <= reach; ++dy)
      for (int dx = -reach; dx <= reach; ++dx) {
        const int x = c.x + dx, y = c.y + dy;
        if (!grid.in_bounds(x, y)) continue;
        const double d = std::hypot(dx, dy) * res;
        auto& slot = dist[static_cast<std::size_t>(y) * grid.width() + x];
        slot = std::min(slot, d);
      }
  }
  for (int y = 0; y < grid.height(); ++y)
    for (int x = 0; x < grid.width(); ++x) {
      if (cm.at(x, y) == kLethalCost) continue;
      const double d = dist[static_cast<std::size_t>(y) * grid.width() + x];
      if (d > params.radius + 1e-12) continue;
      const double raw = 254.0 * std::exp(-params.decay * (d - params.robot_radius));
      cm.set(x, y, static_cast<std::uint8_t>(std::clamp(std::floor(raw), 1.0, 253.0)));
    }
  return cm;
}

inline Costmap build_costmap(const OccupancyGrid& grid, double inflation_radius) {
  InflationParams p;
  p.radius = inflation_radius;
  return build_costmap(grid, p);
}

// ---------------------------------------------------------------------------
// Global planning.

/// Exact path cost. Straight moves accumulate (128 + cost) into `straight`,
/// diagonal moves into `diagonal`; the metric value is
/// resolution * (straight + sqrt(2) * diagonal) / 128. Since sqrt(2) is
/// irrational, equal values imply equal integer pairs, so optimal costs
/// compare exactly across search orders.
struct PathCost {
  std::int64_t straight{0};
  std::int64_t diagonal{0};

  double value(double resolution) const {
    return resolution * (static_cast<double>(straight) + std::sqrt(2.0) * static_cast<double>(diagonal)) /
           128.0;
  }
  bool operator==(const PathCost&) const = default;
};

struct GlobalPath {
  std::vector<Cell> cells;
  std::vector<std::pair<double, double>> waypoints;  // cell centers
  PathCost exact_cost;
  double cost{0.0};
};

struct PlannerOptions {
  std::uint8_t lethal_threshold{kInscribedCost};  // cells with cost >= this are impassable
};

inline bool passable(const Costmap& cm, int x, int y, const PlannerOptions& opt) {
  return cm.in_bounds(x, y) && cm.at(x, y) < opt.lethal_threshold;
}

/// 8-connected moves; a diagonal is allowed only if both orthogonal
/// neighbours are passable.
template <typename Fn>
void for_each_move(const Costmap& cm, int x, int y, const PlannerOptions& opt, Fn&& fn) {
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = x + dx, ny = y + dy;
      if (!passable(cm, nx, ny, opt)) continue;
      const bool diag = dx != 0 && dy != 0;
      if (diag && (!passable(cm, x + dx, y, opt) || !passable(cm, x, y + dy, opt))) continue;
      fn(nx, ny, diag, static_cast<std::int64_t>(128 + cm.at(nx, ny)));
    }
}

/// A* over 8-connected cells; edge weight = step length * (1 + cost/128) of
/// the entered cell; Euclidean heuristic (admissible since weights >= length).
inline GlobalPath plan_global(const Costmap& cm, double sx, double sy, double gx, double gy,
                              const PlannerOptions& opt = {}) {
  const auto start = cm.world_to_cell(sx, sy);
  const auto goal = cm.world_to_cell(gx, gy);
  if (!start || !goal) throw Error(Errc::LethalEndpoint, "start or goal outside costmap");
  if (!passable(cm, start->x, start->y, opt)) throw Error(Errc::LethalEndpoint, "start cell is lethal");
  if (!passable(cm, goal->x, goal->y, opt)) throw Error(Errc::LethalEndpoint, "goal cell is lethal");

  const int w = cm.width();
  const std::size_t n = static_cast<std::size_t>(w) * cm.height();
  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  std::vector<PathCost> g(n);
  std::vector<double> gval(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  const double res = cm.resolution();
  auto h = [&](int x, int y) { return std::hypot(x - goal->x, y - goal->y) * res; };

  struct Node {
    double f;
    double g;
    int x, y;
    bool operator>(const Node& o) const {
      if (f != o.f) return f > o.f;
      if (g != o.g) return g < o.g;  // deeper first on ties
      return std::pair{y, x} > std::pair{o.y, o.x};
    }
  };
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  gval[idx(start->x, start->y)] = 0.0;
  open.push({h(start->x, start->y), 0.0, start->x, start->y});
  while (!open.empty()) {
    const Node cur = open.top();
    open.pop();
    const auto ci = idx(cur.x, cur.y);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (cur.x == goal->x && cur.y == goal->y) break;
    for_each_move(cm, cur.x, cur.y, opt, [&](int nx, int ny, bool diag, std::int64_t w128) {
      const auto ni = idx(nx, ny);
      if (closed[ni]) return;
      PathCost cand = g[ci];
      (diag ? cand.diagonal : cand.straight) += w128;
      const double cv = cand.value(res);
      if (cv < gval[ni]) {
        gval[ni] = cv;
        g[ni] = cand;
        parent[ni] = static_cast<int>(ci);
        open.push({cv + h(nx, ny), cv, nx, ny});
      }
    });
  }
  const auto gi = idx(goal->x, goal->y);
  if (!closed[gi]) throw Error(Errc::NoPath, "goal unreachable");

  GlobalPath path;
  for (int i = static_cast<int>(gi); i >= 0; i = parent[static_cast<std::size_t>(i)])
    path.cells.push_back({i % w, i / w});
  std::reverse(path.cells.begin(), path.cells.end());
  for (const Cell& c : path.cells) path.waypoints.push_back(cm.cell_center(c.x, c.y));
  path.exact_cost = g[gi];
  path.cost = g[gi].value(res);
  return path;
}

// ---------------------------------------------------------------------------
// Dynamic Window Approach.

struct DwaParams {
  double v_min{0.0};
  double v_max{0.5};
  double v_accel{0.5};
  double omega_min{-1.0};
  double omega_max{1.0};
  double omega_accel{1.0};
  int v_samples{11};
  int omega_samples{21};
  double horizon{2.0};
  double sim_step{0.1};
  double heading_weight{0.8};
  double clearance_weight{0.1};
  double velocity_weight{0.1};
  double lookahead{0.6};
  std::uint8_t collision_cost{kInscribedCost};

  void validate() const {
    if (!(v_min <= v_max) || !(omega_min <= omega_max))
      throw Error(Errc::InvalidArgument, "velocity bounds out of order");
    if (v_samples < 2 || omega_samples < 2) throw Error(Errc::InvalidArgument, "need >= 2 samples per axis");
    if (heading_weight < 0 || clearance_weight < 0 || velocity_weight < 0)
      throw Error(Errc::InvalidArgument, "objective weights must be >= 0");
    if (!(horizon > 0.0) || !(sim_step > 0.0)) throw Error(Errc::InvalidArgument, "horizon and step must be > 0");
  }
};

struct VelocityCommand {
  double v{0.0};
  double omega{0.0};
  bool operator==(const VelocityCommand&) const = default;
};

struct DynamicWindow {
  double v_lo, v_hi, w_lo, w_hi;
};

inline DynamicWindow dynamic_window(const RobotState& s, const DwaParams& p, double dt) {
  DynamicWindow w{std::max(p.v_min, s.v - p.v_accel * dt), std::min(p.v_max, s.v + p.v_accel * dt),
                  std::max(p.omega_min, s.omega - p.omega_accel * dt),
                  std::min(p.omega_max, s.omega + p.omega_accel * dt)};
  // Current velocity outside the bounds: collapse onto the nearest bound.
  if (w.v_lo > w.v_hi) w.v_lo = w.v_hi = std::clamp(s.v, p.v_min, p.v_max);
  if (w.w_lo > w.w_hi) w.w_lo = w.w_hi = std::clamp(s.omega, p.omega_min, p.omega_max);
  return w;
}

inline std::vector<double> lattice(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  // Snap the symmetric midpoint to exactly zero.
  for (double& x : out)
    if (std::abs(x) < 1e-12 * std::max(1.0, std::abs(hi - lo))) x = 0.0;
  return out;
}

/// Path point the heading term aims at: the first waypoint at least
/// `lookahead` beyond the waypoint closest to the robot, else the goal.
inline std::pair<double, double> lookahead_point(const Pose2& pose, const GlobalPath& path, double lookahead) {
  const auto& wp = path.waypoints;
  std::size_t closest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < wp.size(); ++i) {
    const double d = std::hypot(wp[i].first - pose.x, wp[i].second - pose.y);
    if (d < best) {
      best = d;
      closest = i;
    }
  }
  for (std::size_t i = closest; i < wp.size(); ++i)
    if (std::hypot(wp[i].first - pose.x, wp[i].second - pose.y) >= lookahead) return wp[i];
  return wp.back();
}

struct ArcEvaluation {
  VelocityCommand cmd;
  bool admissible{false};
  double heading{0.0};    // raw: pi - |bearing error| at the arc end
  double clearance{0.0};  // raw: -(max cost along the arc)
  double velocity{0.0};
};

inline ArcEvaluation evaluate_arc(const RobotState& s, VelocityCommand cmd, const Costmap& cm,
                                  const DwaParams& p, std::pair<double, double> target) {
  ArcEvaluation e;
  e.cmd = cmd;
  const int steps = std::max(1, static_cast<int>(std::lround(p.horizon / p.sim_step)));
  int max_cost = cm.cost_world(s.pose.x, s.pose.y);
  if (max_cost >= p.collision_cost) return e;
  Pose2 end = s.pose;
  for (int i = 1; i <= steps; ++i) {
    end = worldsim::unicycle(s.pose, cmd.v, cmd.omega, p.sim_step * i);
    const int c = cm.cost_world(end.x, end.y);
    if (c >= p.collision_cost) return e;
    max_cost = std::max(max_cost, c);
  }
  e.admissible = true;
  const double dx = target.first - end.x, dy = target.second - end.y;
  const double err = std::hypot(dx, dy) < 1e-9 ? 0.0 : std::abs(wrap_angle(std::atan2(dy, dx) - end.heading));
  e.heading = kPi - err;
  e.clearance = -static_cast<double>(max_cost);
  e.velocity = cmd.v;
  return e;
}

/// Preference order among equal scores: lower |omega|, then lower v.
inline bool dwa_prefer(const ArcEvaluation& a, double score_a, const ArcEvaluation& b, double score_b) {
  constexpr double kTie = 1e-12;
  if (score_a > score_b + kTie) return true;
  if (score_b > score_a + kTie) return false;
  if (std::abs(a.cmd.omega) != std::abs(b.cmd.omega)) return std::abs(a.cmd.omega) < std::abs(b.cmd.omega);
  if (a.cmd.v != b.cmd.v) return a.cmd.v < b.cmd.v;
  return a.cmd.omega < b.cmd.omega;
}

struct DwaResult {
  VelocityCommand cmd;
  std::vector<ArcEvaluation> evaluations;  // every lattice sample, row-major (v outer)
};

/// Samples the dynamic window, simulates each arc over the horizon, drops
/// colliding arcs, and returns the argmax of the min-max normalized objective.
inline DwaResult dwa_evaluate(const RobotState& s, const GlobalPath& path, const Costmap& cm, const DwaParams& p,
                              double dt) {
  if (path.waypoints.empty()) throw Error(Errc::InvalidArgument, "empty path");
  const auto win = dynamic_window(s, p, dt);
  const auto target = lookahead_point(s.pose, path, p.lookahead);
  DwaResult out;
  for (double v : lattice(win.v_lo, win.v_hi, p.v_samples))
    for (double w : lattice(win.w_lo, win.w_hi, p.omega_samples))
      out.evaluations.push_back(evaluate_arc(s, {v, w}, cm, p, target));

  struct Range {
    double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    void add(double x) { lo = std::min(lo, x), hi = std::max(hi, x); }
    double norm(double x) const { return hi > lo ? (x - lo) / (hi - lo) : 0.0; }
  } rh, rc, rv;
  for (const auto& e : out.evaluations)
    if (e.admissible) rh.add(e.heading), rc.add(e.clearance), rv.add(e.velocity);

  const ArcEvaluation* best = nullptr;
  double best_score = 0.0;
  for (const auto& e : out.evaluations) {
    if (!e.admissible) continue;
    const double score = p.heading_weight * rh.norm(e.heading) + p.clearance_weight * rc.norm(e.clearance) +
                         p.velocity_weight * rv.norm(e.velocity);
    if (!best || dwa_prefer(e, score, *best, best_score)) {
      best = &e;
      best_score = score;
    }
  }
  if (!best) throw Error(Errc::AllBlocked, "every sampled arc collides");
  out.cmd = best->cmd;
  return out;
}

inline VelocityCommand dwa_step(const RobotState& s, const GlobalPath& path, const Costmap& cm, const DwaParams& p,
                                double dt) {
  return dwa_evaluate(s, path, cm, p, dt).cmd;
}

// ---------------------------------------------------------------------------
// Navigate loop.

struct NavigateOptions {
  DwaParams dwa{};
  double dt{0.1};
  double arrival_distance{0.3};
  double arrival_heading{deg2rad(15.0)};
  bool align_heading{true};
  double recovery_duration{2.0};
  int max_retries{1};
  double max_time{120.0};
  PlannerOptions planner{};
  worldsim::RobotLimits limits{};
};

struct NavigateResult {
  bool arrived{false};
  RobotState state;
  double elapsed{0.0};
  int ticks{0};
  int replans{0};
  bool collided{false};
  std::string failure;  // empty on success
};

/// Plans to `goal` and drives the DWA loop until within the arrival
/// tolerances. AllBlocked triggers an in-place rotation at omega_max for up to
/// `recovery_duration` and a replan; after `max_retries` the goal is reported
/// unreachable.
inline NavigateResult navigate(const OccupancyGrid& grid, const Costmap& cm, const RobotState& start,
                               const Pose2& goal, const NavigateOptions& opt) {
  NavigateResult r;
  r.state = start;
  GlobalPath path = plan_global(cm, start.pose.x, start.pose.y, goal.x, goal.y, opt.planner);
  int retries = 0;
  auto advance = [&](double v, double w) {
    auto k = worldsim::step_kinematics(grid, r.state, v, w, opt.dt, opt.limits);
    r.collided = r.collided || k.collided;
    r.state = k.state;
    r.elapsed += opt.dt;
    ++r.ticks;
  };
  while (r.elapsed < opt.max_time - 1e-9) {
    const double dist = std::hypot(goal.x - r.state.pose.x, goal.y - r.state.pose.y);
    if (dist <= opt.arrival_distance) {
      const double herr = wrap_angle(goal.heading - r.state.pose.heading);
      if (!opt.align_heading || std::abs(herr) <= opt.arrival_heading) {
        r.state.v = r.state.omega = 0.0;
        r.arrived = true;
        return r;
      }
      // Rotate in place toward the approach heading within accel limits.
      const double want = std::clamp(herr / opt.dt, opt.dwa.omega_min, opt.dwa.omega_max);
      const double w = std::clamp(want, r.state.omega - opt.dwa.omega_accel * opt.dt,
                                  r.state.omega + opt.dwa.omega_accel * opt.dt);
      advance(0.0, std::abs(w) < 1e-3 ? std::copysign(0.1, herr) : w);
      continue;
    }
    try {
      const VelocityCommand cmd = dwa_step(r.state, path, cm, opt.dwa, opt.dt);
      advance(cmd.v, cmd.omega);
    } catch (const Error& e) {
      if (e.code() != Errc::AllBlocked) throw;
      if (retries >= opt.max_retries) {
        r.failure = "AllBlocked after recovery";
        return r;
      }
      ++retries;
      for (double t = 0.0; t < opt.recovery_duration - 1e-9; t += opt.dt) {
        advance(0.0, opt.dwa.omega_max);
        try {
          (void)dwa_step(r.state, path, cm, opt.dwa, opt.dt);
          break;
        } catch (const Error& inner) {
          if (inner.code() != Errc::AllBlocked) throw;
        }
      }
      try {
        path = plan_global(cm, r.state.pose.x, r.state.pose.y, goal.x, goal.y, opt.planner);
        ++r.replans;
      } catch (const Error& pe) {
        r.failure = pe.what();
        return r;
      }
    }
  }
  r.failure = "time budget exhausted";
  return r;
}

// ---------------------------------------------------------------------------
// ROI sequencing.

enum class NavEventKind { Arrived, Found, Miss, RoiUnreachable, Exhausted };

inline std::string_view to_string(NavEventKind k) {
  switch (k) {
    case NavEventKind::Arrived: return "Arrived";
    case NavEventKind::Found: return "Found";
    case NavEventKind::Miss: return "Miss";
    case NavEventKind::RoiUnreachable: return "RoiUnreachable";
    case NavEventKind::Exhausted: return "Exhausted";
  }
  return "?";
}

struct NavEvent {
  NavEventKind kind{NavEventKind::Miss};
  int roi{-1};
  double time{0.0};
  std::optional<worldsim::ScanResult> scan;  // set for Found
};

struct SequencerConfig {
  NavigateOptions navigate{};
  worldsim::DepthCamera camera{};
  worldsim::DetectorModel detector{};
  std::vector<double> pan_schedule{worldsim::default_pan_schedule()};
  double pause_before_scan{0.5};  // s
  double seconds_per_pan{1.0};    // dwell per scheduled head angle
};

/// Visits ROIs in order, one at a time. Each ROI is visited at most once.
class RoiSequencer {
 public:
  RoiSequencer(const worldsim::Scene& scene, const Costmap& costmap, std::vector<worldsim::RegionOfInterest> rois,
               SequencerConfig config)
      : scene_(&scene), costmap_(&costmap), rois_(std::move(rois)), config_(std::move(config)) {
    if (rois_.empty()) throw Error(Errc::InvalidArgument, "at least one ROI required");
  }

  std::size_t size() const { return rois_.size(); }
  const std::vector<worldsim::RegionOfInterest>& rois() const { return rois_; }
  const std::vector<int>& visited() const { return visited_; }

  /// Drives to ROI `i`. Returns Arrived or RoiUnreachable; time advances by
  /// the simulated travel duration.
  NavEvent travel(int i, RobotState& robot, double& clock) {
    check_index(i);
    visited_.push_back(i);
    const auto& roi = rois_[static_cast<std::size_t>(i)];
    try {
      const NavigateResult nav = navigate(scene_->grid, *costmap_, robot, roi.pose, config_.navigate);
      robot = nav.state;
      clock += nav.elapsed;
      if (!nav.arrived) return {NavEventKind::RoiUnreachable, i, clock, std::nullopt};
    } catch (const Error& e) {
      if (e.code() != Errc::NoPath && e.code() != Errc::LethalEndpoint) throw;
      return {NavEventKind::RoiUnreachable, i, clock, std::nullopt};
    }
    return {NavEventKind::Arrived, i, clock, std::nullopt};
  }

  /// Pauses, sweeps the head and reports Found or Miss.
  NavEvent scan(int i, const RobotState& robot, double& clock, CounterRng& rng) const {
    check_index(i);
    clock += config_.pause_before_scan;
    auto result = worldsim::scan_at_roi(*scene_, robot, config_.camera, config_.detector, config_.pan_schedule, rng);
    clock += config_.seconds_per_pan * static_cast<double>(result.visited_pans.size());
    if (result.detection) return {NavEventKind::Found, i, clock, std::move(result)};
    return {NavEventKind::Miss, i, clock, std::nullopt};
  }

 private:
  void check_index(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= rois_.size()) throw Error(Errc::OutOfBounds, "ROI index");
  }

  const worldsim::Scene* scene_;
  const Costmap* costmap_;
  std::vector<worldsim::RegionOfInterest> rois_;
  SequencerConfig config_;
  std::vector<int> visited_;
};

/// Full sequential search: for each ROI travel then scan; stop at the first
/// Found; Exhausted after the last ROI. Arrived events are omitted.
inline std::vector<NavEvent> run_roi_sequence(RoiSequencer& seq, RobotState& robot, double& clock, CounterRng& rng) {
  std::vector<NavEvent> events;
  for (int i = 0; i < static_cast<int>(seq.size()); ++i) {
    NavEvent arrival = seq.travel(i, robot, clock);
    if (arrival.kind == NavEventKind::RoiUnreachable) {
      events.push_back(std::move(arrival));
      continue;
    }
    NavEvent ev = seq.scan(i, robot, clock, rng);
    const bool found = ev.kind == NavEventKind::Found;
    events.push_back(std::move(ev));
    if (found) return events;
  }
  events.push_back({NavEventKind::Exhausted, -1, clock, std::nullopt});
  return events;
}

}  // namespace medassist::navigation
