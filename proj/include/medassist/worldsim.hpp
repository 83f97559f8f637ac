#pragma once

// Simulated environment: occupancy grid, regions of interest, scene objects,
// robot embodiment, a ray-cast depth camera and a parametric detector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "medassist/core/error.hpp"
#include "medassist/core/rng.hpp"
#include "medassist/core/vec.hpp"
#include "medassist/geometry.hpp"

namespace medassist::worldsim {

using geometry::BoundingBox;
using geometry::CameraIntrinsics;
using geometry::DepthImage;
using geometry::RigidTransform;

enum class CellState : std::uint8_t { Free, Occupied, Unknown };

struct Cell {
  int x{0};
  int y{0};
  auto operator<=>(const Cell&) const = default;
};

struct Pose2 {
  double x{0.0};
  double y{0.0};
  double heading{0.0};
  bool operator==(const Pose2&) const = default;
};

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double resolution, double origin_x = 0.0, double origin_y = 0.0,
                CellState fill = CellState::Free)
      : width_(width), height_(height), resolution_(resolution), origin_x_(origin_x), origin_y_(origin_y),
        cells_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
    if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "grid dimensions must be positive");
    if (!(resolution > 0.0)) throw Error(Errc::InvalidArgument, "grid resolution must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  void set_origin(double x, double y) {
    origin_x_ = x;
    origin_y_ = y;
  }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  CellState at(int x, int y) const { return cells_[index(x, y)]; }
  void set(int x, int y, CellState s) { cells_[index(x, y)] = s; }
  std::size_t index(int x, int y) const {
    if (!in_bounds(x, y)) throw Error(Errc::OutOfBounds, "cell outside grid");
    return static_cast<std::size_t>(y) * width_ + x;
  }

  std::optional<Cell> world_to_cell(double wx, double wy) const {
    const int x = static_cast<int>(std::floor((wx - origin_x_) / resolution_));
    const int y = static_cast<int>(std::floor((wy - origin_y_) / resolution_));
    if (!in_bounds(x, y)) return std::nullopt;
    return Cell{x, y};
  }

  std::pair<double, double> cell_center(int x, int y) const {
    return {origin_x_ + (x + 0.5) * resolution_, origin_y_ + (y + 0.5) * resolution_};
  }

  /// True for Occupied cells and anything outside the map.
  bool blocked_world(double wx, double wy) const {
    const auto c = world_to_cell(wx, wy);
    return !c || at(c->x, c->y) == CellState::Occupied;
  }

  bool operator==(const OccupancyGrid&) const = default;

 private:
  int width_{0};
  int height_{0};
  double resolution_{1.0};
  double origin_x_{0.0};
  double origin_y_{0.0};
  std::vector<CellState> cells_;
};

/// ASCII map: header line `W H RESOLUTION`, then H rows of W characters
/// (`#` occupied, `.` free, `?` unknown). The first row is the top of the map
/// (largest y).
inline OccupancyGrid parse_ascii_map(const std::string& text, const std::string& source = "<map>") {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(Errc::ParseError, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  int w = 0, h = 0;
  double res = 0.0;
  {
    std::istringstream hdr(line);
    std::string extra;
    if (!(hdr >> w >> h >> res) || (hdr >> extra)) fail("expected header 'W H RESOLUTION'");
    if (w <= 0 || h <= 0 || !(res > 0.0)) fail("header values must be positive");
  }
  OccupancyGrid grid(w, h, res);
  for (int row = 0; row < h; ++row) {
    if (!std::getline(in, line)) {
      ++line_no;
      fail("expected " + std::to_string(h) + " map rows, got " + std::to_string(row));
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != w)
      fail("row has " + std::to_string(line.size()) + " cells, expected " + std::to_string(w));
    const int y = h - 1 - row;
    for (int x = 0; x < w; ++x) {
      switch (line[static_cast<std::size_t>(x)]) {
        case '#': grid.set(x, y, CellState::Occupied); break;
        case '.': grid.set(x, y, CellState::Free); break;
        case '?': grid.set(x, y, CellState::Unknown); break;
        default: fail(std::string("unexpected cell character '") + line[static_cast<std::size_t>(x)] + "'");
      }
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line != "\r") fail("trailing content after map rows");
  }
  return grid;
}

inline std::string to_ascii_map(const OccupancyGrid& grid) {
  std::ostringstream out;
  out << grid.width() << ' ' << grid.height() << ' ' << grid.resolution() << '\n';
  for (int y = grid.height() - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width(); ++x) {
      const CellState s = grid.at(x, y);
      out << (s == CellState::Occupied ? '#' : s == CellState::Unknown ? '?' : '.');
    }
    out << '\n';
  }
  return out.str();
}

inline OccupancyGrid load_ascii_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileNotFound, "cannot open map file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ascii_map(buf.str(), path);
}

struct RegionOfInterest {
  std::string id;
  Pose2 pose;  // standing position and approach heading
  std::string label;
};

enum class ObjectKind { PillBottle, WaterBottle, Distractor };

inline std::string_view to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::PillBottle: return "PillBottle";
    case ObjectKind::WaterBottle: return "WaterBottle";
    case ObjectKind::Distractor: return "Distractor";
  }
  return "?";
}

struct BoxShape {
  Vec3 size;  // full extents
};
struct CylinderShape {
  double radius{0.0};
  double height{0.0};
};
using Shape = std::variant<BoxShape, CylinderShape>;

/// `position` is the geometric center of the shape in world coordinates.
struct SceneObject {
  ObjectKind kind{ObjectKind::Distractor};
  Vec3 position;
  Shape shape{BoxShape{{0.1, 0.1, 0.1}}};

  void validate() const {
    const bool ok = std::visit(
        [](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, BoxShape>) return s.size.x > 0 && s.size.y > 0 && s.size.z > 0;
          else return s.radius > 0 && s.height > 0;
        },
        shape);
    if (!ok) throw Error(Errc::InvalidArgument, "object dimensions must be positive");
  }
};

struct Scene {
  OccupancyGrid grid;
  std::vector<SceneObject> objects;
  double wall_height{2.0};

  std::optional<std::size_t> pill_bottle() const {
    for (std::size_t i = 0; i < objects.size(); ++i)
      if (objects[i].kind == ObjectKind::PillBottle) return i;
    return std::nullopt;
  }
};

struct RobotLimits {
  double v_max{0.5};
  double omega_max{1.0};
};

struct RobotState {
  Pose2 pose;
  double v{0.0};
  double omega{0.0};
  double head_pan{0.0};
  RigidTransform camera_mount;  // base <- camera at zero head pan

  /// base <- camera including the head pan (rotation about the base z axis).
  RigidTransform base_from_camera() const {
    const RigidTransform pan{Mat3::rot_z(head_pan), {}};
    return pan * camera_mount;
  }

  RigidTransform world_from_base() const {
    return {Mat3::rot_z(pose.heading), {pose.x, pose.y, 0.0}};
  }

  RigidTransform world_from_camera() const { return world_from_base() * base_from_camera(); }
};

/// base <- camera for an optical frame (z forward, x right, y down) mounted at
/// `position` and tilted down by `tilt` radians.
inline RigidTransform make_camera_mount(const Vec3& position, double tilt) {
  // Optical axes expressed in base coordinates at zero tilt.
  const Mat3 optical = Mat3::from_columns({0.0, -1.0, 0.0}, {0.0, 0.0, -1.0}, {1.0, 0.0, 0.0});
  return {Mat3::rot_y(tilt) * optical, position};
}

struct DepthCamera {
  CameraIntrinsics intrinsics{140.0, 140.0, 80.0, 60.0, 160, 120};
  double max_range{4.0};
  double noise_sigma{0.0};
};

struct DetectorModel {
  double true_positive_rate{1.0};
  double false_positive_rate{0.0};
  double box_noise_sigma{0.0};
  double max_range{4.0};
  int min_visible_pixels{25};

  void validate() const {
    auto in01 = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in01(true_positive_rate) || !in01(false_positive_rate))
      throw Error(Errc::InvalidArgument, "detector rates must lie in [0, 1]");
    if (!(box_noise_sigma >= 0.0)) throw Error(Errc::InvalidArgument, "box noise sigma must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Ray casting.

inline constexpr int kHitWall = -1;
inline constexpr int kHitNone = -2;

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Smallest t > eps where origin + t*dir lies in the box, or +inf.
inline double ray_aabb(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi) {
  double t0 = 1e-9, t1 = kInf;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < lo[a] || o[a] > hi[a]) return kInf;
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return kInf;
  }
  return t0;
}

inline double ray_cylinder(const Vec3& o, const Vec3& d, const Vec3& center, double r, double h) {
  const double z0 = center.z - h / 2.0, z1 = center.z + h / 2.0;
  double best = kInf;
  const double ox = o.x - center.x, oy = o.y - center.y;
  const double a = d.x * d.x + d.y * d.y;
  if (a > 1e-15) {
    const double b = 2.0 * (ox * d.x + oy * d.y);
    const double c = ox * ox + oy * oy - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (t <= 1e-9) continue;
        const double z = o.z + t * d.z;
        if (z >= z0 && z <= z1) {
          best = std::min(best, t);
          break;
        }
      }
    }
  }
  if (std::abs(d.z) > 1e-15) {
    for (double zc : {z0, z1}) {
      const double t = (zc - o.z) / d.z;
      if (t <= 1e-9) continue;
      const double px = ox + t * d.x, py = oy + t * d.y;
      if (px * px + py * py <= r * r) best = std::min(best, t);
    }
  }
  return best;
}

inline double ray_object(const Vec3& o, const Vec3& d, const SceneObject& obj) {
  return std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, BoxShape>) {
          return ray_aabb(o, d, obj.position - s.size / 2.0, obj.position + s.size / 2.0);
        } else {
          return ray_cylinder(o, d, obj.position, s.radius, s.height);
        }
      },
      obj.shape);
}

/// Nearest occupied-cell wall hit along the ray within t_limit (grid DDA).
inline double ray_grid(const Vec3& o, const Vec3& d, const OccupancyGrid& g, double wall_height,
                       double t_limit) {
  const double res = g.resolution();
  const double gx0 = g.origin_x(), gy0 = g.origin_y();
  const double gx1 = gx0 + g.width() * res, gy1 = gy0 + g.height() * res;
  auto wall_hit = [&](int cx, int cy) {
    const Vec3 lo{gx0 + cx * res, gy0 + cy * res, 0.0};
    return ray_aabb(o, d, lo, {lo.x + res, lo.y + res, wall_height});
  };

  // Clip to the grid footprint in xy.
  double t0 = 0.0, t1 = t_limit;
  const std::array<std::pair<double, double>, 2> bounds{{{gx0, gx1}, {gy0, gy1}}};
  for (int a = 0; a < 2; ++a) {
    const double oa = a == 0 ? o.x : o.y, da = a == 0 ? d.x : d.y;
    if (std::abs(da) < 1e-15) {
      if (oa < bounds[a].first || oa > bounds[a].second) return kInf;
      continue;
    }
    double ta = (bounds[a].first - oa) / da, tb = (bounds[a].second - oa) / da;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return kInf;

  const double px = o.x + d.x * t0, py = o.y + d.y * t0;
  int cx = std::clamp(static_cast<int>(std::floor((px - gx0) / res)), 0, g.width() - 1);
  int cy = std::clamp(static_cast<int>(std::floor((py - gy0) / res)), 0, g.height() - 1);
  const int sx = d.x > 0 ? 1 : (d.x < 0 ? -1 : 0);
  const int sy = d.y > 0 ? 1 : (d.y < 0 ? -1 : 0);
  auto next_boundary = [&](int c, int s, double origin, double oa, double da) {
    if (s == 0) return kInf;
    const double edge = origin + (s > 0 ? c + 1 : c) * res;
    return (edge - oa) / da;
  };
  double tmx = next_boundary(cx, sx, gx0, o.x, d.x);
  double tmy = next_boundary(cy, sy, gy0, o.y, d.y);
  const double tdx = sx ? res / std::abs(d.x) : kInf;
  const double tdy = sy ? res / std::abs(d.y) : kInf;

  while (true) {
    if (g.at(cx, cy) == CellState::Occupied) {
      const double t = wall_hit(cx, cy);
      if (t <= t_limit) return t;
    }
    if (std::min(tmx, tmy) > t1) return kInf;
    if (tmx < tmy) {
      cx += sx;
      tmx += tdx;
    } else {
      cy += sy;
      tmy += tdy;
    }
    if (!g.in_bounds(cx, cy)) return kInf;
  }
}

}  // namespace detail

/// Depth frame plus the index of the surface each pixel hit.
struct RenderedFrame {
  DepthImage depth;
  std::vector<int> hit;  // object index, kHitWall, or kHitNone; row-major

  int hit_at(int u, int v) const { return hit[static_cast<std::size_t>(v) * depth.width() + u]; }
};

/// One ray per pixel; the depth is the optical-axis Z of the nearest hit.
/// Additive Gaussian noise is applied only when an rng is supplied.
inline RenderedFrame render_depth(const Scene& scene, const RobotState& robot, const DepthCamera& camera,
                                  CounterRng* noise_rng = nullptr) {
  const auto& intr = camera.intrinsics;
  RenderedFrame frame{DepthImage(intr.width, intr.height),
                      std::vector<int>(static_cast<std::size_t>(intr.width) * intr.height, kHitNone)};
  const RigidTransform wc = robot.world_from_camera();
  const Vec3 origin = wc.translation;
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      // Direction with unit optical-axis component, so t equals Z depth.
      const Vec3 dir = wc.rotation * Vec3{(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0};
      double best = detail::ray_grid(origin, dir, scene.grid, scene.wall_height, camera.max_range);
      int who = std::isfinite(best) ? kHitWall : kHitNone;
      for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const double t = detail::ray_object(origin, dir, scene.objects[i]);
        if (t < best) {
          best = t;
          who = static_cast<int>(i);
        }
      }
      if (!(best <= camera.max_range)) continue;
      double z = best;
      if (noise_rng && camera.noise_sigma > 0.0) z = std::max(1e-6, z + noise_rng->normal(0.0, camera.noise_sigma));
      frame.depth.at(u, v) = z;
      frame.hit[static_cast<std::size_t>(v) * intr.width + u] = who;
    }
  }
  return frame;
}

struct Detection {
  BoundingBox box;
  ObjectKind kind{ObjectKind::PillBottle};  // reported class
  int source_object{-1};                    // scene object that produced the box
  bool true_positive{true};
};

namespace detail {
struct VisibleExtent {
  int pixels{0};
  BoundingBox box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
  double nearest{kInf};
};

inline VisibleExtent visible_extent(const RenderedFrame& f, int object) {
  VisibleExtent e;
  for (int v = 0; v < f.depth.height(); ++v)
    for (int u = 0; u < f.depth.width(); ++u)
      if (f.hit_at(u, v) == object) {
        ++e.pixels;
        e.box.u_min = std::min(e.box.u_min, u);
        e.box.v_min = std::min(e.box.v_min, v);
        e.box.u_max = std::max(e.box.u_max, u);
        e.box.v_max = std::max(e.box.v_max, v);
        e.nearest = std::min(e.nearest, f.depth.at(u, v));
      }
  return e;
}

inline BoundingBox perturb_box(BoundingBox b, double sigma, int width, int height, CounterRng& rng) {
  if (sigma <= 0.0) return b;
  auto jitter = [&](int c, int hi) {
    return std::clamp(static_cast<int>(std::lround(c + rng.normal(0.0, sigma))), 0, hi);
  };
  b.u_min = jitter(b.u_min, width - 1);
  b.u_max = jitter(b.u_max, width - 1);
  b.v_min = jitter(b.v_min, height - 1);
  b.v_max = jitter(b.v_max, height - 1);
  if (b.u_min > b.u_max) std::swap(b.u_min, b.u_max);
  if (b.v_min > b.v_max) std::swap(b.v_min, b.v_max);
  return b;
}
}  // namespace detail

/// Parametric detector: a visible, unoccluded pill bottle (at least
/// `min_visible_pixels` pixels within range) is reported with probability
/// `true_positive_rate`; otherwise a visible distractor may be reported as a
/// pill bottle with probability `false_positive_rate`.
inline std::optional<Detection> detect(const RenderedFrame& frame, const Scene& scene,
                                       const DetectorModel& model, CounterRng& rng) {
  const int w = frame.depth.width(), h = frame.depth.height();
  const double tp_draw = rng.uniform();
  const double fp_draw = rng.uniform();
  if (const auto bottle = scene.pill_bottle()) {
    const auto ext = detail::visible_extent(frame, static_cast<int>(*bottle));
    if (ext.pixels >= model.min_visible_pixels && ext.nearest <= model.max_range &&
        tp_draw < model.true_positive_rate) {
      return Detection{detail::perturb_box(ext.box, model.box_noise_sigma, w, h, rng), ObjectKind::PillBottle,
                       static_cast<int>(*bottle), true};
    }
  }
  if (fp_draw >= model.false_positive_rate) return std::nullopt;
  std::vector<std::pair<int, BoundingBox>> candidates;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (scene.objects[i].kind == ObjectKind::PillBottle) continue;
    const auto ext = detail::visible_extent(frame, static_cast<int>(i));
    if (ext.pixels >= model.min_visible_pixels && ext.nearest <= model.max_range)
      candidates.emplace_back(static_cast<int>(i), ext.box);
  }
  if (candidates.empty()) return std::nullopt;
  const auto& [idx, box] = candidates[rng.below(candidates.size())];
  return Detection{detail::perturb_box(box, model.box_noise_sigma, w, h, rng), ObjectKind::PillBottle, idx, false};
}

inline std::vector<double> default_pan_schedule() {
  return {deg2rad(-30.0), deg2rad(-15.0), 0.0, deg2rad(15.0), deg2rad(30.0)};
}

struct ScanResult {
  std::optional<Detection> detection;
  double pan{0.0};                 // pan at which the detection occurred
  RenderedFrame frame;             // frame of the detection
  RigidTransform base_from_camera; // camera pose of the detection
  std::vector<double> visited_pans;
  RobotState restored;             // robot with the original head pan
};

/// Sweeps the head through `schedule`, one frame per angle, and stops at the
/// first positive detection.
inline ScanResult scan_at_roi(const Scene& scene, const RobotState& robot, const DepthCamera& camera,
                              const DetectorModel& model, const std::vector<double>& schedule,
                              CounterRng& rng) {
  ScanResult result;
  result.restored = robot;
  RobotState probe = robot;
  for (double pan : schedule) {
    probe.head_pan = std::clamp(pan, -kPi / 2.0, kPi / 2.0);
    result.visited_pans.push_back(probe.head_pan);
    RenderedFrame frame = render_depth(scene, probe, camera, &rng);
    if (auto det = detect(frame, scene, model, rng)) {
      result.detection = det;
      result.pan = probe.head_pan;
      result.frame = std::move(frame);
      result.base_from_camera = probe.base_from_camera();
      break;
    }
  }
  return result;
}

struct KinematicsResult {
  RobotState state;
  bool collided{false};
};

/// Closed-form unicycle pose after moving for `t` seconds at (v, omega).
inline Pose2 unicycle(const Pose2& p, double v, double omega, double t) {
  if (std::abs(omega) < 1e-12) {
    return {p.x + v * t * std::cos(p.heading), p.y + v * t * std::sin(p.heading), p.heading};
  }
  const double h1 = p.heading + omega * t;
  return {p.x + v / omega * (std::sin(h1) - std::sin(p.heading)),
          p.y - v / omega * (std::cos(h1) - std::cos(p.heading)), wrap_angle(h1)};
}

/// Integrates a velocity command. The swept arc is sampled at a quarter cell;
/// entering an Occupied (or off-map) cell stops the robot at the last free
/// sample and raises the collision flag.
inline KinematicsResult step_kinematics(const OccupancyGrid& grid, const RobotState& state, double v,
                                        double omega, double dt, const RobotLimits& limits = {}) {
  if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "dt must be positive");
  v = std::clamp(v, -limits.v_max, limits.v_max);
  omega = std::clamp(omega, -limits.omega_max, limits.omega_max);
  const double arc = std::abs(v) * dt;
  const int n = std::max({1, static_cast<int>(std::ceil(arc / (grid.resolution() / 4.0))),
                          static_cast<int>(std::ceil(std::abs(omega) * dt / deg2rad(5.0)))});
  KinematicsResult out{state, false};
  out.state.v = v;
  out.state.omega = omega;
  Pose2 last = state.pose;
  for (int i = 1; i <= n; ++i) {
    const Pose2 p = unicycle(state.pose, v, omega, dt * i / n);
    if (grid.blocked_world(p.x, p.y)) {
      out.collided = true;
      out.state.pose = last;
      out.state.v = 0.0;
      out.state.omega = 0.0;
      return out;
    }
    last = p;
  }
  out.state.pose = unicycle(state.pose, v, omega, dt);
  return out;
}

}  // namespace medassist::worldsim
