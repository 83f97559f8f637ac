#pragma once

// Perception mathematics: depth-band foreground extraction, pinhole
// back-projection, rigid frame transforms, covariance plane fitting and
// deictic pointing angles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "medassist/core/error.hpp"
#include "medassist/core/vec.hpp"

namespace medassist::geometry {

struct CameraIntrinsics {
  double fx{0.0};
  double fy{0.0};
  double cx{0.0};
  double cy{0.0};
  int width{0};
  int height{0};

  bool contains(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u <= width - 1 && v <= height - 1;
  }

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw Error(Errc::InvalidArgument, "focal lengths must be positive");
    if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "image size must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
      throw Error(Errc::InvalidArgument, "principal point outside image");
  }
};

struct Pixel {
  int u{0};
  int v{0};
  auto operator<=>(const Pixel&) const = default;
};

class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(int width, int height, double fill = 0.0)
      : width_(width), height_(height), depth_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw Error(Errc::InvalidArgument, "negative image size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  double at(int u, int v) const { return depth_[index(u, v)]; }
  double& at(int u, int v) { return depth_[index(u, v)]; }

  std::span<const double> data() const { return depth_; }

  /// Depth 0 encodes no return; negative or non-finite values are rejected.
  void set(int u, int v, double z) {
    if (!std::isfinite(z) || z < 0.0) throw Error(Errc::InvalidArgument, "depth must be finite and >= 0");
    at(u, v) = z;
  }

  bool operator==(const DepthImage&) const = default;

 private:
  std::size_t index(int u, int v) const {
    if (!in_bounds(u, v)) throw Error(Errc::OutOfBounds, "pixel outside depth image");
    return static_cast<std::size_t>(v) * width_ + u;
  }

  int width_{0};
  int height_{0};
  std::vector<double> depth_;
};

/// Inclusive pixel box.
struct BoundingBox {
  int u_min{0};
  int v_min{0};
  int u_max{0};
  int v_max{0};

  bool valid_for(int width, int height) const {
    return u_min <= u_max && v_min <= v_max && u_min >= 0 && v_min >= 0 && u_max < width &&
           v_max < height;
  }
  bool contains(Pixel p) const { return p.u >= u_min && p.u <= u_max && p.v >= v_min && p.v <= v_max; }
  Pixel center() const { return {(u_min + u_max) / 2, (v_min + v_max) / 2}; }
  int area() const { return (u_max - u_min + 1) * (v_max - v_min + 1); }
  bool operator==(const BoundingBox&) const = default;
};

struct ForegroundMask {
  std::vector<Pixel> pixels;  // row-major order
  double z_m{0.0};
  double band_halfwidth{0.0};
  bool center_hit{true};  // false when the center-miss fallback was used
};

inline constexpr double kDefaultBandHalfwidth = 0.15;

struct RigidTransform {
  Mat3 rotation{Mat3::identity()};
  Vec3 translation{};

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform operator*(const RigidTransform& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }

  RigidTransform inverse() const {
    const Mat3 rt = rotation.transposed();
    return {rt, -(rt * translation)};
  }

  bool is_valid(double tol = 1e-9) const {
    const Mat3 should_be_identity = rotation.transposed() * rotation;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(should_be_identity(i, j) - (i == j ? 1.0 : 0.0)) > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

enum class Frame { Camera, Base, World };

class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::vector<Vec3> points, Frame frame) : points_(std::move(points)), frame_(frame) {
    recompute_centroid();
  }

  std::span<const Vec3> points() const { return points_; }
  Frame frame() const { return frame_; }
  const Vec3& centroid() const { return centroid_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  void recompute_centroid() {
    Vec3 sum;
    for (const auto& p : points_) sum += p;
    centroid_ = points_.empty() ? Vec3{} : sum / static_cast<double>(points_.size());
  }

  std::vector<Vec3> points_;
  Frame frame_{Frame::Camera};
  Vec3 centroid_{};
};

struct PlaneFit {
  Vec3 normal;
  double offset{0.0};  // d in n.p + d = 0
  double residual_rms{0.0};
  std::array<double, 3> eigenvalues{};  // ascending
  std::array<Vec3, 3> eigenvectors{};   // matching eigenvalues; [0] is the unoriented normal
};

struct PointingCommand {
  double yaw{0.0};    // (-pi, pi]
  double pitch{0.0};  // [-pi/2, pi/2]
  Vec3 arm_origin;
  Vec3 direction;
};

// ---------------------------------------------------------------------------

inline Vec3 backproject(double u, double v, double z, const CameraIntrinsics& intr) {
  if (!(z > 0.0)) throw Error(Errc::NonPositiveDepth, "depth must be > 0");
  if (!intr.contains(u, v)) throw Error(Errc::OutOfBounds, "pixel outside image");
  return {(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}

inline std::pair<double, double> project(const Vec3& p, const CameraIntrinsics& intr) {
  if (!(p.z > 0.0)) throw Error(Errc::BehindCamera, "point has Z <= 0");
  return {intr.fx * p.x / p.z + intr.cx, intr.fy * p.y / p.z + intr.cy};
}

/// Lower median (element (n-1)/2 of the sorted values).
inline double lower_median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "median of empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

/// Median-depth band segmentation inside a detector box. Keeps the 4-connected
/// component containing the box center pixel; if the center pixel is not
/// retained, the largest component overall (first in row-major scan on ties)
/// is returned and `center_hit` is cleared.
inline ForegroundMask extract_foreground(const DepthImage& depth, const BoundingBox& box,
                                         double band_halfwidth = kDefaultBandHalfwidth) {
  if (!box.valid_for(depth.width(), depth.height()))
    throw Error(Errc::OutOfBounds, "bounding box outside image");
  if (!(band_halfwidth >= 0.0)) throw Error(Errc::InvalidArgument, "band half-width must be >= 0");

  std::vector<double> valid;
  valid.reserve(static_cast<std::size_t>(box.area()));
  for (int v = box.v_min; v <= box.v_max; ++v)
    for (int u = box.u_min; u <= box.u_max; ++u)
      if (depth.at(u, v) > 0.0) valid.push_back(depth.at(u, v));
  if (valid.empty()) throw Error(Errc::EmptyBox, "no valid depth inside box");

  const double z_m = lower_median(std::move(valid));

  const int bw = box.u_max - box.u_min + 1;
  const int bh = box.v_max - box.v_min + 1;
  auto local = [&](int u, int v) { return static_cast<std::size_t>(v - box.v_min) * bw + (u - box.u_min); };

  std::vector<std::uint8_t> retained(static_cast<std::size_t>(bw) * bh, 0);
  for (int v = box.v_min; v <= box.v_max; ++v)
    for (int u = box.u_min; u <= box.u_max; ++u) {
      const double z = depth.at(u, v);
      retained[local(u, v)] = (z > 0.0 && std::abs(z - z_m) <= band_halfwidth) ? 1 : 0;
    }

  // Label 4-connected components in row-major scan order.
  std::vector<int> label(retained.size(), -1);
  std::vector<std::vector<Pixel>> components;
  std::deque<Pixel> frontier;
  for (int v = box.v_min; v <= box.v_max; ++v) {
    for (int u = box.u_min; u <= box.u_max; ++u) {
      if (!retained[local(u, v)] || label[local(u, v)] >= 0) continue;
      const int id = static_cast<int>(components.size());
      components.emplace_back();
      label[local(u, v)] = id;
      frontier.push_back({u, v});
      while (!frontier.empty()) {
        const Pixel p = frontier.front();
        frontier.pop_front();
        components[id].push_back(p);
        constexpr std::array<std::pair<int, int>, 4> kNbrs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (auto [du, dv] : kNbrs) {
          const Pixel q{p.u + du, p.v + dv};
          if (!box.contains(q)) continue;
          const auto qi = local(q.u, q.v);
          if (retained[qi] && label[qi] < 0) {
            label[qi] = id;
            frontier.push_back(q);
          }
        }
      }
    }
  }

  ForegroundMask mask;
  mask.z_m = z_m;
  mask.band_halfwidth = band_halfwidth;
  const Pixel c = box.center();
  int chosen = label[local(c.u, c.v)];
  mask.center_hit = chosen >= 0;
  if (chosen < 0) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < components.size(); ++i)
      if (components[i].size() > best) {
        best = components[i].size();
        chosen = static_cast<int>(i);
      }
  }
  mask.pixels = std::move(components[static_cast<std::size_t>(chosen)]);
  std::sort(mask.pixels.begin(), mask.pixels.end(),
            [](Pixel a, Pixel b) { return std::pair{a.v, a.u} < std::pair{b.v, b.u}; });
  return mask;
}

/// Back-projects every mask pixel with its measured depth.
inline PointCloud mask_to_cloud(const DepthImage& depth, const ForegroundMask& mask,
                                const CameraIntrinsics& intr) {
  std::vector<Vec3> pts;
  pts.reserve(mask.pixels.size());
  for (const Pixel& p : mask.pixels) pts.push_back(backproject(p.u, p.v, depth.at(p.u, p.v), intr));
  return PointCloud(std::move(pts), Frame::Camera);
}

inline PointCloud to_base(const PointCloud& cloud, const RigidTransform& base_from_cam) {
  if (cloud.empty()) throw Error(Errc::InvalidArgument, "empty point cloud");
  std::vector<Vec3> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud.points()) pts.push_back(base_from_cam.apply(p));
  return PointCloud(std::move(pts), Frame::Base);
}

struct SymmetricEigen {
  std::array<double, 3> values{};  // ascending
  std::array<Vec3, 3> vectors{};
};

/// Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix. Eigenvalues are
/// returned ascending; each eigenvector has unit length.
inline SymmetricEigen symmetric_eigen(const Mat3& input) {
  Mat3 a = input;
  Mat3 v = Mat3::identity();
  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        Mat3 j = Mat3::identity();
        j(p, p) = c;
        j(q, q) = c;
        j(p, q) = s;
        j(q, p) = -s;
        a = j.transposed() * a * j;
        a(p, q) = a(q, p) = 0.0;
        v = v * j;
      }
    }
  }
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int i, int k) { return a(i, i) < a(k, k); });
  SymmetricEigen out;
  for (int i = 0; i < 3; ++i) {
    out.values[i] = a(order[i], order[i]);
    out.vectors[i] = v.column(order[i]).normalized();
  }
  return out;
}

/// Population covariance about the centroid.
inline Mat3 covariance(std::span<const Vec3> pts, const Vec3& mean) {
  Mat3 c;
  for (const auto& p : pts) {
    const Vec3 d = p - mean;
    const std::array<double, 3> e{d.x, d.y, d.z};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c(i, j) += e[i] * e[j];
  }
  const double n = static_cast<double>(pts.size());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) /= n;
  return c;
}

namespace detail {
inline bool abs_lex_greater(const Vec3& a, const Vec3& b) {
  const std::array<double, 3> x{std::abs(a.x), std::abs(a.y), std::abs(a.z)};
  const std::array<double, 3> y{std::abs(b.x), std::abs(b.y), std::abs(b.z)};
  return x > y;
}
}  // namespace detail

/// Least-squares plane through a patch: the normal is the covariance eigenvector
/// with the smallest eigenvalue, oriented so that normal . camera_axis < 0.
inline PlaneFit fit_plane(const PointCloud& patch, const Vec3& camera_axis_in_frame) {
  if (patch.size() < 3) throw Error(Errc::DegeneratePatch, "need at least 3 points");
  const Vec3& mean = patch.centroid();
  const SymmetricEigen eig = symmetric_eigen(covariance(patch.points(), mean));

  const double scale = std::max({std::abs(eig.values[2]), 1e-300});
  if (eig.values[1] <= 1e-12 * scale) throw Error(Errc::DegeneratePatch, "points are collinear");

  // Ties on the smallest eigenvalue: lexicographically largest |components|.
  const double tie_tol = 1e-9 * scale;
  Vec3 normal = eig.vectors[0];
  for (int i = 1; i < 3; ++i)
    if (eig.values[i] - eig.values[0] <= tie_tol && detail::abs_lex_greater(eig.vectors[i], normal))
      normal = eig.vectors[i];

  if (normal.dot(camera_axis_in_frame) >= 0.0) normal = -normal;

  PlaneFit fit;
  fit.normal = normal;
  fit.offset = -normal.dot(mean);
  double ss = 0.0;
  for (const auto& p : patch.points()) {
    const double r = normal.dot(p) + fit.offset;
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(patch.size()));
  fit.eigenvalues = eig.values;
  fit.eigenvectors = eig.vectors;
  return fit;
}

/// Points within `radius_factor` times the RMS radius of the centroid.
inline PointCloud centroid_patch(const PointCloud& cloud, double radius_factor = 2.0) {
  if (cloud.empty()) throw Error(Errc::InvalidArgument, "empty point cloud");
  const Vec3& c = cloud.centroid();
  double ss = 0.0;
  for (const auto& p : cloud.points()) ss += (p - c).dot(p - c);
  const double limit = radius_factor * std::sqrt(ss / static_cast<double>(cloud.size()));
  std::vector<Vec3> kept;
  for (const auto& p : cloud.points())
    if ((p - c).norm() <= limit) kept.push_back(p);
  return PointCloud(std::move(kept), cloud.frame());
}

inline PointingCommand pointing_angles(const Vec3& target_base, const Vec3& arm_origin) {
  const Vec3 d = target_base - arm_origin;
  if (d.norm() < 1e-9) throw Error(Errc::ZeroDirection, "target coincides with arm origin");
  PointingCommand cmd;
  cmd.arm_origin = arm_origin;
  cmd.direction = d;
  cmd.yaw = std::atan2(d.y, d.x);
  if (cmd.yaw <= -kPi) cmd.yaw = kPi;
  cmd.pitch = std::atan2(d.z, std::hypot(d.x, d.y));
  return cmd;
}

/// Unit vector a pointing command refers to.
inline Vec3 pointing_unit_vector(double yaw, double pitch) {
  return {std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch)};
}

// ---------------------------------------------------------------------------
// Detection-to-target pipeline.

struct TargetEstimate {
  ForegroundMask mask;
  PointCloud cloud_base;
  Vec3 centroid_base;
  std::optional<PlaneFit> plane;  // empty when the patch is degenerate
  std::size_t patch_size{0};
};

inline TargetEstimate localize_target(const DepthImage& depth, const BoundingBox& box,
                                      const CameraIntrinsics& intr, const RigidTransform& base_from_cam,
                                      double band_halfwidth = kDefaultBandHalfwidth,
                                      double patch_radius_factor = 2.0) {
  TargetEstimate est;
  est.mask = extract_foreground(depth, box, band_halfwidth);
  est.cloud_base = to_base(mask_to_cloud(depth, est.mask, intr), base_from_cam);
  est.centroid_base = est.cloud_base.centroid();
  const PointCloud patch = centroid_patch(est.cloud_base, patch_radius_factor);
  est.patch_size = patch.size();
  const Vec3 optical_axis = base_from_cam.rotation * Vec3{0.0, 0.0, 1.0};
  try {
    est.plane = fit_plane(patch, optical_axis);
  } catch (const Error& e) {
    if (e.code() != Errc::DegeneratePatch) throw;
  }
  return est;
}

}  // namespace medassist::geometry
