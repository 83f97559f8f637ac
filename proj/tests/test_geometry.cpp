#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "medassist/geometry.hpp"
#include "oracles.hpp"

using namespace medassist;
using namespace medassist::geometry;

namespace {

const CameraIntrinsics kIntr{500, 500, 320, 240, 640, 480};

void expect_vec(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

PointCloud cloud(std::vector<Vec3> pts) { return PointCloud(std::move(pts), Frame::Base); }

}  // namespace

TEST(Backproject, PrincipalPointIsOpticalAxis) {
  expect_vec(backproject(320, 240, 2.0, kIntr), {0, 0, 2.0}, 1e-15);
}

TEST(Backproject, HandEvaluatedPixel) {
  expect_vec(backproject(420, 300, 2.0, kIntr), {0.4, 0.24, 2.0}, 1e-12);
}

TEST(Backproject, Errors) {
  EXPECT_EQ(code_of([] { backproject(320, 240, 0.0, kIntr); }), Errc::NonPositiveDepth);
  EXPECT_EQ(code_of([] { backproject(320, 240, -1.0, kIntr); }), Errc::NonPositiveDepth);
  EXPECT_EQ(code_of([] { backproject(640, 240, 1.0, kIntr); }), Errc::OutOfBounds);
  EXPECT_EQ(code_of([] { backproject(-1, 0, 1.0, kIntr); }), Errc::OutOfBounds);
}

TEST(Project, Examples) {
  auto [u0, v0] = project({0, 0, 2.0}, kIntr);
  EXPECT_DOUBLE_EQ(u0, 320);
  EXPECT_DOUBLE_EQ(v0, 240);
  auto [u, v] = project({0.4, 0.24, 2.0}, kIntr);
  EXPECT_NEAR(u, 420, 1e-12);
  EXPECT_NEAR(v, 300, 1e-12);
  EXPECT_EQ(code_of([] { project({0, 0, -1}, kIntr); }), Errc::BehindCamera);
  EXPECT_EQ(code_of([] { project({0, 0, 0}, kIntr); }), Errc::BehindCamera);
}

TEST(Project, RoundTripRandom) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> uu(0, 639), vv(0, 479), zz(0.05, 20);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 p = backproject(uu(gen), vv(gen), zz(gen), kIntr);
    auto [u, v] = project(p, kIntr);
    const Vec3 q = backproject(u, v, p.z, kIntr);
    EXPECT_LE((q - p).norm() / p.norm(), 1e-9);
  }
}

TEST(Intrinsics, Validation) {
  EXPECT_NO_THROW(kIntr.validate());
  EXPECT_THROW((CameraIntrinsics{0, 1, 1, 1, 4, 4}.validate()), Error);
  EXPECT_THROW((CameraIntrinsics{1, 1, 4, 1, 4, 4}.validate()), Error);
}

TEST(DepthImageType, RejectsBadDepth) {
  DepthImage img(4, 4);
  EXPECT_THROW(img.set(0, 0, -1.0), Error);
  EXPECT_THROW(img.set(0, 0, std::nan("")), Error);
  EXPECT_EQ(code_of([&] { img.at(4, 0); }), Errc::OutOfBounds);
}

TEST(Foreground, UniformDepthKeepsWholeBox) {
  DepthImage img(20, 20, 2.0);
  const BoundingBox box{3, 4, 12, 10};
  const auto m = extract_foreground(img, box, 0.2);
  EXPECT_EQ(m.z_m, 2.0);
  EXPECT_EQ(static_cast<int>(m.pixels.size()), box.area());
  EXPECT_TRUE(m.center_hit);
}

TEST(Foreground, BackgroundCornerDropped) {
  DepthImage img(10, 10, 2.0);
  // 10% of a 10x10 box: a 2x5 corner block at 5.0 m.
  for (int v = 0; v < 2; ++v)
    for (int u = 0; u < 5; ++u) img.at(u, v) = 5.0;
  const BoundingBox box{0, 0, 9, 9};
  const auto m = extract_foreground(img, box, 0.2);
  EXPECT_EQ(m.z_m, 2.0);
  EXPECT_EQ(m.pixels.size(), 90u);
  for (auto p : m.pixels) EXPECT_EQ(img.at(p.u, p.v), 2.0);
  EXPECT_EQ(m.pixels, oracle::foreground(img, box, 0.2));
}

TEST(Foreground, AllInvalidIsEmptyBox) {
  DepthImage img(8, 8, 0.0);
  EXPECT_EQ(code_of([&] { extract_foreground(img, {0, 0, 7, 7}); }), Errc::EmptyBox);
}

TEST(Foreground, BoxOutsideImage) {
  DepthImage img(8, 8, 1.0);
  EXPECT_EQ(code_of([&] { extract_foreground(img, {0, 0, 8, 7}); }), Errc::OutOfBounds);
}

TEST(Foreground, EvenCountUsesLowerMedian) {
  DepthImage img(2, 1);
  img.at(0, 0) = 1.0;
  img.at(1, 0) = 3.0;
  const auto m = extract_foreground(img, {0, 0, 1, 0}, 0.1);
  EXPECT_EQ(m.z_m, 1.0);
}

TEST(Foreground, CenterMissFallsBackToLargest) {
  DepthImage img(9, 9, 2.0);
  for (int v = 0; v < 9; ++v) img.at(4, v) = 0.0;  // invalid seam through the center
  for (int v = 0; v < 9; ++v) img.at(0, v) = 0.0;  // left part smaller than right
  const auto m = extract_foreground(img, {0, 0, 8, 8}, 0.1);
  EXPECT_FALSE(m.center_hit);
  EXPECT_EQ(m.pixels.size(), 36u);
  EXPECT_EQ(m.pixels.front().u, 5);
}

TEST(Foreground, FloodFillOracleRandomImages) {
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(static_cast<unsigned>(seed));
    std::uniform_int_distribution<int> size(4, 24);
    const int w = size(gen), h = size(gen);
    DepthImage img(w, h);
    std::uniform_real_distribution<double> depth(0.5, 3.0), unit(0, 1);
    // A few depth levels so bands produce several components.
    const double levels[] = {1.0, 1.1, 1.5, 2.4};
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        const double r = unit(gen);
        img.at(u, v) = r < 0.1 ? 0.0 : r < 0.2 ? depth(gen) : levels[static_cast<int>(unit(gen) * 4)];
      }
    std::uniform_int_distribution<int> pu(0, w - 1), pv(0, h - 1);
    int u0 = pu(gen), u1 = pu(gen), v0 = pv(gen), v1 = pv(gen);
    const BoundingBox box{std::min(u0, u1), std::min(v0, v1), std::max(u0, u1), std::max(v0, v1)};
    bool any = false;
    for (int v = box.v_min; v <= box.v_max; ++v)
      for (int u = box.u_min; u <= box.u_max; ++u) any = any || img.at(u, v) > 0;
    if (!any) continue;
    const double band = 0.05 + unit(gen) * 0.3;
    const auto m = extract_foreground(img, box, band);
    double zm = 0;
    const auto expect = oracle::foreground(img, box, band, &zm);
    EXPECT_EQ(m.z_m, zm) << "seed " << seed;
    EXPECT_EQ(m.pixels, expect) << "seed " << seed;
    for (auto p : m.pixels) {
      EXPECT_TRUE(box.contains(p));
      EXPECT_LE(std::abs(img.at(p.u, p.v) - m.z_m), band);
    }
  }
}

TEST(Transform, Examples) {
  const PointCloud c = PointCloud({{0, 0, 2}, {1, 2, 3}}, Frame::Camera);
  const auto same = to_base(c, RigidTransform::identity());
  EXPECT_EQ(same.points()[1], (Vec3{1, 2, 3}));
  EXPECT_EQ(same.frame(), Frame::Base);

  const auto moved = to_base(PointCloud({{0, 0, 2}}, Frame::Camera), {Mat3::identity(), {1, 0, 0}});
  expect_vec(moved.points()[0], {1, 0, 2}, 0);

  const auto yawed = to_base(PointCloud({{1, 0, 0}}, Frame::Camera), {Mat3::rot_z(kPi / 2), {}});
  expect_vec(yawed.points()[0], {0, 1, 0}, 1e-9);
  expect_vec(yawed.centroid(), {0, 1, 0}, 1e-9);

  EXPECT_THROW(to_base(PointCloud({}, Frame::Camera), RigidTransform::identity()), Error);
}

TEST(Transform, PreservesDistancesAndIsValid) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> a(-kPi, kPi), x(-5, 5);
  for (int t = 0; t < 200; ++t) {
    const RigidTransform T{Mat3::rot_z(a(gen)) * Mat3::rot_y(a(gen)) * Mat3::rot_x(a(gen)), {x(gen), x(gen), x(gen)}};
    ASSERT_TRUE(T.is_valid());
    const Vec3 p{x(gen), x(gen), x(gen)}, q{x(gen), x(gen), x(gen)};
    EXPECT_NEAR((T.apply(p) - T.apply(q)).norm(), (p - q).norm(), 1e-9);
    expect_vec(T.inverse().apply(T.apply(p)), p, 1e-9);
  }
  RigidTransform bad;
  bad.rotation(0, 0) = 2.0;
  EXPECT_FALSE(bad.is_valid());
}

TEST(PointCloudType, CentroidIsMean) {
  const auto c = cloud({{0, 0, 0}, {2, 0, 0}, {1, 3, 0}});
  expect_vec(c.centroid(), {1, 1, 0}, 1e-12);
}

TEST(PlaneFit, AxisAlignedSquare) {
  const auto f = fit_plane(cloud({{0, 0, 2}, {1, 0, 2}, {0, 1, 2}, {1, 1, 2}}), {0, 0, 1});
  expect_vec(f.normal, {0, 0, -1}, 1e-12);
  EXPECT_NEAR(f.offset, 2.0, 1e-12);
  EXPECT_NEAR(f.residual_rms, 0.0, 1e-12);
}

TEST(PlaneFit, RotatedSquare) {
  const Mat3 R = Mat3::rot_x(deg2rad(30));
  std::vector<Vec3> pts;
  for (Vec3 p : {Vec3{0, 0, 2}, Vec3{1, 0, 2}, Vec3{0, 1, 2}, Vec3{1, 1, 2}}) pts.push_back(R * p);
  const auto f = fit_plane(cloud(pts), {0, 0, 1});
  expect_vec(f.normal, R * Vec3{0, 0, -1}, 1e-6);
}

TEST(PlaneFit, Degenerate) {
  EXPECT_EQ(code_of([] { fit_plane(cloud({{0, 0, 0}, {1, 0, 0}}), {0, 0, 1}); }), Errc::DegeneratePatch);
  EXPECT_EQ(code_of([] { fit_plane(cloud({{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}}), {0, 0, 1}); }),
            Errc::DegeneratePatch);
}

TEST(PlaneFit, TieBreakIsDeterministic) {
  // Isotropic cube corners: all eigenvalues equal.
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
  const auto a = fit_plane(cloud(pts), {0, 0, 1});
  const auto b = fit_plane(cloud(pts), {0, 0, 1});
  EXPECT_EQ(a.normal, b.normal);
  // Largest |components| first picks the x axis, which is perpendicular to the camera axis.
  EXPECT_NEAR(std::abs(a.normal.x), 1.0, 1e-12);
  EXPECT_LE(a.normal.dot({0, 0, 1}), 0.0);
}

TEST(PlaneFit, MatchesEigenSolverAndProperties) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> noise(0, 0.01);
  for (int t = 0; t < 200; ++t) {
    std::vector<Vec3> pts;
    const Vec3 n0 = Vec3{u(gen), u(gen), u(gen)}.normalized();
    const Vec3 a = n0.cross({0.3, 0.5, 0.7}).normalized(), b = n0.cross(a);
    for (int i = 0; i < 40; ++i) pts.push_back(a * (2 * u(gen)) + b * u(gen) + n0 * noise(gen) + Vec3{0, 0, 3});
    const Vec3 axis = Vec3{u(gen), u(gen), u(gen)}.normalized();
    const auto pc = cloud(pts);
    const auto f = fit_plane(pc, axis);

    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (auto& p : pts) mean += Eigen::Vector3d(p.x, p.y, p.z);
    mean /= pts.size();
    for (auto& p : pts) {
      const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - mean;
      C += d * d.transpose();
    }
    C /= pts.size();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(C);
    Eigen::Vector3d en = es.eigenvectors().col(0);
    if (en.dot(Eigen::Vector3d(axis.x, axis.y, axis.z)) >= 0) en = -en;
    expect_vec(f.normal, {en.x(), en.y(), en.z()}, 1e-9);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(f.eigenvalues[i], es.eigenvalues()[i], 1e-12);

    EXPECT_NEAR(f.normal.norm(), 1.0, 1e-9);
    EXPECT_LT(f.normal.dot(axis), 0.0);
    auto rms = [&](const Vec3& dir) {
      double ss = 0;
      for (auto& p : pts) ss += std::pow(dir.dot(p - pc.centroid()), 2);
      return std::sqrt(ss / pts.size());
    };
    EXPECT_LE(rms(f.normal), rms(f.eigenvectors[1]) + 1e-12);
    EXPECT_LE(rms(f.normal), rms(f.eigenvectors[2]) + 1e-12);
  }
}

TEST(CentroidPatch, DropsFarOutliers) {
  std::vector<Vec3> pts(50, Vec3{0, 0, 1});
  for (int i = 0; i < 50; ++i) pts[static_cast<std::size_t>(i)].x = 0.001 * i;
  pts.push_back({10, 0, 1});
  const auto patch = centroid_patch(cloud(pts));
  EXPECT_EQ(patch.size(), 50u);
}

TEST(Pointing, Examples) {
  const auto a = pointing_angles({1, 0, 0}, {0, 0, 0});
  EXPECT_DOUBLE_EQ(a.yaw, 0);
  EXPECT_DOUBLE_EQ(a.pitch, 0);
  const auto b = pointing_angles({2, 1, 1 + std::sqrt(2.0)}, {1, 0, 1});
  EXPECT_NEAR(b.yaw, kPi / 4, 1e-12);
  EXPECT_NEAR(b.pitch, kPi / 4, 1e-12);
  expect_vec(b.direction, {1, 1, std::sqrt(2.0)}, 1e-12);
  EXPECT_EQ(code_of([] { pointing_angles({1, 1, 1}, {1, 1, 1}); }), Errc::ZeroDirection);
}

TEST(Pointing, YawRangeAtNegativeX) {
  const auto c = pointing_angles({-1, -0.0, 0}, {0, 0, 0});
  EXPECT_DOUBLE_EQ(c.yaw, kPi);
}

TEST(Pointing, ReconstructionRandom) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 t{u(gen), u(gen), u(gen)}, o{u(gen), u(gen), u(gen)};
    const auto c = pointing_angles(t, o);
    EXPECT_GT(c.yaw, -kPi);
    EXPECT_LE(c.yaw, kPi);
    EXPECT_LE(std::abs(c.pitch), kPi / 2);
    const Vec3 d = (t - o).normalized();
    EXPECT_LE((pointing_unit_vector(c.yaw, c.pitch) - d).norm(), 1e-9);
  }
}

TEST(Localize, FrontalPlateCentroid) {
  // 0.2 m plate facing the camera at 2 m, camera optical frame equal to base.
  const CameraIntrinsics intr{100, 100, 50, 40, 101, 81};
  DepthImage img(101, 81, 6.0);
  for (int v = 30; v <= 50; ++v)
    for (int u = 40; u <= 60; ++u) img.at(u, v) = 2.0;
  const auto est = localize_target(img, {38, 28, 62, 52}, intr, RigidTransform::identity());
  EXPECT_EQ(est.mask.pixels.size(), 21u * 21u);
  expect_vec(est.centroid_base, {0, 0, 2.0}, 1e-12);
  ASSERT_TRUE(est.plane.has_value());
  expect_vec(est.plane->normal, {0, 0, -1}, 1e-9);
}
