// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "medassist/episode.hpp"
#include "medassist/metrics.hpp"
#include "medassist/navigation.hpp"
#include "medassist/scenario.hpp"
#include "oracles.hpp"
#include "orchestrator_props.hpp"

using namespace medassist;

namespace {

struct Check {
  bool ok{true};
  std::ostringstream why;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) why << what;
    ok = ok && cond;
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<void(Check&, std::ostringstream&)>& body) {
  Check c;
  std::ostringstream info;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c, info);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0) c.expect(dt < budget_s, "runtime " + format_fixed(dt, 2) + " s over budget " + format_fixed(budget_s, 0) + " s");
  std::cout << (c.ok ? "PASS " : "FAIL ") << name << " (" << format_fixed(dt, 2) << " s)";
  if (!info.str().empty()) std::cout << " " << info.str();
  if (!c.ok) std::cout << " :: " << c.why.str();
  std::cout << std::endl;
  failures += c.ok ? 0 : 1;
}

double median(std::vector<double> x) { return metrics::quantile(std::move(x), 0.5); }

void metric_fidelity(Check& c, std::ostringstream& info) {
  metrics::TlxResponse a, b;
  a.items.fill(2.0);
  b.items.fill(2.5);
  const double ta = metrics::raw_tlx(a), tb = metrics::raw_tlx(b);
  const double mean = metrics::summarize({ta, tb}).mean;
  c.expect(format_fixed(ta, 2) == "11.11", "tlx(2.0) = " + format_double(ta));
  c.expect(format_fixed(tb, 2) == "16.67", "tlx(2.5) = " + format_double(tb));
  c.expect(format_fixed(mean, 2) == "13.89", "tlx mean = " + format_double(mean));
  // Reverse-coded items sum to 41.
  const metrics::UsabilityResponse u{{5, 1, 5, 2, 4, 4, 5, 4, 5}};
  const double us = metrics::usability_composite(u);
  c.expect(format_fixed(us, 2) == "88.89", "usability = " + format_double(us));
  info << "tlx " << format_fixed(ta, 2) << "/" << format_fixed(tb, 2) << " mean " << format_fixed(mean, 2)
       << ", usability " << format_fixed(us, 2);
}

void geometry_suite(Check& c, std::ostringstream& info) {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> U(0, 1);
  const geometry::CameraIntrinsics intr{525, 525, 319.5, 239.5, 640, 480};
  double worst_rt = 0;
  for (int i = 0; i < 10000; ++i) {
    const double u = U(gen) * 639, v = U(gen) * 479, z = 0.2 + 5 * U(gen);
    const Vec3 p = geometry::backproject(u, v, z, intr);
    const auto [pu, pv] = geometry::project(p, intr);
    const Vec3 q = geometry::backproject(pu, pv, p.z, intr);
    worst_rt = std::max({worst_rt, std::abs(pu - u) / std::max(1.0, u), std::abs(pv - v) / std::max(1.0, v),
                         (q - p).norm() / p.norm()});
  }
  c.expect(worst_rt <= 1e-9, "round trip rel error " + format_double(worst_rt));

  auto random_unit = [&] {
    Vec3 n;
    do n = {2 * U(gen) - 1, 2 * U(gen) - 1, 2 * U(gen) - 1}; while (n.norm() < 0.1 || n.norm() > 1);
    return n.normalized();
  };
  double worst_clean = 0, worst_noisy = 0;
  std::normal_distribution<double> noise(0, 0.005);
  for (int trial = 0; trial < 100; ++trial) {
    Vec3 n = random_unit();
    if (n.z > 0) n = -n;  // facing the camera
    if (n.z > -0.3) n = (n + Vec3{0, 0, -1}).normalized();
    const Vec3 a = (std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0}).cross(n).normalized();
    const Vec3 b = n.cross(a);
    const Vec3 center{U(gen) - 0.5, U(gen) - 0.5, 1 + U(gen)};
    std::vector<Vec3> clean, noisy;
    for (int k = 0; k < 400; ++k) {
      const Vec3 p = center + a * (0.1 * U(gen) - 0.05) + b * (0.1 * U(gen) - 0.05);
      clean.push_back(p);
      noisy.push_back(p + Vec3{noise(gen), noise(gen), noise(gen)});
    }
    const auto f0 = geometry::fit_plane({clean, geometry::Frame::Camera}, {0, 0, 1});
    const auto f1 = geometry::fit_plane({noisy, geometry::Frame::Camera}, {0, 0, 1});
    worst_clean = std::max(worst_clean, (f0.normal - n).norm());
    worst_noisy = std::max(worst_noisy, std::acos(std::clamp(f1.normal.dot(n), -1.0, 1.0)));
  }
  c.expect(worst_clean <= 1e-6, "noiseless normal error " + format_double(worst_clean));
  c.expect(worst_noisy <= deg2rad(2.0), "noisy normal error " + format_double(worst_noisy) + " rad");

  double worst_point = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 origin{U(gen) - 0.5, U(gen) - 0.5, U(gen)};
    const Vec3 target{4 * U(gen) - 2, 4 * U(gen) - 2, 2 * U(gen)};
    if ((target - origin).norm() < 1e-3) continue;
    const auto cmd = geometry::pointing_angles(target, origin);
    const Vec3 dir = geometry::pointing_unit_vector(cmd.yaw, cmd.pitch);
    const Vec3 truth = (target - origin).normalized();
    worst_point = std::max(worst_point, (dir - truth).norm());
  }
  c.expect(worst_point <= 1e-9, "pointing error " + format_double(worst_point));
  info << "round-trip " << format_double(worst_rt) << ", normal " << format_double(worst_clean) << " / "
       << format_fixed(worst_noisy * 180 / kPi, 3) << " deg, pointing " << format_double(worst_point);
}

void planning_suite(Check& c, std::ostringstream& info) {
  using namespace navigation;
  std::mt19937_64 gen(202);
  std::uniform_int_distribution<int> cell(0, 19);
  int astar_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracle::random_grid(gen, 20, 20, 0.3);
    const auto cm = build_costmap(g, InflationParams{1.5, 1.0, 0.0});
    int sx, sy, gx, gy;
    do sx = cell(gen), sy = cell(gen); while (cm.at(sx, sy) >= kInscribedCost);
    do gx = cell(gen), gy = cell(gen); while (cm.at(gx, gy) >= kInscribedCost);
    const auto ref = oracle::dijkstra(cm, sx, sy, gx, gy);
    bool same = false;
    try {
      const auto p = plan_global(cm, sx + 0.5, sy + 0.5, gx + 0.5, gy + 0.5);
      same = ref && p.exact_cost == *ref;
    } catch (const Error& e) {
      same = !ref && e.code() == Errc::NoPath;
    }
    astar_ok += same;
  }
  c.expect(astar_ok == 100, "A* disagreed with Dijkstra on " + std::to_string(100 - astar_ok) + " grids; ");

  std::uniform_real_distribution<double> U(0, 1);
  DwaParams p;
  int dwa_n = 0, dwa_ok = 0, dwa_blocked = 0, dwa_blocked_bad = 0;
  while (dwa_n < 50) {
    const auto g = oracle::random_grid(gen, 40, 40, 0.04, 0.1);
    const auto cm = build_costmap(g, 0.45);
    worldsim::RobotState s;
    s.pose = {0.2 + 3.6 * U(gen), 0.2 + 3.6 * U(gen), wrap_angle(2 * kPi * U(gen))};
    s.v = p.v_max * U(gen);
    s.omega = p.omega_min + (p.omega_max - p.omega_min) * U(gen);
    if (cm.cost_world(s.pose.x, s.pose.y) >= kInscribedCost) continue;
    GlobalPath path;
    try {
      path = plan_global(cm, s.pose.x, s.pose.y, 0.2 + 3.6 * U(gen), 0.2 + 3.6 * U(gen));
    } catch (const Error&) {
      continue;
    }
    std::optional<VelocityCommand> ref, got;
    try { ref = oracle::dwa_exhaustive(s, path, cm, p, 0.1); } catch (const Error&) {}
    try { got = dwa_step(s, path, cm, p, 0.1); } catch (const Error&) {}
    // Fully blocked states still have to agree but do not count toward the 50.
    if (!ref) {
      ++dwa_blocked;
      dwa_blocked_bad += got.has_value();
      continue;
    }
    ++dwa_n;
    dwa_ok += ref == got;
  }
  c.expect(dwa_ok == 50, "DWA disagreed with the oracle on " + std::to_string(50 - dwa_ok) + " states; ");
  c.expect(dwa_blocked_bad == 0, "DWA moved where the oracle found every arc blocked; ");

  int mono_ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = oracle::random_grid(gen, 30, 30, 0.1, 0.1);
    const double r1 = U(gen) * 0.6, r2 = r1 + U(gen) * 0.6;
    const auto a = build_costmap(g, r1), b = build_costmap(g, r2);
    bool ok = true;
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 30; ++x) ok = ok && b.at(x, y) >= a.at(x, y);
    mono_ok += ok;
  }
  c.expect(mono_ok == 50, "inflation monotonicity failed on " + std::to_string(50 - mono_ok) + " maps; ");
  info << "A* " << astar_ok << "/100, DWA " << dwa_ok << "/50 (" << dwa_blocked << " blocked skipped), inflation " << mono_ok << "/50";
}

void orchestrator_suite(Check& c, std::ostringstream& info) {
  int bad = 0;
  std::string first;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto cond = seed % 2 ? orchestrator::Condition::A : orchestrator::Condition::B;
    const auto r = props::run_sequence(seed, cond);
    const bool ok = r.monotone && r.no_skip && r.step_order && r.terminated && r.passive_clean;
    if (!ok && first.empty())
      first = "seed " + std::to_string(seed) + ": monotone=" + std::to_string(r.monotone) + " no_skip=" +
              std::to_string(r.no_skip) + " order=" + std::to_string(r.step_order) + " terminated=" +
              std::to_string(r.terminated) + " passive=" + std::to_string(r.passive_clean) + " " + r.detail;
    bad += !ok;
  }
  c.expect(bad == 0, std::to_string(bad) + " sequences violated a property; first " + first);
  info << (500 - bad) << "/500 sequences";
}

void study(Check& c, std::ostringstream& info) {
  auto sc = scenario::load_scenario(std::string(MEDASSIST_SCENARIOS) + "/lab.json");
  sc.profile = usersim::preset_profile("Misplaces");
  std::vector<double> ta, tb, ra, rb;
  int time_agree = 0, rounds_agree = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto a = episode::run_episode(sc, orchestrator::Condition::A, seed).metrics;
    const auto b = episode::run_episode(sc, orchestrator::Condition::B, seed).metrics;
    ta.push_back(a.time_to_locate);
    tb.push_back(b.time_to_locate);
    ra.push_back(a.interaction_rounds);
    rb.push_back(b.interaction_rounds);
    time_agree += b.time_to_locate < a.time_to_locate;
    rounds_agree += b.interaction_rounds > a.interaction_rounds;
  }
  const double mta = median(ta), mtb = median(tb), mra = median(ra), mrb = median(rb);
  c.expect(mtb < mta, "median time-to-locate B " + format_double(mtb) + " >= A " + format_double(mta) + "; ");
  c.expect(mrb > mra, "median rounds B " + format_double(mrb) + " <= A " + format_double(mra) + "; ");
  c.expect(time_agree >= 28, "time-to-locate sign agreement " + std::to_string(time_agree) + "/30; ");
  info << "time-to-locate median A " << format_fixed(mta, 1) << " s, B " << format_fixed(mtb, 1) << " s; rounds median A "
       << format_fixed(mra, 1) << ", B " << format_fixed(mrb, 1) << "; per-seed agreement time " << time_agree
       << "/30, rounds " << rounds_agree << "/30";
}

void determinism(Check& c, std::ostringstream& info) {
  const auto sc = scenario::load_scenario(std::string(MEDASSIST_SCENARIOS) + "/lab.json");
  for (auto cond : {orchestrator::Condition::A, orchestrator::Condition::B}) {
    const auto x = log::to_text(episode::run_episode(sc, cond, 7).log);
    const auto y = log::to_text(episode::run_episode(sc, cond, 7).log);
    const auto hx = CounterRng::fnv1a(x), hy = CounterRng::fnv1a(y);
    c.expect(hx == hy && x == y, std::string("condition ") + std::string(to_string(cond)) + " logs differ; ");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hx));
    info << to_string(cond) << " " << buf << " ";
  }
}

void confusion(Check& c, std::ostringstream& info) {
  using namespace usersim;
  int agree = 0;
  for (unsigned seed = 0; seed < 200; ++seed) {
    std::mt19937_64 gen(seed + 1000);
    std::uniform_int_distribution<int> runlen(1, 900), aoi(0, 3), coin(0, 4);
    std::vector<GazeSample> s;
    const std::size_t n = 2000 + seed * 10;
    while (s.size() < n) {
      const int len = runlen(gen);
      const auto a = static_cast<Aoi>(aoi(gen));
      const bool fix = coin(gen) > 0;
      for (int k = 0; k < len && s.size() < n; ++k) s.push_back({s.size() / kGazeRate, a, fix});
    }
    std::vector<double> acts;
    std::uniform_real_distribution<double> at(0, n / kGazeRate);
    for (int k = coin(gen); k > 0; --k) acts.push_back(at(gen));
    agree += detect_confusion(s, acts, 3.0) == oracle::confusion(s, acts, 3.0);
  }
  c.expect(agree == 200, "oracle disagreement on " + std::to_string(200 - agree) + " streams; ");
  CounterRng rng(1);
  EpisodeTimeline tl;
  tl.end = 1.0;
  const auto g = gaze_stream(tl, {}, rng);
  c.expect(g.samples.size() == 180, "1 s stream has " + std::to_string(g.samples.size()) + " samples");
  info << agree << "/200 streams, 1 s = " << g.samples.size() << " samples";
}

void alpha(Check& c, std::ostringstream& info) {
  const double a = metrics::cronbach_alpha({{1, 2, 3}, {2, 4, 5}, {3, 5, 4}});
  c.expect(std::abs(a - 27.0 / 31.0) <= 1e-9, "3x3 alpha " + format_double(a));
  const double d = metrics::cronbach_alpha({{1, 1, 1}, {2, 2, 2}, {4, 4, 4}, {5, 5, 5}});
  c.expect(d == 1.0, "duplicated items alpha " + format_double(d));
  info << "3x3 " << format_double(a) << ", duplicated " << format_double(d);
}

}  // namespace

int main() {
  criterion("metric-fidelity", 1, metric_fidelity);
  criterion("geometry-oracles", 5, geometry_suite);
  criterion("planning-oracles", 30, planning_suite);
  criterion("orchestrator-properties", 0, orchestrator_suite);
  criterion("directional-study", 120, study);
  criterion("determinism", 0, determinism);
  criterion("confusion-detection", 0, confusion);
  criterion("cronbach-alpha", 0, alpha);
  std::cout << (failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED") << " (" << failures << " failing)" << std::endl;
  return failures ? 1 : 0;
}
