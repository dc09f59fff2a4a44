#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "musinger/core/error.hpp"
#include "musinger/display/display.hpp"
#include "musinger/display/fk_batch.hpp"
#include "musinger/display/kinematics.hpp"
#include "support/oracles.hpp"

using namespace musinger;
using namespace musinger::display;
using doctest::Approx;

namespace {

const double kPi = std::numbers::pi;

double rel_err(Point2 a, Point2 b) {
  return std::hypot(a.x_mm - b.x_mm, a.y_mm - b.y_mm) / std::max(1.0, std::hypot(b.x_mm, b.y_mm));
}

LinkageGeometry random_geometry(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LinkageGeometry g;
  g.base_separation_mm = 10 + 40 * u(rng);
  g.proximal_length_mm = 10 + 30 * u(rng);
  g.distal_length_mm = g.base_separation_mm / 2 + 5 + 40 * u(rng);
  return g;
}

}  // namespace

TEST_CASE("forward kinematics example") {
  const LinkageGeometry g;
  const auto p = forward_kinematics(g, deg_to_rad(-90), deg_to_rad(-90));
  CHECK(p.x_mm == Approx(15.0).epsilon(1e-12));
  CHECK(p.y_mm == Approx(-25.0 - std::sqrt(40.0 * 40.0 - 15.0 * 15.0)).epsilon(1e-12));
  CHECK(std::abs(p.y_mm - -62.081) < 1e-3);
  const auto o = oracle::five_bar_fk(30, 25, 40, -kPi / 2, -kPi / 2);
  REQUIRE(o);
  CHECK(rel_err(p, {o->x, o->y}) < 1e-12);
}

TEST_CASE("forward kinematics agrees with the circle oracle") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ang(deg_to_rad(-170), deg_to_rad(-10));
  int checked = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto g = random_geometry(rng);
    const double t1 = ang(rng), t2 = ang(rng);
    const auto mine = try_forward_kinematics(g, t1, t2);
    const auto ref = oracle::five_bar_fk(g.base_separation_mm, g.proximal_length_mm, g.distal_length_mm, t1, t2);
    CHECK(mine.has_value() == ref.has_value());
    if (!mine || !ref) continue;
    // the oracle picks the lower intersection, which is ElbowOut while P1 is left of P2
    const double p1x = g.proximal_length_mm * std::cos(t1);
    const double p2x = g.base_separation_mm + g.proximal_length_mm * std::cos(t2);
    if (p1x >= p2x) continue;
    CHECK(rel_err(*mine, {ref->x, ref->y}) < 1e-9);
    ++checked;
  }
  CHECK(checked > 10000);
}

TEST_CASE("symmetric angles put the effector on the centre line") {
  const LinkageGeometry g;
  for (double deg = -170; deg <= -10; deg += 5) {
    const double t2 = deg_to_rad(deg);
    const double t1 = -(kPi - std::abs(t2));
    const auto p = try_forward_kinematics(g, t1, t2);
    if (p) CHECK(p->x_mm == Approx(15.0).epsilon(1e-12));
  }
}

TEST_CASE("spread passive joints are unreachable") {
  const LinkageGeometry g;
  CHECK(try_forward_kinematics(g, deg_to_rad(-179), deg_to_rad(-1)).has_value());
  LinkageGeometry wide = g;
  wide.distal_length_mm = 30;
  try {
    forward_kinematics(wide, kPi, 0);
    FAIL("expected Unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Unreachable);
  }
}

TEST_CASE("inverse kinematics examples") {
  const LinkageGeometry g;
  const auto a = inverse_kinematics(g, {15, -25.0 - std::sqrt(40.0 * 40.0 - 15.0 * 15.0)});
  CHECK(a.theta1_rad == Approx(-kPi / 2).epsilon(1e-9));
  CHECK(a.theta2_rad == Approx(-kPi / 2).epsilon(1e-9));
  const auto b = inverse_kinematics(g, {15, -62.081});
  CHECK(rad_to_deg(b.theta1_rad) == Approx(-90).epsilon(1e-4));
  CHECK(rad_to_deg(b.theta2_rad) == Approx(-90).epsilon(1e-4));
  try {
    inverse_kinematics(g, {1000, 0});
    FAIL("expected Unreachable");
  } catch (const UnreachableError& e) {
    CHECK(e.code() == Errc::Unreachable);
    CHECK(workspace_contains(g, e.nearest()));
    CHECK(distance(e.nearest(), {1000, 0}) < distance({15, -62.081}, {1000, 0}));
  }
}

TEST_CASE("workspace membership") {
  const LinkageGeometry g;
  const double reach = g.proximal_length_mm + g.distal_length_mm;
  const double half = g.base_separation_mm / 2;
  CHECK(workspace_contains(g, {half, -std::sqrt(reach * reach - half * half) + 1}));
  // (d/2, -(L1+L2)+1) lies 65.73 mm from each base, beyond L1 + L2
  CHECK_FALSE(workspace_contains(g, {half, -reach + 1}));
  CHECK_FALSE(workspace_contains(g, {0, 0}));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-200, 200);
  for (int i = 0; i < 20000; ++i) {
    const Point2 p{u(rng), u(rng)};
    if (std::hypot(p.x_mm, p.y_mm) > reach && std::hypot(p.x_mm - g.base_separation_mm, p.y_mm) > reach)
      CHECK_FALSE(workspace_contains(g, p));
  }
}

TEST_CASE("IK of FK on a one-degree grid") {
  const LinkageGeometry g;
  int round_trips = 0;
  for (int d1 = -170; d1 <= -10; ++d1)
    for (int d2 = -170; d2 <= -10; ++d2) {
      const double t1 = deg_to_rad(d1), t2 = deg_to_rad(d2);
      const auto p = try_forward_kinematics(g, t1, t2);
      if (!p || !elbows_outward(g, t1, t2, *p)) continue;
      const auto back = solve_inverse_kinematics(g, *p);
      REQUIRE(back.has_value());
      CHECK(std::abs(back->theta1_rad - t1) < 1e-7);
      CHECK(std::abs(back->theta2_rad - t2) < 1e-7);
      ++round_trips;
    }
  CHECK(round_trips > 5000);
}

TEST_CASE("FK of IK over sampled reachable targets") {
  std::mt19937_64 rng(21);
  for (int geo = 0; geo < 5; ++geo) {
    const LinkageGeometry g = geo == 0 ? LinkageGeometry{} : random_geometry(rng);
    std::uniform_real_distribution<double> ang(g.angle_min_rad, g.angle_max_rad);
    int n = 0;
    while (n < 10000) {
      const double t1 = ang(rng), t2 = ang(rng);
      const auto p = try_forward_kinematics(g, t1, t2);
      if (!p || !elbows_outward(g, t1, t2, *p)) continue;
      const auto sol = solve_inverse_kinematics(g, *p);
      REQUIRE(sol.has_value());
      CHECK(rel_err(forward_kinematics(g, sol->theta1_rad, sol->theta2_rad), *p) <= 1e-9);
      CHECK(g.within_limits(sol->theta1_rad));
      CHECK(g.within_limits(sol->theta2_rad));
      ++n;
    }
  }
}

TEST_CASE("SIMD kernels agree with the scalar reference") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  const std::size_t n = 4099;
  std::vector<double> t1(n), t2(n);
  for (std::size_t i = 0; i < n; ++i) {
    t1[i] = ang(rng);
    t2[i] = ang(rng);
  }
  const LinkageGeometry g;
  std::vector<double> xs(n), ys(n);
  std::vector<std::uint8_t> vs(n);
  forward_kinematics_batch(g, t1, t2, xs, ys, vs, SimdLevel::Scalar);
  for (auto level : {SimdLevel::Avx2, SimdLevel::Neon}) {
    if (!simd_level_available(level)) continue;
    CAPTURE(simd_level_name(level));
    std::vector<double> x(n), y(n);
    std::vector<std::uint8_t> v(n);
    forward_kinematics_batch(g, t1, t2, x, y, v, level);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(v[i] == vs[i]);
      if (v[i]) {
        CHECK(std::abs(x[i] - xs[i]) <= 1e-9);
        CHECK(std::abs(y[i] - ys[i]) <= 1e-9);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = try_forward_kinematics(g, t1[i], t2[i]);
    if (vs[i]) {
      REQUIRE(p.has_value());
      CHECK(rel_err({xs[i], ys[i]}, *p) < 1e-9);
    }
  }
  CHECK(simd_level_available(SimdLevel::Scalar));
  CHECK(simd_level_available(detect_simd_level()));
}

TEST_CASE("geometry validation") {
  LinkageGeometry g;
  CHECK_NOTHROW(g.validate());
  g.distal_length_mm = 15;
  CHECK_THROWS_AS(g.validate(), Error);
  g = {};
  g.angle_min_rad = g.angle_max_rad;
  CHECK_THROWS_AS(g.validate(), Error);
  DisplayConfig c;
  CHECK_NOTHROW(c.validate());
  c.skin_plane_y_mm = -70;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.depth_max_mm = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("force to depth") {
  const DisplayConfig c;
  CHECK(force_to_depth(0, c) == 0.0);
  CHECK(force_to_depth(10, c) == Approx(3.0));
  CHECK(force_to_depth(5, c) == Approx(1.5));
  CHECK(force_to_depth(20, c) == Approx(3.0));
  CHECK(force_to_depth(0.1, c) == 0.0);
  CHECK_THROWS_AS(force_to_depth(-1, c), Error);
}

TEST_CASE("servo slew") {
  CHECK(slew_toward(0.0, 1.0, 8.0 * 0.05) == Approx(0.4));
  CHECK(slew_toward(0.0, -1.0, 0.4) == Approx(-0.4));
  CHECK(slew_toward(0.0, 0.3, 0.4) == 0.3);
}

TEST_CASE("zero force keeps the display at rest") {
  HapticDisplay d{DisplayConfig{}};
  const auto start = d.state();
  for (int i = 0; i < 500; ++i) d.render_silence(0.01);
  for (int ch = 0; ch < 3; ++ch) {
    const auto& s = d.state()[ch];
    CHECK_FALSE(s.in_contact);
    CHECK(s.contact_depth_mm == 0.0);
    CHECK(distance(s.effector_mm, d.home_point(ch)) < 1e-9);
    CHECK(s.theta1_rad == start[ch].theta1_rad);
  }
}

TEST_CASE("full force converges to full depth") {
  HapticDisplay d{DisplayConfig{}};
  for (int i = 0; i < 200; ++i) d.render_tick(std::array<double, 3>{10, 10, 10}, 0.01);
  for (int i = 0; i < 100; ++i) {
    d.render_tick(std::array<double, 3>{10, 10, 10}, 0.01);
    for (const auto& s : d.state()) {
      CHECK(s.in_contact);
      CHECK(s.contact_depth_mm == Approx(3.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("rendering invariants under random force streams") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> f(0, 12);
  std::uniform_real_distribution<double> dt(0.001, 0.05);
  std::bernoulli_distribution change(0.1);
  for (int run = 0; run < 40; ++run) {
    DisplayConfig cfg;
    cfg.servo_max_speed_rad_s = 2 + run % 10;
    HapticDisplay d(cfg);
    std::array<double, 3> forces{};
    for (int tick = 0; tick < 500; ++tick) {
      for (auto& x : forces)
        if (change(rng)) x = f(rng) < 5 ? 0.0 : f(rng);
      const double step = dt(rng);
      const auto before = d.state();
      const auto& after = d.render_tick(forces, step);
      for (int ch = 0; ch < 3; ++ch) {
        const auto& g = cfg.linkages[ch];
        const double lim = cfg.servo_max_speed_rad_s * step + 1e-12;
        CHECK(std::abs(after[ch].theta1_rad - before[ch].theta1_rad) <= lim);
        CHECK(std::abs(after[ch].theta2_rad - before[ch].theta2_rad) <= lim);
        CHECK(distance(after[ch].effector_mm, before[ch].effector_mm) <=
              (g.proximal_length_mm + g.distal_length_mm) * cfg.servo_max_speed_rad_s * step + 1e-9);
        const auto fk = forward_kinematics(g, after[ch].theta1_rad, after[ch].theta2_rad);
        CHECK(distance(fk, after[ch].effector_mm) < 1e-12);
        if (after[ch].contact_depth_mm > 0) CHECK(after[ch].in_contact);
        CHECK(after[ch].contact_depth_mm >= 0);
      }
    }
  }
}

TEST_CASE("channels are independent") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> f(0, 10);
  HapticDisplay a{DisplayConfig{}}, b{DisplayConfig{}};
  for (int tick = 0; tick < 1000; ++tick) {
    const double shared = tick % 50 < 20 ? 10.0 : 0.0;
    a.render_tick(std::array<double, 3>{f(rng), shared, 0}, 0.01);
    b.render_tick(std::array<double, 3>{0, shared, f(rng)}, 0.01);
    const auto& sa = a.state()[1];
    const auto& sb = b.state()[1];
    REQUIRE(sa.theta1_rad == sb.theta1_rad);
    REQUIRE(sa.theta2_rad == sb.theta2_rad);
    REQUIRE(sa.in_contact == sb.in_contact);
  }
}

TEST_CASE("slide trajectories through drive_toward") {
  HapticDisplay d{DisplayConfig{}};
  const Point2 target{20, -56};
  for (int i = 0; i < 200; ++i) d.drive_toward(0, target, 0.01);
  CHECK(distance(d.state()[0].effector_mm, target) < 1e-9);
  CHECK(d.state()[0].in_contact);
  d.drive_toward(0, {500, 500}, 0.01);
  CHECK(d.state()[0].target_clamped);
  CHECK_THROWS_AS(d.drive_toward(3, target, 0.01), Error);
  CHECK(d.contact_lag_ticks() >= 1);
}

TEST_CASE("extract_onsets") {
  const OnsetExtraction opt;
  StateHistory h;
  DisplayState rest{};
  SUBCASE("all rest") {
    for (std::uint64_t t = 0; t < 100; ++t) h.record(t, rest);
    CHECK(extract_onsets(h, opt).onsets.empty());
  }
  SUBCASE("one zero tick splits two onsets") {
    DisplayState touch{};
    touch[1].in_contact = true;
    touch[1].contact_depth_mm = 1.5;
    for (std::uint64_t t = 0; t < 30; ++t) h.record(t, (t >= 10 && t < 20 && t != 15) ? touch : rest);
    const auto p = extract_onsets(h, opt);
    REQUIRE(p.onsets.size() == 2);
    CHECK(p.onsets[0].time_ms == Approx(100));
    CHECK(p.onsets[0].duration_ms == Approx(50));
    CHECK(p.onsets[0].channel == 2);
    CHECK(p.onsets[0].intensity == Approx(0.5));
    CHECK(p.onsets[1].time_ms == Approx(160));
    CHECK(p.onsets[1].duration_ms == Approx(40));
  }
  SUBCASE("latency is subtracted") {
    DisplayState touch{};
    touch[0].in_contact = true;
    touch[0].contact_depth_mm = 3;
    for (std::uint64_t t = 0; t < 30; ++t) h.record(t, t >= 10 ? touch : rest);
    OnsetExtraction o2 = opt;
    o2.latency_ms = 60;
    const auto p = extract_onsets(h, o2);
    REQUIRE(p.onsets.size() == 1);
    CHECK(p.onsets[0].time_ms == Approx(40));
    CHECK(p.onsets[0].intensity == Approx(1.0));
  }
}

TEST_CASE("state history CSV round trip") {
  HapticDisplay d{DisplayConfig{}};
  StateHistory h;
  for (std::uint64_t t = 0; t < 50; ++t) h.record(t, d.render_tick(std::array<double, 3>{t < 25 ? 10.0 : 0.0, 0, 5}, 0.01));
  std::stringstream ss;
  h.write_csv(ss);
  const auto text = ss.str();
  CHECK(text.rfind("tick,channel,theta1_rad,theta2_rad,x_mm,y_mm,in_contact,depth_mm\n", 0) == 0);
  const auto back = StateHistory::read_csv(ss);
  REQUIRE(back.rows().size() == h.rows().size());
  CHECK(back.ticks() == 50);
  for (std::size_t i = 0; i < h.rows().size(); ++i) {
    CHECK(back.rows()[i].channel == h.rows()[i].channel);
    CHECK(back.rows()[i].state.in_contact == h.rows()[i].state.in_contact);
    CHECK(back.rows()[i].state.contact_depth_mm == Approx(h.rows()[i].state.contact_depth_mm).epsilon(1e-5));
  }
  const auto pa = extract_onsets(back, {}), pb = extract_onsets(h, {});
  REQUIRE(pa.onsets.size() == pb.onsets.size());
  for (std::size_t i = 0; i < pa.onsets.size(); ++i) {
    CHECK(pa.onsets[i].time_ms == pb.onsets[i].time_ms);
    CHECK(pa.onsets[i].channel == pb.onsets[i].channel);
    CHECK(pa.onsets[i].intensity == Approx(pb.onsets[i].intensity).epsilon(1e-5));
  }
  std::istringstream bad("tick,channel,theta1_rad,theta2_rad,x_mm,y_mm,in_contact,depth_mm\n0,7,0,0,0,0,0,0\n");
  try {
    StateHistory::read_csv(bad);
    FAIL("expected BadFormat");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadFormat);
    CHECK(e.line() == 2);
  }
}
