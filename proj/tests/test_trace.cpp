#include <cmath>

#include <doctest.h>

#include "sonopose/csv.hpp"
#include "sonopose/trace.hpp"
#include "sonopose/trace_io.hpp"
#include "test_util.hpp"

using namespace sonopose;

namespace {

/// Analytic trapezoidal-walk position along +y: 1 s acceleration ramp,
/// cruise, 1 s deceleration ramp. Exact at sample knots because the emitted
/// acceleration is piecewise constant on them.
double walk_y(double t, double length, double duration) {
  const double ramp = std::min(1.0, duration / 2.0);
  const double v = length / (duration - ramp);
  const double a = v / ramp;
  if (t <= ramp) return 0.5 * a * t * t;
  if (t <= duration - ramp) return 0.5 * v * ramp + v * (t - ramp);
  const double u = duration - t;
  return length - 0.5 * a * u * u;
}

}  // namespace

TEST_CASE("walk trace matches the analytic trapezoid at every knot") {
  const double L = 4.0, T = 10.0;
  Trace trace = generate_walk_trace(L, T, 200.0, 20.0, {});
  REQUIRE(trace.ground_truth.size() == 2001);
  for (const auto& pose : trace.ground_truth) {
    CHECK(std::abs(pose.position.y() - walk_y(pose.t, L, T)) < 1e-9);
    CHECK(std::abs(pose.position.x()) < 1e-12);
    CHECK(std::abs(pose.position.z()) < 1e-12);
  }
  CHECK(std::abs(trace.ground_truth.back().position.y() - L) < 1e-9);
}

TEST_CASE("walk trace is at rest at both ends and reads gravity reaction") {
  Trace trace = generate_walk_trace(4.0, 10.0, 200.0, 20.0, {});
  // Specific force of a stationary, level device: +1 g on the z axis.
  const auto& first = trace.imu.front();
  CHECK(first.accel.z() == doctest::Approx(9.80665).epsilon(1e-12));
  const auto& last = trace.imu.back();
  CHECK(last.accel.z() == doctest::Approx(9.80665).epsilon(1e-12));
  CHECK(std::abs(last.accel.y()) > 0.0);  // still decelerating at T - dt
  CHECK(trace.imu.front().gyro.norm() == 0.0);
  // First and last ground-truth knots have zero velocity: consecutive
  // positions coincide at the ends.
  const auto& gt = trace.ground_truth;
  CHECK((gt[0].position - Vec3::Zero()).norm() == 0.0);
}

TEST_CASE("zero-length walk stays exactly at the origin") {
  Trace trace = generate_walk_trace(0.0, 10.0, 200.0, 20.0, {});
  for (const auto& pose : trace.ground_truth)
    CHECK(pose.position.norm() == 0.0);
  for (const auto& s : trace.imu) {
    CHECK(s.accel.x() == 0.0);
    CHECK(s.accel.y() == 0.0);
  }
}

TEST_CASE("fixes subsample the ground truth on the fix grid") {
  Trace trace = generate_walk_trace(4.0, 10.0, 200.0, 20.0, {});
  REQUIRE(trace.fixes.size() == 201);
  CHECK(trace.fix_rate == doctest::Approx(20.0));
  for (const auto& fix : trace.fixes) {
    bool found = false;
    for (const auto& g : trace.ground_truth) {
      if (g.t == fix.t) {
        CHECK((g.position - fix.position).norm() == 0.0);
        found = true;
        break;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("requested fix rate is snapped to the imu grid") {
  Trace trace = generate_walk_trace(4.0, 10.0, 200.0, 30.0, {});
  // 200/30 is not integral; the effective rate divides the imu rate.
  const double stride = 200.0 / trace.fix_rate;
  CHECK(stride == doctest::Approx(std::round(stride)));
}

TEST_CASE("window trace interpolates through every waypoint exactly") {
  std::vector<Waypoint> wps = {{0.0, {0.0, 0.0, 0.0}},
                               {2.0, {1.0, 0.5, 0.0}},
                               {4.0, {0.5, 1.5, 0.2}},
                               {6.0, {0.0, 0.0, 0.0}}};
  Trace trace = generate_window_trace(wps, 200.0, 20.0, {});
  for (const auto& wp : wps) {
    bool found = false;
    for (const auto& g : trace.ground_truth) {
      if (std::abs(g.t - wp.t) < 1e-12) {
        CHECK((g.position - wp.position).norm() < 1e-6);
        found = true;
        break;
      }
    }
    CHECK(found);
  }
  // Closed loop: exact return to the start.
  CHECK((trace.ground_truth.back().position - wps.front().position).norm() <
        1e-6);
}

TEST_CASE("window trace starts gently (clamped end slopes)") {
  std::vector<Waypoint> wps = {{0.0, {0.0, 0.0, 0.0}}, {5.0, {0.0, 3.0, 0.0}}};
  Trace trace = generate_window_trace(wps, 200.0, 20.0, {});
  // Zero start velocity: the first step moves only by the one-step
  // half-acceleration term.
  const Vec3 first_step = trace.ground_truth[1].position;
  CHECK(first_step.norm() < 1e-3);
}

TEST_CASE("trace noise is seeded and deterministic") {
  TraceNoise noise;
  noise.accel_std = Vec3::Constant(0.05);
  noise.gyro_std = Vec3::Constant(0.005);
  noise.seed = 7;
  Trace a = generate_walk_trace(4.0, 10.0, 200.0, 20.0, noise);
  Trace b = generate_walk_trace(4.0, 10.0, 200.0, 20.0, noise);
  noise.seed = 8;
  Trace c = generate_walk_trace(4.0, 10.0, 200.0, 20.0, noise);
  CHECK((a.imu[123].accel - b.imu[123].accel).norm() == 0.0);
  CHECK((a.imu[123].accel - c.imu[123].accel).norm() != 0.0);
  // Noise perturbs only the imu stream: the camera is modeled as exact, so
  // fixes coincide with the noise-free trace's fixes.
  Trace clean = generate_walk_trace(4.0, 10.0, 200.0, 20.0, {});
  CHECK((a.fixes[50].position - clean.fixes[50].position).norm() == 0.0);
  CHECK((a.imu[123].accel - clean.imu[123].accel).norm() != 0.0);
}

TEST_CASE("validate rejects structural corruption") {
  Trace trace = generate_walk_trace(1.0, 2.0, 100.0, 10.0, {});
  trace.validate();

  SUBCASE("non-finite sample") {
    trace.imu[5].accel.x() = std::nan("");
    CHECK_THROWS_AS(trace.validate(), ValidationError);
  }
  SUBCASE("non-monotone timestamps") {
    std::swap(trace.imu[3].t, trace.imu[4].t);
    CHECK_THROWS_AS(trace.validate(), ValidationError);
  }
  SUBCASE("non-unit quaternion") {
    trace.ground_truth[7].orientation.w() = 2.0;
    CHECK_THROWS_AS(trace.validate(), ValidationError);
  }
  SUBCASE("fix off the ground-truth timeline") {
    trace.fixes[2].t += 0.001;
    CHECK_THROWS_AS(trace.validate(), ValidationError);
  }
  SUBCASE("fix disagrees with ground truth") {
    trace.fixes[2].position.x() += 0.5;
    CHECK_THROWS_AS(trace.validate(), ValidationError);
  }
}

TEST_CASE("save/load round trip is bit-exact") {
  TraceNoise noise;
  noise.accel_std = Vec3::Constant(0.02);
  noise.gyro_std = Vec3::Constant(0.002);
  noise.seed = 3;
  Trace a = generate_walk_trace(4.0, 10.0, 200.0, 20.0, noise);
  testutil::TempDir tmp;
  save_trace(a, tmp.path());
  Trace b = load_trace(tmp.path());
  REQUIRE(a.imu.size() == b.imu.size());
  REQUIRE(a.fixes.size() == b.fixes.size());
  REQUIRE(a.ground_truth.size() == b.ground_truth.size());
  CHECK(a.imu_rate == b.imu_rate);
  CHECK(a.fix_rate == b.fix_rate);
  for (std::size_t i = 0; i < a.imu.size(); ++i) {
    CHECK(a.imu[i].t == b.imu[i].t);
    CHECK((a.imu[i].accel - b.imu[i].accel).norm() == 0.0);
    CHECK((a.imu[i].gyro - b.imu[i].gyro).norm() == 0.0);
  }
  for (std::size_t i = 0; i < a.ground_truth.size(); ++i) {
    CHECK((a.ground_truth[i].position - b.ground_truth[i].position).norm() ==
          0.0);
    CHECK(a.ground_truth[i].orientation.coeffs() ==
          b.ground_truth[i].orientation.coeffs());
  }
}

TEST_CASE("load_trace infers rates when meta.json is absent") {
  Trace a = generate_walk_trace(2.0, 5.0, 100.0, 10.0, {});
  testutil::TempDir tmp;
  save_trace(a, tmp.path());
  std::filesystem::remove(tmp / "meta.json");
  Trace b = load_trace(tmp.path());
  CHECK(b.imu_rate == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(b.fix_rate == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("load_trace cites file and line on malformed rows") {
  Trace a = generate_walk_trace(1.0, 2.0, 50.0, 10.0, {});
  testutil::TempDir tmp;
  save_trace(a, tmp.path());
  std::string imu = testutil::read_file(tmp / "imu.csv");
  const auto pos = imu.find('\n', imu.find('\n') + 1);  // end of first data row
  imu.insert(pos, ",extra");
  testutil::write_file(tmp / "imu.csv", imu);
  try {
    load_trace(tmp.path());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("imu.csv") != std::string::npos);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("EuRoC import converts timestamps and channel order") {
  testutil::TempDir tmp;
  testutil::write_file(
      tmp / "data.csv",
      "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],"
      "w_RS_S_z [rad s^-1],a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],"
      "a_RS_S_z [m s^-2]\n"
      "1403636579758555392,0.01,0.02,0.03,9.7,0.1,-0.2\n"
      "1403636579763555392,0.04,0.05,0.06,9.6,0.2,-0.3\n");
  Trace t = load_euroc_imu(tmp / "data.csv");
  REQUIRE(t.imu.size() == 2);
  CHECK(t.imu[0].t == 0.0);
  CHECK(t.imu[1].t == doctest::Approx(0.005).epsilon(1e-9));
  CHECK(t.imu[0].gyro.x() == 0.01);
  CHECK(t.imu[0].accel.x() == 9.7);
  CHECK(t.imu[1].accel.z() == -0.3);
  CHECK(t.fixes.empty());
  // Directory form works too.
  Trace t2 = load_euroc_imu(tmp.path());
  CHECK(t2.imu.size() == 2);
}
