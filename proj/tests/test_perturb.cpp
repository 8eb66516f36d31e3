#include <cmath>

#include <doctest.h>

#include "sonopose/perturb.hpp"

using namespace sonopose;

TEST_CASE("constant bias shifts exactly the windowed samples on one axis") {
  Trace trace = generate_walk_trace(4.0, 10.0, 200.0, 20.0, {});
  ConstantBias bias;
  bias.sensor = Sensor::accel;
  bias.axis = Axis::x;
  bias.magnitude = 2.1;
  bias.window = TimeWindow::seconds(3.0, 7.0);
  Trace out = inject_constant(trace, bias);

  REQUIRE(out.imu.size() == trace.imu.size());
  std::size_t shifted = 0;
  for (std::size_t i = 0; i < trace.imu.size(); ++i) {
    const double t = trace.imu[i].t;
    const double dx = out.imu[i].accel.x() - trace.imu[i].accel.x();
    if (t >= 3.0 && t < 7.0) {
      CHECK(dx == doctest::Approx(2.1).epsilon(1e-12));
      ++shifted;
    } else {
      CHECK(dx == 0.0);
    }
    CHECK(out.imu[i].accel.y() == trace.imu[i].accel.y());
    CHECK(out.imu[i].accel.z() == trace.imu[i].accel.z());
    CHECK((out.imu[i].gyro - trace.imu[i].gyro).norm() == 0.0);
    CHECK(out.imu[i].t == t);
  }
  CHECK(shifted == 800);
  for (std::size_t i = 0; i < trace.fixes.size(); ++i)
    CHECK((out.fixes[i].position - trace.fixes[i].position).norm() == 0.0);
}

TEST_CASE("gyro axis injection works the same way") {
  Trace trace = generate_walk_trace(4.0, 10.0, 200.0, 20.0, {});
  ConstantBias bias;
  bias.sensor = Sensor::gyro;
  bias.axis = Axis::z;
  bias.magnitude = -1.5;
  bias.window = TimeWindow::fraction(0.0, 1.0);
  Trace out = inject_constant(trace, bias);
  for (std::size_t i = 0; i < trace.imu.size(); ++i) {
    CHECK(out.imu[i].gyro.z() - trace.imu[i].gyro.z() ==
          doctest::Approx(-1.5).epsilon(1e-12));
    CHECK((out.imu[i].accel - trace.imu[i].accel).norm() == 0.0);
  }
}

TEST_CASE("magnitudes outside the physical envelope are rejected") {
  Trace trace = generate_walk_trace(1.0, 2.0, 100.0, 10.0, {});
  ConstantBias bias;
  bias.window = TimeWindow::fraction(0.0, 1.0);

  bias.sensor = Sensor::accel;
  bias.magnitude = kMaxAccelBias + 1e-6;
  CHECK_THROWS_AS(inject_constant(trace, bias), std::invalid_argument);
  bias.magnitude = -kMaxAccelBias - 1e-6;
  CHECK_THROWS_AS(inject_constant(trace, bias), std::invalid_argument);
  bias.magnitude = kMaxAccelBias;  // boundary is legal
  CHECK_NOTHROW(inject_constant(trace, bias));

  bias.sensor = Sensor::gyro;
  bias.magnitude = kMaxGyroBias + 1e-6;
  CHECK_THROWS_AS(inject_constant(trace, bias), std::invalid_argument);
  bias.magnitude = kMaxGyroBias;
  CHECK_NOTHROW(inject_constant(trace, bias));
}

TEST_CASE("fractional windows resolve against the sampled span") {
  Trace trace = generate_walk_trace(4.0, 10.0, 200.0, 20.0, {});
  // Span is 10 s (2000 samples at 200 Hz), so [0.3, 0.4) is [3, 4).
  auto [t0, t1] = TimeWindow::fraction(0.3, 0.4).resolve(trace);
  CHECK(t0 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(t1 == doctest::Approx(4.0).epsilon(1e-12));
  // The full fractional window reaches the very last sample.
  auto [a0, a1] = TimeWindow::fraction(0.0, 1.0).resolve(trace);
  CHECK(a0 == 0.0);
  CHECK(a1 > trace.imu.back().t);
}

TEST_CASE("adjacent half-open windows partition the trace") {
  Trace trace = generate_walk_trace(4.0, 10.0, 200.0, 20.0, {});
  ConstantBias left, right;
  left.magnitude = right.magnitude = 1.0;
  left.window = TimeWindow::fraction(0.0, 0.5);
  right.window = TimeWindow::fraction(0.5, 1.0);
  Trace both = inject_constant(inject_constant(trace, left), right);
  // Every sample got the bias exactly once: no gap, no double-count.
  for (std::size_t i = 0; i < trace.imu.size(); ++i)
    CHECK(both.imu[i].accel.x() - trace.imu[i].accel.x() ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixture injection is seeded, windowed, and sample-independent") {
  Trace trace = generate_walk_trace(4.0, 10.0, 200.0, 20.0, {});
  GmmModel model;
  model.components = {{1.0, 2.0, 0.3}};
  const TimeWindow window = TimeWindow::seconds(2.0, 8.0);

  Trace a = inject_gmm(trace, model, Sensor::accel, Axis::x, window, 42);
  Trace b = inject_gmm(trace, model, Sensor::accel, Axis::x, window, 42);
  Trace c = inject_gmm(trace, model, Sensor::accel, Axis::x, window, 43);

  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  bool differs_from_c = false;
  for (std::size_t i = 0; i < trace.imu.size(); ++i) {
    const double t = trace.imu[i].t;
    const double da = a.imu[i].accel.x() - trace.imu[i].accel.x();
    CHECK(a.imu[i].accel.x() == b.imu[i].accel.x());
    if (t >= 2.0 && t < 8.0) {
      sum += da;
      sumsq += da * da;
      ++n;
      if (a.imu[i].accel.x() != c.imu[i].accel.x()) differs_from_c = true;
    } else {
      CHECK(da == 0.0);
    }
  }
  CHECK(differs_from_c);
  REQUIRE(n == 1200);
  const double mean = sum / n;
  const double std = std::sqrt(sumsq / n - mean * mean);
  CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
  CHECK(std == doctest::Approx(0.3).epsilon(0.10));
}
