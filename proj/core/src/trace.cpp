#include "sonopose/trace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sonopose/rng.hpp"

namespace sonopose {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

void add_noise(Trace& trace, const TraceNoise& noise) {
  if (noise.is_zero()) return;
  Rng rng(noise.seed);
  for (auto& s : trace.imu) {
    for (int i = 0; i < 3; ++i) {
      const double sd = noise.accel_std[i];
      if (sd > 0.0) s.accel[i] += rng.normal(0.0, sd);
    }
    for (int i = 0; i < 3; ++i) {
      const double sd = noise.gyro_std[i];
      if (sd > 0.0) s.gyro[i] += rng.normal(0.0, sd);
    }
  }
}

std::int64_t fix_stride(double imu_rate, double fix_rate) {
  return std::max<std::int64_t>(1, std::llround(imu_rate / fix_rate));
}

/// Builds imu + ground truth by discretely integrating world acceleration
/// sampled (or fed back) per step, so the trace is self-consistent: strapdown
/// re-integration of the noise-free samples reproduces ground_truth exactly.
/// `world_accel(k, p, v)` returns the world-frame acceleration over step k
/// given the current integrated state.
template <typename AccelFn>
Trace integrate_trace(double t0, std::int64_t steps, double imu_rate,
                      double fix_rate, AccelFn world_accel) {
  const double dt = 1.0 / imu_rate;
  Trace trace;
  trace.imu_rate = imu_rate;
  const std::int64_t stride = fix_stride(imu_rate, fix_rate);
  trace.fix_rate = imu_rate / static_cast<double>(stride);
  trace.imu.reserve(static_cast<std::size_t>(steps));
  trace.ground_truth.reserve(static_cast<std::size_t>(steps) + 1);

  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  for (std::int64_t k = 0; k <= steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    Pose gt;
    gt.t = t;
    gt.position = p;
    trace.ground_truth.push_back(gt);
    if (k % stride == 0) trace.fixes.push_back(gt);
    if (k == steps) break;

    const Vec3 a = world_accel(k, p, v);
    ImuSample s;
    s.t = t;
    s.accel = a - kGravity;  // identity orientation: body == world
    s.gyro = Vec3::Zero();
    trace.imu.push_back(s);

    p += v * dt + 0.5 * dt * dt * a;
    v += dt * a;
  }
  return trace;
}

/// Cubic spline through (t_i, y_i), clamped to zero slope at both ends so a
/// trajectory built from it starts and ends at rest. Unknowns are the knot
/// second derivatives; tridiagonal system solved with the Thomas algorithm.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> t, std::vector<double> y)
      : t_(std::move(t)), y_(std::move(y)), m_(t_.size(), 0.0) {
    const std::size_t n = t_.size();
    std::vector<double> lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
    auto h = [&](std::size_t i) { return t_[i + 1] - t_[i]; };
    auto slope = [&](std::size_t i) { return (y_[i + 1] - y_[i]) / h(i); };
    diag[0] = 2.0 * h(0);
    upper[0] = h(0);
    rhs[0] = 6.0 * slope(0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      lower[i] = h(i - 1);
      diag[i] = 2.0 * (h(i - 1) + h(i));
      upper[i] = h(i);
      rhs[i] = 6.0 * (slope(i) - slope(i - 1));
    }
    lower[n - 1] = h(n - 2);
    diag[n - 1] = 2.0 * h(n - 2);
    rhs[n - 1] = -6.0 * slope(n - 2);

    std::vector<double> c(n, 0.0), d(n, 0.0);
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double denom = diag[i] - lower[i] * c[i - 1];
      c[i] = upper[i] / denom;
      d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    m_[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  double eval(double t) const {
    const std::size_t i = segment(t);
    const double h = t_[i + 1] - t_[i];
    const double a = (t_[i + 1] - t) / h;
    const double b = (t - t_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  double deriv(double t) const {
    const std::size_t i = segment(t);
    const double h = t_[i + 1] - t_[i];
    const double a = (t_[i + 1] - t) / h;
    const double b = (t - t_[i]) / h;
    return (y_[i + 1] - y_[i]) / h -
           (3.0 * a * a - 1.0) / 6.0 * h * m_[i] +
           (3.0 * b * b - 1.0) / 6.0 * h * m_[i + 1];
  }

 private:
  std::size_t segment(double t) const {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = static_cast<std::size_t>(it - t_.begin());
    if (i == 0) return 0;
    if (i >= t_.size()) return t_.size() - 2;
    return i - 1;
  }

  std::vector<double> t_, y_, m_;
};

}  // namespace

void Trace::validate() const {
  if (!(imu_rate > 0.0) || !(fix_rate > 0.0))
    throw ValidationError("trace: rates must be positive");
  if (imu_rate < fix_rate)
    throw ValidationError("trace: imu_rate must be >= fix_rate");
  if (imu.empty()) throw ValidationError("trace: empty IMU stream");

  const double dt = 1.0 / imu_rate;
  for (std::size_t i = 0; i < imu.size(); ++i) {
    const auto& s = imu[i];
    if (!std::isfinite(s.t) || !finite(s.accel) || !finite(s.gyro))
      throw ValidationError("trace: non-finite IMU sample at index " +
                            std::to_string(i));
    if (i > 0) {
      const double gap = s.t - imu[i - 1].t;
      if (gap <= 0.0)
        throw ValidationError("trace: non-increasing timestamp at index " +
                              std::to_string(i));
      if (std::abs(gap - dt) > 1e-6 * dt)
        throw ValidationError("trace: sample spacing off nominal at index " +
                              std::to_string(i));
    }
  }

  auto check_pose = [](const Pose& p, const char* what, std::size_t i) {
    if (!std::isfinite(p.t) || !finite(p.position) ||
        !p.orientation.coeffs().allFinite())
      throw ValidationError(std::string("trace: non-finite ") + what +
                            " at index " + std::to_string(i));
    if (std::abs(p.orientation.norm() - 1.0) > 1e-9)
      throw ValidationError(std::string("trace: non-unit quaternion in ") +
                            what + " at index " + std::to_string(i));
  };
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    check_pose(ground_truth[i], "ground truth", i);
    if (i > 0 && ground_truth[i].t <= ground_truth[i - 1].t)
      throw ValidationError("trace: non-increasing ground-truth timestamp at index " +
                            std::to_string(i));
  }
  for (std::size_t i = 0; i < fixes.size(); ++i) {
    check_pose(fixes[i], "fixes", i);
    // Every fix needs a ground-truth pose at the same instant.
    auto it = std::lower_bound(
        ground_truth.begin(), ground_truth.end(), fixes[i].t,
        [](const Pose& p, double t) { return p.t < t - 1e-9; });
    if (it == ground_truth.end() || std::abs(it->t - fixes[i].t) > 1e-9)
      throw ValidationError("trace: fix at index " + std::to_string(i) +
                            " has no matching ground-truth timestamp");
    // The camera is modeled as exact: a fix must agree with the truth.
    if ((fixes[i].position - it->position).norm() > 1e-9 ||
        geodesic_angle(fixes[i].orientation, it->orientation) > 1e-9)
      throw ValidationError("trace: fix at index " + std::to_string(i) +
                            " disagrees with ground truth");
  }
}

Trace generate_walk_trace(double length_m, double duration_s, double imu_rate,
                          double fix_rate, const TraceNoise& noise) {
  if (!(duration_s > 0.0) || !(imu_rate > 0.0) || !(fix_rate > 0.0))
    throw std::invalid_argument("generate_walk_trace: duration and rates must be positive");
  if (length_m < 0.0)
    throw std::invalid_argument("generate_walk_trace: length must be non-negative");

  const double ramp = std::min(1.0, duration_s / 2.0);
  const double v_peak = length_m > 0.0 ? length_m / (duration_s - ramp) : 0.0;
  const double a_ramp = length_m > 0.0 ? v_peak / ramp : 0.0;
  const std::int64_t steps = std::llround(duration_s * imu_rate);
  const double dt = 1.0 / imu_rate;

  Trace trace = integrate_trace(
      0.0, steps, imu_rate, fix_rate,
      [&](std::int64_t k, const Vec3&, const Vec3&) {
        const double t = static_cast<double>(k) * dt;
        double ay = 0.0;
        if (t < ramp)
          ay = a_ramp;
        else if (t >= duration_s - ramp)
          ay = -a_ramp;
        return Vec3(0.0, ay, 0.0);
      });
  add_noise(trace, noise);
  return trace;
}

Trace generate_window_trace(const std::vector<Waypoint>& waypoints,
                            double imu_rate, double fix_rate,
                            const TraceNoise& noise) {
  if (waypoints.size() < 2)
    throw std::invalid_argument("generate_window_trace: need at least 2 waypoints");
  if (!(imu_rate > 0.0) || !(fix_rate > 0.0))
    throw std::invalid_argument("generate_window_trace: rates must be positive");
  for (std::size_t i = 1; i < waypoints.size(); ++i)
    if (!(waypoints[i].t > waypoints[i - 1].t))
      throw std::invalid_argument(
          "generate_window_trace: waypoint timestamps must strictly increase "
          "(violated at index " + std::to_string(i) + ")");

  std::vector<double> ts;
  std::vector<double> axis[3];
  for (const auto& w : waypoints) {
    ts.push_back(w.t);
    for (int i = 0; i < 3; ++i) axis[i].push_back(w.position[i]);
  }
  const CubicSpline sx(ts, axis[0]), sy(ts, axis[1]), sz(ts, axis[2]);
  auto spline_at = [&](double t) { return Vec3(sx.eval(t), sy.eval(t), sz.eval(t)); };

  const double t0 = ts.front();
  const double t_end = ts.back();
  const std::int64_t steps = std::llround((t_end - t0) * imu_rate);
  if (steps < 1)
    throw std::invalid_argument("generate_window_trace: span shorter than one IMU period");
  const double dt = 1.0 / imu_rate;

  // Feed the integrated state back into the per-step acceleration so the
  // discrete trajectory passes through the spline knots exactly (the spline
  // is clamped to zero slope at the ends, matching the at-rest start of the
  // integrator). Parasitic dither this induces in the samples is
  // O(dt * jerk), far below sensor noise.
  Trace trace = integrate_trace(
      t0, steps, imu_rate, fix_rate,
      [&](std::int64_t k, const Vec3& p, const Vec3& v) {
        const double t_next = t0 + static_cast<double>(k + 1) * dt;
        const Vec3 target = spline_at(std::min(t_next, t_end));
        return Vec3(2.0 / (dt * dt) * (target - p - v * dt));
      });

  add_noise(trace, noise);
  return trace;
}

}  // namespace sonopose
