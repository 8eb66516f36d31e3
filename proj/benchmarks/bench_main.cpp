#include <benchmark/benchmark.h>

#include "sonopose/acoustic.hpp"
#include "sonopose/estimator.hpp"
#include "sonopose/gmm.hpp"
#include "sonopose/perturb.hpp"
#include "sonopose/trace.hpp"

using namespace sonopose;

namespace {

const Trace& walk_trace() {
  static const Trace trace = [] {
    TraceNoise noise;
    noise.accel_std = Vec3::Constant(0.02);
    noise.gyro_std = Vec3::Constant(0.002);
    noise.seed = 1;
    return generate_walk_trace(4.0, 10.0, 200.0, 20.0, noise);
  }();
  return trace;
}

void bm_strapdown_step(benchmark::State& state) {
  const auto& imu = walk_trace().imu;
  EstimatorState s;
  std::size_t k = 0;
  for (auto _ : state) {
    strapdown_step(s, imu[k], 1.0 / 200.0);
    benchmark::DoNotOptimize(s.pose.position);
    if (++k == imu.size()) {
      k = 0;
      s = EstimatorState{};
    }
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()));
}
BENCHMARK(bm_strapdown_step);

void bm_full_run(benchmark::State& state) {
  const Trace& trace = walk_trace();
  EstimatorConfig config;
  for (auto _ : state) {
    EstimatorRun run = run_estimator(trace, config);
    benchmark::DoNotOptimize(run.trajectory.back().position);
  }
  // One item = one 10 s trace at 200 Hz.
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()));
}
BENCHMARK(bm_full_run);

void bm_sample_tone(benchmark::State& state) {
  AcousticTone tone;
  tone.frequency = 2650.0;
  tone.amplitude = 5.0;
  tone.t_end = 1e9;
  AdcModel adc;
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_tone(tone, adc, 0.8, t));
    t += 1.0 / 200.0;
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()));
}
BENCHMARK(bm_sample_tone);

void bm_inject_constant(benchmark::State& state) {
  const Trace& trace = walk_trace();
  ConstantBias bias;
  bias.magnitude = 2.1;
  bias.window = TimeWindow::fraction(0.0, 1.0);
  for (auto _ : state) {
    Trace out = inject_constant(trace, bias);
    benchmark::DoNotOptimize(out.imu.back().accel);
  }
}
BENCHMARK(bm_inject_constant);

void bm_fit_gmm(benchmark::State& state) {
  GmmModel truth;
  truth.components = {{0.5, 0.0, 0.1}, {0.5, 3.0, 0.1}};
  const auto samples = sample_gmm(truth, 10000, 7);
  for (auto _ : state) {
    GmmModel model = fit_gmm(samples, 2, 7);
    benchmark::DoNotOptimize(model.components.front().mean);
  }
}
BENCHMARK(bm_fit_gmm);

}  // namespace

BENCHMARK_MAIN();
