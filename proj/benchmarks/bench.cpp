#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "vibtrack/dsp.hpp"
#include "vibtrack/features.hpp"
#include "vibtrack/flow.hpp"
#include "vibtrack/scene.hpp"
#include "vibtrack/tracking.hpp"

using namespace vibtrack;

namespace {

scene::MultiSceneSpec bench_scene(int width, int height, int n_frames) {
    scene::MultiSceneSpec s;
    s.canvas = {width, height, 30.0, n_frames, 0.01, 4};
    s.targets.push_back({"target", {width / 4, height / 4, width / 2, height / 2}, 7,
                         scene::MotionProfile::sine(2.0, 3.0), {}});
    return s;
}

void BM_Fft(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<double> x(n);
    for (double& v : x) v = g(rng);
    for (auto _ : state) benchmark::DoNotOptimize(dsp::fft(x));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oNLogN);

void BM_Spectrum2048(benchmark::State& state) {
    std::vector<double> x(2048);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::sin(0.837 * double(j));
    for (auto _ : state) benchmark::DoNotOptimize(dsp::spectrum({x, 30.0}));
}
BENCHMARK(BM_Spectrum2048);

void BM_Filtfilt(benchmark::State& state) {
    const auto filter = dsp::butterworth_design(4, 0.5, 30.0, dsp::FilterKind::bandpass, 14.0);
    std::vector<double> x(2048);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::sin(0.837 * double(j));
    for (auto _ : state) benchmark::DoNotOptimize(dsp::filtfilt({x, 30.0}, filter));
}
BENCHMARK(BM_Filtfilt);

void BM_ExtractFeatures(benchmark::State& state) {
    const auto side = static_cast<int>(state.range(0));
    const Frame frame = scene::render_frame(bench_scene(side, side, 1), 0);
    for (auto _ : state) benchmark::DoNotOptimize(features::extract_features(frame, {}));
}
BENCHMARK(BM_ExtractFeatures)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LkFramePair(benchmark::State& state) {
    const auto [frames, truth] = scene::multi_target_scene(bench_scene(320, 240, 2));
    tracking::TrackingConfig cfg;
    const auto seeds = tracking::seed_points(frames[0], {80, 60, 160, 120}, cfg);
    for (auto _ : state) benchmark::DoNotOptimize(flow::track_points_lk(frames[0], frames[1], seeds, cfg.lk));
    state.counters["points"] = static_cast<double>(seeds.size());
}
BENCHMARK(BM_LkFramePair)->Unit(benchmark::kMillisecond);

void BM_MeasureTarget(benchmark::State& state) {
    const auto spec = bench_scene(160, 120, 30);
    const auto [frames, truth] = scene::multi_target_scene(spec);
    detect::DetectionSet dets;
    dets.fps = 30.0;
    for (int j = 0; j < 30; ++j) {
        const auto& r = spec.targets[0].rect;
        dets.detections.push_back(
            {j, {r.x + truth[0].du[j], r.y + truth[0].dv[j], double(r.width), double(r.height)}, 0.99, "target", {}});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            tracking::measure_target(frames, dets, tracking::TrackerMode::bbox_plus_keypoints, {}));
    }
}
BENCHMARK(BM_MeasureTarget)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
