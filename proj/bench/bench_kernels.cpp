// Parallel kernels against their serial references, plus one fitness
// evaluation of a population-sized batch.

#include <benchmark/benchmark.h>

#include "gsattack/attack.hpp"
#include "gsattack/camera.hpp"
#include "gsattack/objectives.hpp"
#include "gsattack/render.hpp"
#include "gsattack/scene.hpp"

using namespace gsattack;

namespace {

const SplatModel& scene() {
    static const SplatModel m = make_synthetic_scene(500, 1);
    return m;
}

Camera view(int resolution) { return report_views(scene(), resolution).front(); }

void BM_render(benchmark::State& state) {
    const Camera cam = view(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(render(scene(), cam));
}

void BM_render_serial(benchmark::State& state) {
    const Camera cam = view(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(render_serial(scene(), cam));
}

void BM_extract(benchmark::State& state) {
    const FeatureExtractor ex{};
    const ImageBuffer img = render(scene(), view(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(ex.extract(img));
}

void BM_extract_serial(benchmark::State& state) {
    const FeatureExtractor ex{};
    const ImageBuffer img = render(scene(), view(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(ex.extract_serial(img));
}

// 20 candidates on 4 views at 64x64, the desk attack setting.
void BM_population(benchmark::State& state) {
    const FeatureExtractor ex{};
    const auto sampling = ViewSampling::fit(scene(), ViewMode::sphere, 64);
    const ViewSet views = sample_views(sampling, 4, 3);
    std::vector<ImageBuffer> refs;
    for (const auto& cam : views.cameras) refs.push_back(render(scene(), cam));
    Rng rng(4);
    std::vector<SplatModel> batch;
    for (int i = 0; i < 20; ++i)
        batch.push_back(decode_genome(Genome::random_initial(scene().size(), 50.0 / 255.0, rng), scene()));
    for (auto _ : state) {
        for (const auto& m : batch) benchmark::DoNotOptimize(evaluate_candidate(m, views, refs, ex, 0.85));
    }
}

}  // namespace

BENCHMARK(BM_render)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_render_serial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_extract)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_extract_serial)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_population)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
