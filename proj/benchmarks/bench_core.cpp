#include <benchmark/benchmark.h>

#include <vector>

#include "fastonn/convnet.hpp"
#include "fastonn/hardware.hpp"
#include "fastonn/rng.hpp"

namespace {

using namespace fastonn;

hw::WeightPlane random_plane(std::size_t m, std::size_t n, Rng& rng) {
    std::vector<double> w(m * n);
    for (double& v : w) v = 2.0 * rng.uniform() - 1.0;
    return hw::WeightPlane::ideal(m, n, w);
}

void BM_OpticalCoreRun(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const bool noisy = state.range(1) != 0;
    Rng rng(1);
    const auto cfg = hw::HardwareConfig::with_shape(size, size);
    std::optional<noise::NoiseParams> np;
    if (noisy) {
        np = noise::NoiseParams{};
        np->clock_rate = cfg.clock_rate;
    }
    const hw::OpticalCore core(random_plane(size, size, rng), cfg, np);
    std::vector<double> x(size);
    for (double& v : x) v = rng.uniform();
    std::vector<double> analog(size);
    std::vector<std::int32_t> codes(size);
    for (auto _ : state) {
        core.run(x, rng, analog, codes);
        benchmark::DoNotOptimize(codes.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size * size));
}
BENCHMARK(BM_OpticalCoreRun)->Args({9, 0})->Args({9, 1})->Args({64, 1})->Args({256, 1});

std::vector<double> random_image(Rng& rng) {
    std::vector<double> img(cnn::kImageSide * cnn::kImageSide);
    for (double& v : img) v = rng.uniform() < 0.2 ? rng.uniform() : 0.0;
    return img;
}

void BM_Forward(benchmark::State& state) {
    Rng rng(2);
    const auto model = cnn::CnnModel::glorot(3);
    const auto image = random_image(rng);
    cnn::ForwardOptions opts;
    opts.backend = state.range(0) ? cnn::Backend::optical : cnn::Backend::digital;
    if (opts.backend == cnn::Backend::optical) {
        opts.optical.noise = noise::NoiseParams{};
        opts.optical.noise->clock_rate = 1e8;
    }
    for (auto _ : state) {
        auto r = cnn::forward(model, image, opts);
        benchmark::DoNotOptimize(r.label);
    }
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1);

void BM_TrainStep(benchmark::State& state) {
    Rng rng(4);
    const auto model = cnn::CnnModel::glorot(5);
    std::vector<std::vector<double>> images;
    std::vector<std::uint8_t> labels;
    for (int i = 0; i < 32; ++i) {
        images.push_back(random_image(rng));
        labels.push_back(static_cast<std::uint8_t>(i % 10));
    }
    cnn::ForwardOptions opts;
    for (auto _ : state) {
        auto lg = cnn::loss_and_grads(model, images, labels, opts);
        benchmark::DoNotOptimize(lg.loss);
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep);

}  // namespace
BENCHMARK_MAIN();
