#include <benchmark/benchmark.h>

#include "drowsy/classifier.hpp"
#include "drowsy/dataset.hpp"
#include "drowsy/detector.hpp"
#include "drowsy/detector_fixture.hpp"
#include "drowsy/features.hpp"
#include "drowsy/imaging.hpp"
#include "drowsy/random.hpp"

using namespace drowsy;

namespace {

Image noise_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    Image img(w, h, 1);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

const Cascade& fixture_cascade() {
    static const Cascade cascade = [] {
        DetectorFixtureSpec spec;
        CascadeTrainConfig train;
        return train_cascade(fixture_positives(spec, train.base), fixture_negatives(spec, train.base), train);
    }();
    return cascade;
}

void BM_IntegralImage(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const Image img = noise_image(side, side, 1);
    for (auto _ : state) benchmark::DoNotOptimize(IntegralImage(img));
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_IntegralImage)->Arg(64)->Arg(160)->Arg(640);

void BM_Detect(benchmark::State& state) {
    const Cascade& cascade = fixture_cascade();
    DetectorFixtureSpec spec;
    const Image frame = fixture_frame(spec, 9000, true).gray;
    for (auto _ : state) benchmark::DoNotOptimize(detect(frame, cascade));
}
BENCHMARK(BM_Detect)->Unit(benchmark::kMillisecond);

void BM_Preprocess(benchmark::State& state) {
    SyntheticSpec spec;
    const Image frame = synth_frame(spec, 0).image;
    const PreprocessConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(preprocess(frame, config));
}
BENCHMARK(BM_Preprocess)->Unit(benchmark::kMillisecond);

void BM_PcaFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    Matrix x(n, kFeatureLength);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < kFeatureLength; ++j) x(i, j) = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(pca_fit(x, PcaTarget::components(20)));
}
BENCHMARK(BM_PcaFit)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_SvmTrain(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    Matrix x(n, 10);
    std::vector<ClassLabel> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 2 ? ClassLabel::Fatigued : ClassLabel::Alert;
        for (std::size_t j = 0; j < 10; ++j) x(i, j) = rng.normal() + (j == 0 ? to_int(y[i]) * 1.5 : 0.0);
    }
    const SvmParams params{1.0, KernelSpec::rbf(scale_gamma(x)), 1e-3, 200};
    for (auto _ : state) benchmark::DoNotOptimize(svm_train(x, y, params));
}
BENCHMARK(BM_SvmTrain)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
