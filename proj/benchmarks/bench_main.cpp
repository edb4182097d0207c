#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "forester/engines.hpp"
#include "forester/evaluation.hpp"
#include "forester/frame.hpp"
#include "forester/preprocess.hpp"
#include "forester/rng.hpp"

using namespace forester;

namespace {

Frame classification_frame(int n, int p, int seed) {
    Rng rng(seed);
    std::vector<Column> cols;
    std::vector<std::vector<double>> feats(p, std::vector<double>(n));
    std::vector<std::string> y(n);
    for (int i = 0; i < n; ++i) {
        double z = 0;
        for (int j = 0; j < p; ++j) {
            feats[j][i] = rng.uniform();
            if (j < 3) z += feats[j][i];
        }
        y[i] = z > 1.5 ? "p" : "n";
    }
    for (int j = 0; j < p; ++j)
        cols.push_back(make_numeric_column("f" + std::to_string(j), feats[j]));
    cols.push_back(make_text_column("y", y));
    return Frame(std::move(cols), "y");
}

Frame regression_frame(int n, int p, int seed) {
    Rng rng(seed);
    std::vector<Column> cols;
    std::vector<std::vector<double>> feats(p, std::vector<double>(n));
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        double z = 0;
        for (int j = 0; j < p; ++j) {
            feats[j][i] = rng.uniform();
            z += (j % 2 ? 1.0 : -0.5) * feats[j][i];
        }
        y[i] = z + 0.1 * rng.uniform();
    }
    for (int j = 0; j < p; ++j)
        cols.push_back(make_numeric_column("f" + std::to_string(j), feats[j]));
    cols.push_back(make_numeric_column("y", y));
    return Frame(std::move(cols), "y");
}

void BM_FitTree(benchmark::State& state) {
    const Frame f = classification_frame(static_cast<int>(state.range(0)), 10, 1);
    const Hyperparams hp = default_hyperparams(EngineKind::Tree);
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_tree(FrameView(f), "y", hp, 1));
}
BENCHMARK(BM_FitTree)->Arg(500)->Arg(2000);

void BM_FitRandomForest(benchmark::State& state) {
    const Frame f = classification_frame(static_cast<int>(state.range(0)), 10, 2);
    Hyperparams hp = default_hyperparams(EngineKind::RandomForest);
    hp.n_trees = 50;
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_random_forest(FrameView(f), "y", hp, 1));
}
BENCHMARK(BM_FitRandomForest)->Arg(500)->Arg(2000);

void BM_FitGbdtDepthwise(benchmark::State& state) {
    const Frame f = regression_frame(static_cast<int>(state.range(0)), 10, 3);
    Hyperparams hp = default_hyperparams(EngineKind::GbdtDepthwise);
    hp.n_rounds = 50;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            fit_gbdt(FrameView(f), "y", hp, GrowthPolicy::Depthwise, 1));
}
BENCHMARK(BM_FitGbdtDepthwise)->Arg(500)->Arg(2000);

void BM_FitGbdtLeafwise(benchmark::State& state) {
    const Frame f = regression_frame(static_cast<int>(state.range(0)), 10, 4);
    Hyperparams hp = default_hyperparams(EngineKind::GbdtLeafwise);
    hp.n_rounds = 50;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            fit_gbdt(FrameView(f), "y", hp, GrowthPolicy::Leafwise, 1));
}
BENCHMARK(BM_FitGbdtLeafwise)->Arg(500)->Arg(2000);

void BM_Predict(benchmark::State& state) {
    const Frame f = classification_frame(5000, 10, 5);
    Hyperparams hp = default_hyperparams(EngineKind::RandomForest);
    hp.n_trees = 50;
    const TrainedModel m = fit_random_forest(FrameView(f), "y", hp, 1);
    for (auto _ : state) benchmark::DoNotOptimize(predict(m, f));
}
BENCHMARK(BM_Predict);

void BM_BinaryMetrics(benchmark::State& state) {
    Rng rng(6);
    const int n = static_cast<int>(state.range(0));
    std::vector<int> truth(n);
    std::vector<double> score(n);
    for (int i = 0; i < n; ++i) {
        truth[i] = rng.uniform() < 0.5 ? 1 : 0;
        score[i] = rng.uniform();
    }
    for (auto _ : state) benchmark::DoNotOptimize(binary_metrics(truth, score));
}
BENCHMARK(BM_BinaryMetrics)->Arg(1000)->Arg(100000);

void BM_KnnImpute(benchmark::State& state) {
    Rng rng(7);
    const int n = static_cast<int>(state.range(0));
    std::vector<double> a(n), b(n);
    std::vector<char> miss(n, 0);
    for (int i = 0; i < n; ++i) {
        a[i] = rng.uniform();
        b[i] = rng.uniform();
        if (rng.uniform() < 0.1) miss[i] = 1;
    }
    const Frame f({make_numeric_column("a", a), make_numeric_column("b", b, miss)});
    for (auto _ : state) benchmark::DoNotOptimize(impute(f, Knn{5}, 1));
}
BENCHMARK(BM_KnnImpute)->Arg(500)->Arg(2000);

} // namespace

BENCHMARK_MAIN();
