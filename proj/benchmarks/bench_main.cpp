#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "confpinn/conformal.hpp"
#include "confpinn/datagen.hpp"
#include "confpinn/harness.hpp"
#include "confpinn/net.hpp"
#include "confpinn/optim.hpp"
#include "confpinn/physics.hpp"
#include "confpinn/random.hpp"

using namespace confpinn;

namespace {

void BM_LogisticLossGradient(benchmark::State& state)
{
    physics::LogisticProblem p;
    const auto data = datagen::add_noise(
        datagen::logistic_dataset(0.05, 0.1, datagen::linspace(0.0, 150.0, 25)), 0.08, 1);
    const auto loss = physics::make_logistic_loss(
        p, data, physics::logistic_grid(p, static_cast<std::size_t>(state.range(0))));
    const auto m = net::init_model({1, 10, 10, 1}, 2, false);
    std::vector<double> grad(m.parameter_count());
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss->evaluate(m, grad).total);
    }
}
BENCHMARK(BM_LogisticLossGradient)->Arg(50)->Arg(200);

void BM_BuckleyLeverettLossGradient(benchmark::State& state)
{
    physics::BuckleyLeverettProblem p;
    const auto ref = datagen::solve_bl_reference(p, 200, 21);
    const auto loss = physics::make_bl_loss(p, datagen::bl_dataset(ref, p, 1.0, 150),
                                            physics::bl_grid(p, 50, 50, 100));
    const auto m = net::init_model({2, 10, 10, 1}, 3, false);
    std::vector<double> grad(m.parameter_count());
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss->evaluate(m, grad).total);
    }
}
BENCHMARK(BM_BuckleyLeverettLossGradient);

void BM_ConformalQuantile(benchmark::State& state)
{
    Rng rng(4);
    std::exponential_distribution<double> d(1.0);
    std::vector<double> s(static_cast<std::size_t>(state.range(0)));
    for (auto& v : s) {
        v = d(rng);
    }
    const conformal::ScoreSet scores(s);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conformal::conformal_quantile(scores, 0.1));
    }
}
BENCHMARK(BM_ConformalQuantile)->Arg(80)->Arg(800);

void BM_RepeatedSplitCoverage(benchmark::State& state)
{
    Rng rng(5);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> preds(100, 0.0);
    std::vector<double> truths(100);
    for (auto& v : truths) {
        v = d(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            harness::repeated_split_coverage(preds, truths, 80, 20, 0.1, 1000, 6, 1).final_mean());
    }
}
BENCHMARK(BM_RepeatedSplitCoverage)->Unit(benchmark::kMillisecond);

void BM_GodunovReference(benchmark::State& state)
{
    physics::BuckleyLeverettProblem p;
    const auto nx = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(datagen::solve_bl_reference(p, nx, 101).steps);
    }
}
BENCHMARK(BM_GodunovReference)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_LbfgsIteration(benchmark::State& state)
{
    physics::LogisticProblem p;
    p.inverse_mode = true;
    p.t_domain = {0.0, 30.0};
    const auto loss = physics::make_logistic_loss(
        p, datagen::logistic_dataset(0.25, 0.1, datagen::linspace(0.0, 30.0, 10)),
        physics::logistic_grid(p, 100));
    optim::LbfgsConfig config;
    config.max_iterations = 1;
    for (auto _ : state) {
        state.PauseTiming();
        auto m = net::init_model({1, 10, 10, 1}, 7, true);
        std::vector<double> x(m.parameters().begin(), m.parameters().end());
        state.ResumeTiming();
        const auto objective = [&](std::span<const double> v, std::span<double> g) {
            std::copy(v.begin(), v.end(), m.parameters().begin());
            return loss->evaluate(m, g).total;
        };
        benchmark::DoNotOptimize(optim::run_lbfgs(x, objective, config).final_loss);
    }
}
BENCHMARK(BM_LbfgsIteration);

void BM_InverseRecord(benchmark::State& state)
{
    const auto estimator = harness::pinn_estimator(harness::InverseSetup{});
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimator(0.25, seed++).beta_hat);
    }
}
BENCHMARK(BM_InverseRecord)->Unit(benchmark::kMillisecond)->Iterations(10);

} // namespace

BENCHMARK_MAIN();
