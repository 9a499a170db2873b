#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "confpinn/conformal.hpp"
#include "confpinn/error.hpp"
#include "confpinn/harness.hpp"
#include "confpinn/random.hpp"

namespace {

using namespace confpinn;
using namespace confpinn::harness;

struct Holdout {
    std::vector<double> predictions;
    std::vector<double> truths;
};

Holdout normal_residuals(std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::normal_distribution<double> d;
    Holdout h;
    for (std::size_t i = 0; i < n; ++i) {
        h.predictions.push_back(0.01 * static_cast<double>(i));
        h.truths.push_back(h.predictions.back() + d(rng));
    }
    return h;
}

// Synthetic estimator: beta_hat = beta + N(0, 0.02^2), noise drawn from a
// stream of its own so it is independent of how beta was drawn.
InverseRecord noisy_estimator(double beta, std::uint64_t seed)
{
    Rng rng(derive_seed(seed, 1000, 0));
    std::normal_distribution<double> d(0.0, 0.02);
    return InverseRecord{beta, beta + d(rng), seed, 0.0, "synthetic"};
}

InverseRecord perfect_estimator(double beta, std::uint64_t seed)
{
    return InverseRecord{beta, beta, seed, 0.0, "synthetic"};
}

TEST(RepeatedSplit, PerfectPredictorAlwaysCovers)
{
    const std::vector<double> v(100, 0.37);
    const auto r = repeated_split_coverage(v, v, 80, 20, 0.1, 500, 1);
    for (double c : r.coverages) {
        EXPECT_EQ(c, 1.0);
    }
}

TEST(RepeatedSplit, SingleTrialIsMultipleOfOneTwentieth)
{
    const auto h = normal_residuals(100, 2);
    const auto r = repeated_split_coverage(h.predictions, h.truths, 80, 20, 0.1, 1, 3);
    ASSERT_EQ(r.trials(), 1u);
    const double scaled = r.coverages[0] * 20.0;
    EXPECT_EQ(scaled, std::round(scaled));
    EXPECT_EQ(r.running_mean[0], r.coverages[0]);
}

TEST(RepeatedSplit, ReportInvariants)
{
    const auto h = normal_residuals(100, 4);
    const auto r = repeated_split_coverage(h.predictions, h.truths, 80, 20, 0.1, 3000, 5);
    double sum = 0.0;
    for (std::size_t t = 0; t < r.trials(); ++t) {
        EXPECT_GE(r.coverages[t], 0.0);
        EXPECT_LE(r.coverages[t], 1.0);
        sum += r.coverages[t];
        EXPECT_NEAR(r.running_mean[t], sum / static_cast<double>(t + 1), 1e-12);
    }
    EXPECT_EQ(r.theoretical, 73.0 / 81.0);
    EXPECT_EQ(r.n_calibration, 80u);
    EXPECT_EQ(r.n_validation, 20u);
}

TEST(RepeatedSplit, SyntheticNormalResidualsConverge)
{
    const auto h = normal_residuals(100, 6);
    const auto r = repeated_split_coverage(h.predictions, h.truths, 80, 20, 0.1, 10000, 7);
    EXPECT_NEAR(r.final_mean(), 73.0 / 81.0, 0.01);
    // The running mean has settled over the last 1000 trials.
    for (std::size_t t = 9000; t < 10000; ++t) {
        EXPECT_NEAR(r.running_mean[t], r.final_mean(), 0.01);
    }
}

// Fresh i.i.d. holdouts per repetition: the average over holdouts is the
// marginal coverage and must hit the exact value.
TEST(RepeatedSplit, MarginalOverHoldoutsIsExact)
{
    double total = 0.0;
    constexpr int holdouts = 200;
    for (int k = 0; k < holdouts; ++k) {
        const auto h = normal_residuals(100, 1000 + k);
        total += repeated_split_coverage(h.predictions, h.truths, 80, 20, 0.1, 500, k).final_mean();
    }
    EXPECT_NEAR(total / holdouts, 73.0 / 81.0, 0.005);
}

TEST(RepeatedSplit, IndependentOfThreadCount)
{
    const auto h = normal_residuals(100, 8);
    const auto a = repeated_split_coverage(h.predictions, h.truths, 80, 20, 0.1, 2000, 9, 1);
    const auto b = repeated_split_coverage(h.predictions, h.truths, 80, 20, 0.1, 2000, 9, 4);
    EXPECT_EQ(a.coverages, b.coverages);
}

TEST(RepeatedSplit, SizeMismatchIsConfigError)
{
    const auto h = normal_residuals(100, 8);
    EXPECT_THROW(repeated_split_coverage(h.predictions, h.truths, 80, 19, 0.1, 10, 1), ConfigError);
    EXPECT_THROW(repeated_split_coverage(h.predictions, h.truths, 80, 20, 0.1, 0, 1), ConfigError);
    const std::vector<double> shorter(99, 0.0);
    EXPECT_THROW(repeated_split_coverage(shorter, h.truths, 80, 20, 0.1, 10, 1), ConfigError);
}

TEST(Inverse, EquispacedBetas)
{
    const auto b = equispaced_betas(100);
    ASSERT_EQ(b.size(), 100u);
    for (std::size_t j = 0; j < 100; ++j) {
        EXPECT_DOUBLE_EQ(b[j], 0.5 * static_cast<double>(j) / 100.0);
    }
}

TEST(Inverse, PipelineDrawsFromPriorAndKeepsOrder)
{
    std::vector<std::size_t> order;
    const auto records = run_inverse_pipeline(
        UniformPrior{}, 200, 11, noisy_estimator,
        [&](std::size_t i, const InverseRecord&) { order.push_back(i); }, 4);
    ASSERT_EQ(records.size(), 200u);
    for (std::size_t i = 0; i < order.size(); ++i) {
        EXPECT_EQ(order[i], i);
    }
    for (const auto& r : records) {
        EXPECT_TRUE(UniformPrior{}.contains(r.beta_true));
    }
    const auto again = run_inverse_pipeline(UniformPrior{}, 200, 11, noisy_estimator, {}, 1);
    EXPECT_EQ(records, again);
}

TEST(Inverse, SingleDataset)
{
    EXPECT_EQ(run_inverse_pipeline(UniformPrior{}, 1, 0, perfect_estimator).size(), 1u);
    EXPECT_THROW(run_inverse_pipeline(UniformPrior{}, 0, 0, perfect_estimator), ConfigError);
}

TEST(Inverse, EstimatorFailurePropagates)
{
    EXPECT_THROW(run_inverse_pipeline(
                     UniformPrior{}, 10, 0,
                     [](double, std::uint64_t) -> InverseRecord { throw IoError("disk full"); }, {},
                     2),
                 IoError);
}

TEST(Inverse, PinnRecordIsDeterministicAndAccurate)
{
    InverseSetup setup;
    const auto a = make_inverse_record(setup, 0.25, 123);
    const auto b = make_inverse_record(setup, 0.25, 123);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(a.beta_hat, 0.25, 1e-3);
    EXPECT_TRUE(std::isfinite(a.beta_hat));
    EXPECT_EQ(a.dataset_seed, 123u);
}

TEST(Inverse, BrokenTrainingIsRecordedNotDropped)
{
    InverseSetup setup;
    setup.training.adam.lr_start = 1e30; // blows the network up
    setup.training.adam.lr_end = 1e30;
    setup.training.adam.keep_best = false;
    const auto r = make_inverse_record(setup, 0.2, 5);
    EXPECT_TRUE(std::isfinite(r.beta_hat));
    EXPECT_FALSE(r.termination.empty());
}

TEST(FreshTest, PerfectEstimatorAlwaysCovers)
{
    const auto records = run_inverse_pipeline(UniformPrior{}, 50, 1, perfect_estimator);
    const auto r = inverse_fresh_test_coverage(records, 40, 0.2, 100, 2, UniformPrior{},
                                               perfect_estimator);
    for (double c : r.coverages) {
        EXPECT_EQ(c, 1.0);
    }
    EXPECT_EQ(r.theoretical, 33.0 / 41.0);
}

// Coverage given one record set fluctuates by about 0.013 around the exact
// value; averaging over record sets recovers the marginal coverage.
TEST(FreshTest, SyntheticEstimatorConverges)
{
    constexpr int sets = 20;
    double total = 0.0;
    for (int k = 0; k < sets; ++k) {
        const auto records = run_inverse_pipeline(UniformPrior{}, 1000, 300 + k, noisy_estimator);
        total += inverse_fresh_test_coverage(records, 800, 0.2, 2000, 400 + k, UniformPrior{},
                                             noisy_estimator)
                     .final_mean();
    }
    EXPECT_NEAR(total / sets, 641.0 / 801.0, 0.01);
}

TEST(FreshTest, Preconditions)
{
    const auto records = run_inverse_pipeline(UniformPrior{}, 10, 1, perfect_estimator);
    EXPECT_THROW(
        inverse_fresh_test_coverage(records, 11, 0.2, 5, 1, UniformPrior{}, perfect_estimator),
        ConfigError);
    EXPECT_THROW(
        inverse_fresh_test_coverage(records, 8, 0.2, 0, 1, UniformPrior{}, perfect_estimator),
        ConfigError);
}

TEST(FreshTest, TrialSinkInOrder)
{
    const auto records = run_inverse_pipeline(UniformPrior{}, 20, 1, noisy_estimator);
    std::vector<double> seen;
    const auto r = inverse_fresh_test_coverage(
        records, 10, 0.2, 64, 2, UniformPrior{}, noisy_estimator,
        [&](std::size_t i, double c) {
            EXPECT_EQ(i, seen.size());
            seen.push_back(c);
        },
        3);
    EXPECT_EQ(seen, r.coverages);
}

TEST(InverseSplit, PerfectAndSynthetic)
{
    const auto betas = equispaced_betas(100);
    const auto perfect = run_inverse_pipeline(betas, 0, perfect_estimator);
    for (double c : inverse_repeated_split_coverage(perfect, 80, 20, 0.1, 200, 1).coverages) {
        EXPECT_EQ(c, 1.0);
    }
    const auto noisy = run_inverse_pipeline(betas, 0, noisy_estimator);
    const auto r = inverse_repeated_split_coverage(noisy, 80, 20, 0.1, 10000, 2);
    EXPECT_NEAR(r.final_mean(), 73.0 / 81.0, 0.01);
}

TEST(Persistence, RecordsRoundTrip)
{
    auto records = run_inverse_pipeline(UniformPrior{}, 30, 9, noisy_estimator);
    records[3].final_loss = std::numeric_limits<double>::infinity();
    records[3].termination = "numeric_failure";
    const auto path = std::filesystem::temp_directory_path() / "confpinn_records.csv";
    {
        RecordWriter w(path);
        for (const auto& r : records) {
            w.write(r);
        }
    }
    EXPECT_EQ(read_records(path), records);
    std::filesystem::remove(path);
}

TEST(Persistence, RecordsMissingColumn)
{
    std::stringstream ss("beta_true,seed,final_loss,termination\n0.1,1,0,x\n");
    try {
        read_records(ss);
        FAIL();
    }
    catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("beta_hat"), std::string::npos);
    }
}

TEST(Persistence, ReportCsv)
{
    const auto r = make_report({1.0, 0.5, 0.75}, 80, 20, 0.1, 0);
    std::stringstream ss;
    write_report(ss, r);
    EXPECT_EQ(ss.str(), "trial,coverage,running_mean,theoretical\n"
                        "1,1,1,0.9012345679012346\n"
                        "2,0.5,0.75,0.9012345679012346\n"
                        "3,0.75,0.75,0.9012345679012346\n");
}

} // namespace
