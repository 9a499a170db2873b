#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "confpinn/physics.hpp"

namespace confpinn::harness {

/// Per-trial empirical coverages and their running mean, against the exact
/// conformal coverage for the calibration size in use.
struct CoverageReport {
    std::vector<double> coverages;
    std::vector<double> running_mean; ///< running_mean[t] = mean of coverages[0..t]
    double theoretical = 0.0;
    std::size_t n_calibration = 0;
    std::size_t n_validation = 0; ///< validation points per trial (1 for fresh tests)
    double alpha = 0.1;
    std::uint64_t seed = 0;

    std::size_t trials() const noexcept { return coverages.size(); }
    double final_mean() const { return running_mean.empty() ? 0.0 : running_mean.back(); }
};

/// Builds a report from per-trial coverages, filling in the running mean.
CoverageReport make_report(std::vector<double> coverages, std::size_t n_calibration,
                           std::size_t n_validation, double alpha, std::uint64_t seed);

/// Worker count used when a caller passes threads = 0.
std::size_t default_threads() noexcept;

/// For each trial: split the holdout uniformly at random into n_c calibration
/// and n_v validation points, take the conformal quantile of the calibration
/// scores |truth - prediction| and record the fraction of validation truths
/// inside prediction +- quantile. Predictions are fixed; only the split is
/// redrawn. Trial i uses derive_seed(seed, coverage_trial, i), so the report
/// does not depend on the thread count.
CoverageReport repeated_split_coverage(std::span<const double> predictions,
                                       std::span<const double> truths, std::size_t n_calibration,
                                       std::size_t n_validation, double alpha, std::size_t trials,
                                       std::uint64_t seed, std::size_t threads = 0);

// ----------------------------------------------------------------- inverse ---

/// Growth rates are drawn uniformly from [lower, upper).
struct UniformPrior {
    double lower = 0.0;
    double upper = 0.5;

    void validate() const;
    bool contains(double beta) const noexcept { return beta >= lower && beta < upper; }
};

struct InverseRecord {
    double beta_true = 0.0;
    double beta_hat = 0.0;
    std::uint64_t dataset_seed = 0;
    double final_loss = 0.0;
    std::string termination; ///< L-BFGS stopping rule, or "numeric_failure"

    friend bool operator==(const InverseRecord&, const InverseRecord&) = default;
};

/// Everything needed to turn (beta, seed) into one trained estimate.
struct InverseSetup {
    double n0 = 0.1;
    double t_max = 30.0;
    std::size_t points = 10;       ///< equispaced observations on [0, t_max]
    double noise_sigma = 0.0;
    std::size_t collocation = 100; ///< residual points on [0, t_max]
    std::vector<std::size_t> layers{1, 10, 10, 1};
    UniformPrior prior;
    physics::TrainingConfig training;

    void validate() const;
};

/// Generates the dataset for `beta_true` (RK4 plus optional noise seeded from
/// `seed`), trains a freshly initialized inverse-mode network and reports its
/// growth-rate estimate. A run that breaks down numerically is still
/// returned, with the initial estimate, an infinite loss and termination
/// "numeric_failure". When `trained` is given it receives the final network.
InverseRecord make_inverse_record(const InverseSetup& setup, double beta_true, std::uint64_t seed,
                                  net::MlpModel* trained = nullptr);

/// (beta_true, seed) -> record. Swappable so the coverage procedures can be
/// exercised with synthetic estimators.
using Estimator = std::function<InverseRecord(double beta_true, std::uint64_t seed)>;
Estimator pinn_estimator(InverseSetup setup);

/// Receives records in index order as soon as all earlier ones are done.
using RecordSink = std::function<void(std::size_t index, const InverseRecord&)>;

/// Record j draws its growth rate from the prior with, and generates its
/// dataset from, derive_seed(seed, inverse_record, j). Every record is kept,
/// whatever its training outcome.
std::vector<InverseRecord> run_inverse_pipeline(const UniformPrior& prior, std::size_t n_datasets,
                                                std::uint64_t seed, const Estimator& estimator,
                                                const RecordSink& sink = {},
                                                std::size_t threads = 0);

/// Same as run_inverse_pipeline with prescribed growth rates.
std::vector<InverseRecord> run_inverse_pipeline(std::span<const double> betas, std::uint64_t seed,
                                                const Estimator& estimator,
                                                const RecordSink& sink = {},
                                                std::size_t threads = 0);

/// beta_j = upper * j / count for j = 0..count-1.
std::vector<double> equispaced_betas(std::size_t count, double upper = 0.5);

/// Receives (test index, coverage) in index order.
using TrialSink = std::function<void(std::size_t index, double coverage)>;

/// For each test i: draw beta_test from the prior and a fresh estimate from
/// `estimator`, draw n_c of the records as calibration set, and record
/// whether beta_test lies within beta_hat_test +- the conformal quantile of
/// |beta_j - beta_hat_j|. Calibration is redrawn for every test.
CoverageReport inverse_fresh_test_coverage(std::span<const InverseRecord> records,
                                           std::size_t n_calibration, double alpha,
                                           std::size_t n_tests, std::uint64_t seed,
                                           const UniformPrior& prior, const Estimator& estimator,
                                           const TrialSink& sink = {}, std::size_t threads = 0);

/// repeated_split_coverage over (beta_true, beta_hat) pairs.
CoverageReport inverse_repeated_split_coverage(std::span<const InverseRecord> records,
                                               std::size_t n_calibration, std::size_t n_validation,
                                               double alpha, std::size_t trials, std::uint64_t seed,
                                               std::size_t threads = 0);

// ------------------------------------------------------------- persistence ---

/// CSV header beta_true,beta_hat,seed,final_loss,termination.
void write_records_header(std::ostream& out);
void write_record(std::ostream& out, const InverseRecord& record);
std::vector<InverseRecord> read_records(std::istream& in);
std::vector<InverseRecord> read_records(const std::filesystem::path& path);

/// Append-only record file: the header goes out on open and every record is
/// flushed as it is written.
class RecordWriter {
  public:
    explicit RecordWriter(const std::filesystem::path& path);
    void write(const InverseRecord& record);

  private:
    std::ofstream out_;
};

/// CSV header trial,coverage,running_mean,theoretical; trials count from 1.
void write_report(std::ostream& out, const CoverageReport& report);
void write_report(const std::filesystem::path& path, const CoverageReport& report);

} // namespace confpinn::harness
