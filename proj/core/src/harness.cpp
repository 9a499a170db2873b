#include "confpinn/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

#include "confpinn/conformal.hpp"
#include "confpinn/csv.hpp"
#include "confpinn/datagen.hpp"
#include "confpinn/error.hpp"
#include "confpinn/format.hpp"
#include "confpinn/random.hpp"

namespace confpinn::harness {

namespace {

/// Runs work(i) for i in [0, n) on up to `threads` workers and hands each
/// result to emit(i, result) in index order, from one thread at a time.
/// The first exception stops further work and is rethrown.
template <class T, class Work, class Emit>
std::vector<T> ordered_parallel(std::size_t n, std::size_t threads, Work work, Emit emit)
{
    std::vector<std::optional<T>> slots(n);
    std::mutex mutex;
    std::size_t next_task = 0;
    std::size_t next_emit = 0;
    std::exception_ptr failure;
    bool emitting = false;

    const auto flush = [&](std::unique_lock<std::mutex>& lock) {
        if (emitting) {
            return; // the thread already emitting picks up this slot too
        }
        emitting = true;
        while (next_emit < n && slots[next_emit] && !failure) {
            const auto i = next_emit++;
            lock.unlock();
            try {
                emit(i, *slots[i]);
            }
            catch (...) {
                lock.lock();
                failure = std::current_exception();
                break;
            }
            lock.lock();
        }
        emitting = false;
    };

    const auto worker = [&] {
        std::unique_lock lock(mutex);
        while (!failure && next_task < n) {
            const auto i = next_task++;
            lock.unlock();
            std::optional<T> result;
            std::exception_ptr error;
            try {
                result.emplace(work(i));
            }
            catch (...) {
                error = std::current_exception();
            }
            lock.lock();
            if (error) {
                if (!failure) {
                    failure = error;
                }
                break;
            }
            slots[i] = std::move(result);
            flush(lock);
        }
    };

    threads = std::clamp<std::size_t>(threads == 0 ? default_threads() : threads, 1,
                                      std::max<std::size_t>(n, 1));
    if (threads == 1) {
        worker();
    }
    else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    std::vector<T> out;
    out.reserve(n);
    for (auto& slot : slots) {
        out.push_back(std::move(*slot));
    }
    return out;
}

double draw_beta(const UniformPrior& prior, std::uint64_t seed)
{
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(prior.lower, prior.upper);
    double beta = dist(rng);
    // uniform_real_distribution may round up to the upper bound.
    if (beta >= prior.upper) {
        beta = std::nextafter(prior.upper, prior.lower);
    }
    return beta;
}

std::vector<double> scores_of(std::span<const InverseRecord> records)
{
    std::vector<double> s(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        s[i] = std::abs(records[i].beta_true - records[i].beta_hat);
    }
    return s;
}

} // namespace

std::size_t default_threads() noexcept
{
    return std::max(1u, std::thread::hardware_concurrency());
}

CoverageReport make_report(std::vector<double> coverages, std::size_t n_calibration,
                           std::size_t n_validation, double alpha, std::uint64_t seed)
{
    CoverageReport report;
    report.running_mean.reserve(coverages.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < coverages.size(); ++t) {
        sum += coverages[t];
        report.running_mean.push_back(sum / static_cast<double>(t + 1));
    }
    report.coverages = std::move(coverages);
    report.theoretical = conformal::theoretical_coverage(n_calibration, alpha);
    report.n_calibration = n_calibration;
    report.n_validation = n_validation;
    report.alpha = alpha;
    report.seed = seed;
    return report;
}

CoverageReport repeated_split_coverage(std::span<const double> predictions,
                                       std::span<const double> truths, std::size_t n_calibration,
                                       std::size_t n_validation, double alpha, std::size_t trials,
                                       std::uint64_t seed, std::size_t threads)
{
    if (predictions.size() != truths.size()) {
        throw ConfigError("coverage: " + std::to_string(predictions.size()) +
                          " predictions but " + std::to_string(truths.size()) + " truths");
    }
    if (n_calibration + n_validation != truths.size()) {
        throw ConfigError("coverage: n_c + n_v = " + std::to_string(n_calibration + n_validation) +
                          " but the holdout has " + std::to_string(truths.size()) + " points");
    }
    if (n_calibration == 0 || n_validation == 0) {
        throw ConfigError("coverage: n_c and n_v must both be positive");
    }
    if (trials == 0) {
        throw ConfigError("coverage: need at least one trial");
    }
    conformal::conformal_rank(n_calibration, alpha); // validates alpha

    const auto n = truths.size();
    // Per-trial work is tiny, so trials are handed out in chunks.
    constexpr std::size_t chunk = 256;
    const auto chunks = (trials + chunk - 1) / chunk;
    std::vector<double> coverages(trials);
    ordered_parallel<int>(
        chunks, threads,
        [&](std::size_t c) {
            std::vector<double> calib(n_calibration);
            for (std::size_t trial = c * chunk; trial < std::min(trials, (c + 1) * chunk);
                 ++trial) {
                Rng rng(derive_seed(seed, streams::coverage_trial, trial));
                const auto perm = random_permutation(n, rng);
                for (std::size_t j = 0; j < n_calibration; ++j) {
                    calib[j] = std::abs(truths[perm[j]] - predictions[perm[j]]);
                }
                const double q = conformal::conformal_quantile(conformal::ScoreSet(calib), alpha);
                std::size_t hits = 0;
                for (std::size_t j = n_calibration; j < n; ++j) {
                    const auto interval = conformal::make_interval(predictions[perm[j]], q, alpha);
                    hits += conformal::covered(interval, truths[perm[j]]) ? 1 : 0;
                }
                coverages[trial] = static_cast<double>(hits) / static_cast<double>(n_validation);
            }
            return 0;
        },
        [](std::size_t, int) {});
    return make_report(std::move(coverages), n_calibration, n_validation, alpha, seed);
}

// ----------------------------------------------------------------- inverse ---

void UniformPrior::validate() const
{
    if (!(std::isfinite(lower) && std::isfinite(upper) && lower < upper)) {
        throw ConfigError("prior needs finite bounds with lower < upper");
    }
}

void InverseSetup::validate() const
{
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
        throw ConfigError("inverse setup: t_max must be positive");
    }
    if (points < 1) {
        throw ConfigError("inverse setup: need at least one observation per dataset");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw ConfigError("inverse setup: noise sigma must be finite and non-negative");
    }
    if (layers.size() < 2 || layers.front() != 1 || layers.back() != 1) {
        throw ConfigError("inverse setup: network must map one input to one output");
    }
    prior.validate();
    training.adam.validate();
}

InverseRecord make_inverse_record(const InverseSetup& setup, double beta_true, std::uint64_t seed,
                                  net::MlpModel* trained)
{
    physics::LogisticProblem problem;
    problem.beta = beta_true;
    problem.n0 = setup.n0;
    problem.t_domain = {0.0, setup.t_max};
    problem.inverse_mode = true;

    const auto t = datagen::linspace(0.0, setup.t_max, setup.points);
    auto data = datagen::logistic_dataset(beta_true, setup.n0, t);
    data = datagen::add_noise(data, setup.noise_sigma, derive_seed(seed, streams::noise, 0));

    auto model = net::init_model(setup.layers, derive_seed(seed, streams::model_init, 0), true);
    const double initial_beta = *model.beta();

    InverseRecord record;
    record.beta_true = beta_true;
    record.dataset_seed = seed;
    try {
        const auto grid = physics::logistic_grid(problem, setup.collocation);
        const auto loss = physics::make_logistic_loss(problem, data, grid);
        const auto report = physics::train(model, *loss, setup.training);
        record.beta_hat = *model.beta();
        record.final_loss = report.final_loss;
        record.termination = std::string(optim::to_string(report.lbfgs.termination));
        if (!std::isfinite(record.beta_hat)) {
            throw NumericError("growth-rate estimate is not finite");
        }
    }
    catch (const NumericError&) {
        record.beta_hat = initial_beta;
        record.final_loss = std::numeric_limits<double>::infinity();
        record.termination = "numeric_failure";
    }
    if (trained != nullptr) {
        *trained = std::move(model);
    }
    return record;
}

Estimator pinn_estimator(InverseSetup setup)
{
    setup.validate();
    return [setup = std::move(setup)](double beta, std::uint64_t seed) {
        return make_inverse_record(setup, beta, seed);
    };
}

std::vector<InverseRecord> run_inverse_pipeline(const UniformPrior& prior, std::size_t n_datasets,
                                                std::uint64_t seed, const Estimator& estimator,
                                                const RecordSink& sink, std::size_t threads)
{
    prior.validate();
    if (n_datasets < 1) {
        throw ConfigError("inverse pipeline needs at least one dataset");
    }
    return ordered_parallel<InverseRecord>(
        n_datasets, threads,
        [&](std::size_t j) {
            const auto record_seed = derive_seed(seed, streams::inverse_record, j);
            return estimator(draw_beta(prior, record_seed), record_seed);
        },
        [&](std::size_t j, const InverseRecord& r) {
            if (sink) {
                sink(j, r);
            }
        });
}

std::vector<InverseRecord> run_inverse_pipeline(std::span<const double> betas, std::uint64_t seed,
                                                const Estimator& estimator,
                                                const RecordSink& sink, std::size_t threads)
{
    if (betas.empty()) {
        throw ConfigError("inverse pipeline needs at least one dataset");
    }
    return ordered_parallel<InverseRecord>(
        betas.size(), threads,
        [&](std::size_t j) {
            return estimator(betas[j], derive_seed(seed, streams::inverse_record, j));
        },
        [&](std::size_t j, const InverseRecord& r) {
            if (sink) {
                sink(j, r);
            }
        });
}

std::vector<double> equispaced_betas(std::size_t count, double upper)
{
    std::vector<double> betas(count);
    for (std::size_t j = 0; j < count; ++j) {
        betas[j] = upper * static_cast<double>(j) / static_cast<double>(count);
    }
    return betas;
}

CoverageReport inverse_fresh_test_coverage(std::span<const InverseRecord> records,
                                           std::size_t n_calibration, double alpha,
                                           std::size_t n_tests, std::uint64_t seed,
                                           const UniformPrior& prior, const Estimator& estimator,
                                           const TrialSink& sink, std::size_t threads)
{
    prior.validate();
    if (n_calibration < 1 || records.size() < n_calibration) {
        throw ConfigError("fresh-test coverage needs 1 <= n_c <= " +
                          std::to_string(records.size()) + " records, got n_c = " +
                          std::to_string(n_calibration));
    }
    if (n_tests < 1) {
        throw ConfigError("fresh-test coverage needs at least one test");
    }
    conformal::conformal_rank(n_calibration, alpha);
    const auto scores = scores_of(records);

    auto coverages = ordered_parallel<double>(
        n_tests, threads,
        [&](std::size_t i) {
            const auto test_seed = derive_seed(seed, streams::inverse_test, i);
            const double beta_test = draw_beta(prior, test_seed);
            const auto estimate = estimator(beta_test, test_seed);

            Rng rng(derive_seed(seed, streams::calibration_draw, i));
            const auto perm = random_permutation(records.size(), rng);
            std::vector<double> calib(n_calibration);
            for (std::size_t j = 0; j < n_calibration; ++j) {
                calib[j] = scores[perm[j]];
            }
            const double q = conformal::conformal_quantile(conformal::ScoreSet(calib), alpha);
            const auto interval = conformal::make_interval(estimate.beta_hat, q, alpha);
            return conformal::covered(interval, beta_test) ? 1.0 : 0.0;
        },
        [&](std::size_t i, double c) {
            if (sink) {
                sink(i, c);
            }
        });
    return make_report(std::move(coverages), n_calibration, 1, alpha, seed);
}

CoverageReport inverse_repeated_split_coverage(std::span<const InverseRecord> records,
                                               std::size_t n_calibration, std::size_t n_validation,
                                               double alpha, std::size_t trials, std::uint64_t seed,
                                               std::size_t threads)
{
    std::vector<double> truths(records.size()), estimates(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        truths[i] = records[i].beta_true;
        estimates[i] = records[i].beta_hat;
    }
    return repeated_split_coverage(estimates, truths, n_calibration, n_validation, alpha, trials,
                                   seed, threads);
}

// ------------------------------------------------------------- persistence ---

void write_records_header(std::ostream& out)
{
    csv::write_row(out, {"beta_true", "beta_hat", "seed", "final_loss", "termination"});
}

void write_record(std::ostream& out, const InverseRecord& r)
{
    csv::write_row(out, {format_double(r.beta_true), format_double(r.beta_hat),
                         std::to_string(r.dataset_seed), format_double(r.final_loss),
                         r.termination});
}

std::vector<InverseRecord> read_records(std::istream& in)
{
    const auto table = csv::read(in);
    const auto c_true = table.column("beta_true");
    const auto c_hat = table.column("beta_hat");
    const auto c_seed = table.column("seed");
    const auto c_loss = table.column("final_loss");
    const auto c_term = table.column("termination");
    std::vector<InverseRecord> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        InverseRecord r;
        r.beta_true = parse_double(row[c_true]);
        r.beta_hat = parse_double(row[c_hat]);
        try {
            r.dataset_seed = std::stoull(row[c_seed]);
        }
        catch (const std::exception&) {
            throw ParseError("records: bad seed '" + row[c_seed] + "'");
        }
        r.final_loss = parse_double(row[c_loss]);
        r.termination = row[c_term];
        if (!std::isfinite(r.beta_hat) || !std::isfinite(r.beta_true)) {
            throw ParseError("records: growth rates must be finite");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<InverseRecord> read_records(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_records(in);
}

RecordWriter::RecordWriter(const std::filesystem::path& path) : out_(path)
{
    if (!out_) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_records_header(out_);
    out_.flush();
}

void RecordWriter::write(const InverseRecord& record)
{
    write_record(out_, record);
    out_.flush();
    if (!out_) {
        throw IoError("failed writing inverse record");
    }
}

void write_report(std::ostream& out, const CoverageReport& report)
{
    csv::write_row(out, {"trial", "coverage", "running_mean", "theoretical"});
    const auto theoretical = format_double(report.theoretical);
    for (std::size_t t = 0; t < report.trials(); ++t) {
        csv::write_row(out, {std::to_string(t + 1), format_double(report.coverages[t]),
                             format_double(report.running_mean[t]), theoretical});
    }
}

void write_report(const std::filesystem::path& path, const CoverageReport& report)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_report(out, report);
}

} // namespace confpinn::harness
