#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "config.hpp"
#include "confpinn/harness.hpp"
#include "confpinn/physics.hpp"

namespace confpinn::cli {

/// Settings that change how a run executes but never what it writes.
struct RunOptions {
    std::size_t threads = 0;     ///< 0 picks the hardware concurrency
    std::ostream* log = nullptr; ///< progress messages, if set
};

struct ForwardResult {
    std::filesystem::path directory;
    physics::TrainingReport training;
    std::vector<double> alphas;
    std::vector<double> half_widths;               ///< per alpha, from the fixed calibration split
    std::vector<harness::CoverageReport> coverage; ///< per alpha
    /// Buckley-Leverett only: |prediction - reference| over the reference
    /// cells at the data time.
    double max_error = 0.0;
    double median_error = 0.0;
};

struct InverseResult {
    std::filesystem::path directory;
    std::vector<harness::InverseRecord> records;
    std::optional<harness::CoverageReport> fresh_test;   ///< random mode only
    std::vector<harness::CoverageReport> repeated_split; ///< per alpha
};

struct CoverageResult {
    std::filesystem::path directory;
    std::vector<harness::CoverageReport> reports; ///< per alpha
};

/// Each runner validates the config, writes `config.ini` into the run
/// directory first and then fills data/, models/, reports/ and plots/.
ForwardResult run_forward_logistic(const ExperimentConfig& config, const RunOptions& options = {});
ForwardResult run_forward_bl(const ExperimentConfig& config, const RunOptions& options = {});
InverseResult run_inverse(const ExperimentConfig& config, const RunOptions& options = {});
CoverageResult run_coverage(const ExperimentConfig& config, const RunOptions& options = {});

/// Dispatches on config.experiment.
void run(const ExperimentConfig& config, const RunOptions& options = {});

/// File-name fragment for a miscoverage level, e.g. "0.1".
std::string alpha_tag(double alpha);

} // namespace confpinn::cli
