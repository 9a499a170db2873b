#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "confpinn/harness.hpp"
#include "confpinn/physics.hpp"

namespace confpinn::cli {

enum class Experiment { forward_logistic, forward_bl, inverse, coverage };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

/// Every knob of every experiment. Only the sections relevant to `experiment`
/// are written to a snapshot or read from a file.
struct ExperimentConfig {
    Experiment experiment = Experiment::forward_logistic;
    std::string label;         ///< output subdirectory; "seed-<seed>" when empty
    std::uint64_t seed = 20240101;
    std::filesystem::path output = "runs";
    bool plots = true;

    // [logistic]
    physics::LogisticProblem logistic;
    std::size_t logistic_points = 150;
    std::size_t logistic_collocation = 200;

    // [buckley_leverett]
    physics::BuckleyLeverettProblem bl;
    std::size_t reference_nx = 800;
    std::size_t reference_nt = 101;
    double bl_data_time = 1.0;
    std::size_t bl_points = 150;
    std::size_t bl_collocation_nt = 50;
    std::size_t bl_collocation_nx = 50;
    std::size_t bl_initial_points = 100;

    // [data]
    double noise = 0.08;
    std::size_t n_train = 25;
    std::size_t n_holdout = 100;
    std::size_t n_test = 25;
    std::size_t n_calibration = 80;
    std::size_t n_validation = 20;

    // [coverage]
    std::vector<double> alphas{0.1, 0.5};
    std::size_t trials = 10000;
    std::filesystem::path input;          ///< prediction file for the coverage command
    std::string truth_column = "truth";
    std::string prediction_column = "prediction";

    // [network]
    std::vector<std::size_t> hidden{10, 10};

    // [training]
    physics::TrainingConfig training;

    // [inverse]
    harness::InverseSetup inverse;
    std::string inverse_mode = "random"; ///< "random" (prior draws) or "equispaced"
    std::size_t datasets = 1000;
    std::size_t equispaced_count = 100;
    std::size_t inverse_calibration = 800;
    std::size_t fresh_tests = 1000;
    double inverse_alpha = 0.2;

    std::string effective_label() const;
    std::filesystem::path run_directory() const;

    /// Checks every size and range the chosen experiment relies on. Throws
    /// ConfigError describing the first problem.
    void validate() const;
};

/// Default settings of an experiment; every other knob keeps its struct default.
ExperimentConfig default_config(Experiment e);

/// INI text with the sections used by `config.experiment`. Floating-point
/// values are written in shortest round-trip form.
std::string to_ini(const ExperimentConfig& config);
/// Starts from default_config of the file's experiment tag and applies every
/// key present. Unknown sections or keys are a ConfigError.
ExperimentConfig from_ini(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::vector<double> parse_double_list(const std::string& text);
std::string format_double_list(const std::vector<double>& values);

} // namespace confpinn::cli
