#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "config.hpp"
#include "confpinn/error.hpp"
#include "experiments.hpp"

namespace {

using namespace confpinn;
using namespace confpinn::cli;

enum ExitCode { ok = 0, usage = 1, config_error = 2, io_error = 3, numeric_error = 4, internal = 5 };

/// Flags shared by every subcommand; unset flags leave the config alone.
struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> label;
    std::optional<double> noise;
    std::optional<std::string> alphas;
    std::optional<std::size_t> trials;
    bool no_plots = false;
    std::size_t threads = 0;
    bool quiet = false;

    // inverse
    std::optional<std::size_t> datasets;
    std::optional<std::size_t> tests;
    std::optional<std::size_t> n_calibration;
    std::optional<std::size_t> n_validation;
    bool equispaced = false;
    bool reduced = false;

    // coverage
    std::string input;
    std::optional<std::string> truth_column;
    std::optional<std::string> prediction_column;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config_path, "INI config file (defaults when omitted)");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--out", o.out, "Output root directory");
    cmd->add_option("--label", o.label, "Run subdirectory name (default seed-<seed>)");
    cmd->add_option("--alpha", o.alphas, "Comma-separated miscoverage levels");
    cmd->add_option("--trials", o.trials, "Repeated-split coverage trials");
    cmd->add_flag("--no-plots", o.no_plots, "Skip SVG output");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores; never changes results)");
    cmd->add_flag("--quiet", o.quiet, "No progress messages");
}

ExperimentConfig build_config(Experiment e, const Overrides& o)
{
    auto c = o.config_path.empty() ? default_config(e) : load_config(o.config_path);
    if (c.experiment != e) {
        throw ConfigError("config file is for '" + to_string(c.experiment) + "', not '" + to_string(e) + "'");
    }
    if (o.seed) c.seed = *o.seed;
    if (o.out) c.output = *o.out;
    if (o.label) c.label = *o.label;
    if (o.alphas) c.alphas = parse_double_list(*o.alphas);
    if (o.trials) c.trials = *o.trials;
    if (o.no_plots) c.plots = false;
    if (o.noise) {
        c.noise = *o.noise;
        c.inverse.noise_sigma = *o.noise;
    }
    if (e == Experiment::inverse) {
        if (o.reduced) {
            c.datasets = 200;
            c.fresh_tests = 100;
            c.inverse_calibration = 160;
            c.n_calibration = 160;
            c.n_validation = 40;
        }
        if (o.equispaced) {
            c.inverse_mode = "equispaced";
            c.n_calibration = c.equispaced_count * 4 / 5;
            c.n_validation = c.equispaced_count - c.n_calibration;
        }
        if (o.datasets) {
            c.datasets = *o.datasets;
            if (!o.n_calibration && !o.n_validation && c.inverse_mode == "random") {
                c.n_calibration = c.datasets * 4 / 5;
                c.n_validation = c.datasets - c.n_calibration;
                c.inverse_calibration = std::min(c.inverse_calibration, c.n_calibration);
            }
        }
        if (o.tests) c.fresh_tests = *o.tests;
    }
    if (o.n_calibration) {
        c.n_calibration = *o.n_calibration;
        if (e == Experiment::inverse) c.inverse_calibration = *o.n_calibration;
    }
    if (o.n_validation) c.n_validation = *o.n_validation;
    if (e == Experiment::coverage) {
        if (!o.input.empty()) c.input = o.input;
        if (o.truth_column) c.truth_column = *o.truth_column;
        if (o.prediction_column) c.prediction_column = *o.prediction_column;
    }
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Conformal intervals for physics-informed neural network surrogates"};
    app.require_subcommand(1);
    Overrides o;

    auto* fl = app.add_subcommand("forward-logistic", "Logistic-growth surrogate, intervals and coverage");
    add_common(fl, o);
    fl->add_option("--noise", o.noise, "Observation noise sigma");

    auto* fb = app.add_subcommand("forward-bl", "Buckley-Leverett surrogate, intervals and coverage");
    add_common(fb, o);
    fb->add_option("--noise", o.noise, "Observation noise sigma");

    auto* inv = app.add_subcommand("inverse", "Growth-rate estimation records and coverage");
    add_common(inv, o);
    inv->add_option("--noise", o.noise, "Observation noise sigma");
    inv->add_option("--datasets", o.datasets, "Number of records");
    inv->add_option("--tests", o.tests, "Fresh test draws");
    inv->add_option("--n-calibration", o.n_calibration, "Calibration size");
    inv->add_option("--n-validation", o.n_validation, "Validation size for repeated splits");
    inv->add_flag("--equispaced", o.equispaced, "Equispaced growth rates instead of prior draws");
    inv->add_flag("--reduced", o.reduced, "200 records, 100 fresh tests, n_c = 160");

    auto* cov = app.add_subcommand("coverage", "Coverage analysis of an existing prediction file");
    add_common(cov, o);
    cov->add_option("predictions", o.input, "CSV with truth and prediction columns");
    cov->add_option("--truth-column", o.truth_column, "Column holding the true values");
    cov->add_option("--prediction-column", o.prediction_column, "Column holding the predictions");
    cov->add_option("--n-calibration", o.n_calibration, "Calibration size (default 80% of rows)");
    cov->add_option("--n-validation", o.n_validation, "Validation size");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    Experiment e = Experiment::forward_logistic;
    if (inv->parsed()) e = Experiment::inverse;
    else if (fb->parsed()) e = Experiment::forward_bl;
    else if (cov->parsed()) e = Experiment::coverage;

    try {
        const auto config = build_config(e, o);
        RunOptions options;
        options.threads = o.threads;
        options.log = o.quiet ? nullptr : &std::cerr;
        run(config, options);
        if (!o.quiet) {
            std::cerr << "outputs in " << config.run_directory().string() << '\n';
        }
        return ok;
    }
    catch (const ConfigError& err) {
        std::cerr << "configuration error: " << err.what() << '\n';
        return config_error;
    }
    catch (const ParseError& err) {
        std::cerr << "parse error: " << err.what() << '\n';
        return io_error;
    }
    catch (const IoError& err) {
        std::cerr << "i/o error: " << err.what() << '\n';
        return io_error;
    }
    catch (const NumericError& err) {
        std::cerr << "numeric error: " << err.what() << '\n';
        return numeric_error;
    }
    catch (const ShapeError& err) {
        std::cerr << "shape error: " << err.what() << '\n';
        return config_error;
    }
    catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return internal;
    }
}
