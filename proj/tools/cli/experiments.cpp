#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "confpinn/conformal.hpp"
#include "confpinn/csv.hpp"
#include "confpinn/datagen.hpp"
#include "confpinn/error.hpp"
#include "confpinn/format.hpp"
#include "confpinn/net.hpp"
#include "confpinn/random.hpp"
#include "svg.hpp"

namespace confpinn::cli {

namespace fs = std::filesystem;

std::string alpha_tag(double alpha) { return format_double(alpha); }

namespace {

constexpr const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

struct RunDirs {
    fs::path root, data, models, reports, plots;
};

RunDirs prepare(const ExperimentConfig& config)
{
    RunDirs d;
    d.root = config.run_directory();
    d.data = d.root / "data";
    d.models = d.root / "models";
    d.reports = d.root / "reports";
    d.plots = d.root / "plots";
    std::error_code ec;
    for (const auto& p : {d.data, d.models, d.reports, d.plots}) {
        fs::create_directories(p, ec);
        if (ec) {
            throw IoError("cannot create " + p.string() + ": " + ec.message());
        }
    }
    std::ofstream snapshot(d.root / "config.ini");
    if (!snapshot) {
        throw IoError("cannot write " + (d.root / "config.ini").string());
    }
    snapshot << to_ini(config);
    return d;
}

void log(const RunOptions& options, const std::string& message)
{
    if (options.log != nullptr) {
        *options.log << message << std::endl;
    }
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    return out;
}

std::vector<std::size_t> layers_for(std::size_t inputs, const std::vector<std::size_t>& hidden)
{
    std::vector<std::size_t> layers{inputs};
    layers.insert(layers.end(), hidden.begin(), hidden.end());
    layers.push_back(1);
    return layers;
}

void write_summary(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& rows)
{
    auto out = open_out(path);
    csv::write_row(out, {"key", "value"});
    for (const auto& [k, v] : rows) {
        csv::write_row(out, {k, v});
    }
}

void write_adam_trace(const fs::path& path, const optim::AdamResult& adam)
{
    auto out = open_out(path);
    csv::write_row(out, {"epoch", "loss", "learning_rate"});
    for (std::size_t e = 0; e < adam.loss_trace.size(); ++e) {
        csv::write_row(out, {std::to_string(e), format_double(adam.loss_trace[e]),
                             format_double(adam.learning_rates[e])});
    }
}

svg::Chart coverage_chart(const harness::CoverageReport& r, const std::string& title)
{
    svg::Chart c;
    c.title = title;
    c.x_label = "trial";
    c.y_label = "coverage";
    svg::Series mean{"running mean", {}, r.running_mean, svg::Series::Style::line, palette[0]};
    svg::Series theory{"theoretical", {}, {}, svg::Series::Style::dashed, palette[3]};
    for (std::size_t t = 0; t < r.trials(); ++t) {
        mean.x.push_back(static_cast<double>(t + 1));
    }
    theory.x = {1.0, static_cast<double>(std::max<std::size_t>(r.trials(), 2))};
    theory.y = {r.theoretical, r.theoretical};
    c.series = {mean, theory};
    return c;
}

/// Everything the two forward experiments share once the dataset exists.
struct ForwardInputs {
    const ExperimentConfig* config = nullptr;
    datagen::Dataset dataset;           ///< observations (possibly noisy)
    std::vector<double> reference;      ///< noise-free values at the dataset inputs
    std::size_t plot_coordinate = 0;    ///< input column used as the plot's x axis
    std::string plot_label;
};

template <class MakeLoss>
ForwardResult run_forward(const ForwardInputs& in, const RunDirs& dirs, const RunOptions& options,
                          MakeLoss make_loss, net::MlpModel& model)
{
    const auto& cfg = *in.config;
    ForwardResult result;
    result.directory = dirs.root;

    datagen::save_dataset(in.dataset, dirs.data / "dataset.csv");
    const auto parts = datagen::split(
        in.dataset, {cfg.n_train, cfg.n_holdout, cfg.n_test, derive_seed(cfg.seed, streams::split, 0)});
    datagen::save_dataset(parts.train, dirs.data / "train.csv");
    datagen::save_dataset(parts.holdout, dirs.data / "holdout.csv");
    datagen::save_dataset(parts.test, dirs.data / "test.csv");

    const auto loss = make_loss(parts.train);
    log(options, "training on " + std::to_string(parts.train.size()) + " points");
    result.training = physics::train(model, *loss, cfg.training);
    net::save_model(model, dirs.models / "pinn.txt");
    write_adam_trace(dirs.reports / "adam_trace.csv", result.training.adam);
    log(options, "final loss " + format_double(result.training.final_loss) + " (" +
                     std::string(optim::to_string(result.training.lbfgs.termination)) + ")");

    const auto& scaling = loss->scaling();
    const auto prediction = physics::predict(model, scaling, in.dataset.inputs);
    const auto holdout_pred = physics::predict(model, scaling, parts.holdout.inputs);

    // Which part each dataset row belongs to.
    std::vector<std::string> set_of(in.dataset.size());
    for (auto i : parts.train_indices) set_of[i] = "train";
    for (auto i : parts.holdout_indices) set_of[i] = "holdout";
    for (auto i : parts.test_indices) set_of[i] = "test";

    auto header = in.dataset.input_names;
    {
        auto out = open_out(dirs.reports / "fit.csv");
        auto h = header;
        h.insert(h.end(), {"truth", "reference", "prediction", "set"});
        csv::write_row(out, h);
        for (std::size_t i = 0; i < in.dataset.size(); ++i) {
            std::vector<std::string> row;
            for (double v : in.dataset.inputs.point(i)) row.push_back(format_double(v));
            row.insert(row.end(), {format_double(in.dataset.observations[i]), format_double(in.reference[i]),
                                   format_double(prediction[i]), set_of[i]});
            csv::write_row(out, row);
        }
    }
    {
        auto out = open_out(dirs.reports / "holdout_predictions.csv");
        auto h = header;
        h.insert(h.end(), {"truth", "prediction"});
        csv::write_row(out, h);
        for (std::size_t i = 0; i < parts.holdout.size(); ++i) {
            std::vector<std::string> row;
            for (double v : parts.holdout.inputs.point(i)) row.push_back(format_double(v));
            row.insert(row.end(), {format_double(parts.holdout.observations[i]), format_double(holdout_pred[i])});
            csv::write_row(out, row);
        }
    }

    // One fixed calibration split gives the intervals that are plotted.
    const auto cal = datagen::split_holdout(parts.holdout, cfg.n_calibration, cfg.n_validation,
                                            derive_seed(cfg.seed, streams::holdout_split, 0));
    std::vector<double> cal_pred(cal.calibration_indices.size());
    for (std::size_t j = 0; j < cal_pred.size(); ++j) {
        cal_pred[j] = holdout_pred[cal.calibration_indices[j]];
    }
    const auto scores = conformal::nonconformity_scores(cal_pred, cal.calibration.observations);

    auto intervals = open_out(dirs.reports / "intervals.csv");
    {
        std::vector<std::string> h{"alpha"};
        h.insert(h.end(), header.begin(), header.end());
        h.insert(h.end(), {"truth", "prediction", "half_width", "lower", "upper", "covered", "set"});
        csv::write_row(intervals, h);
    }

    svg::Chart fit;
    fit.title = "Surrogate fit and conformal intervals";
    fit.x_label = in.plot_label;
    fit.y_label = in.dataset.observation_name;
    std::vector<std::size_t> order(in.dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return in.dataset.inputs(a, in.plot_coordinate) < in.dataset.inputs(b, in.plot_coordinate);
    });
    std::vector<double> px, py, pref, pobs;
    for (auto i : order) {
        px.push_back(in.dataset.inputs(i, in.plot_coordinate));
        py.push_back(prediction[i]);
        pref.push_back(in.reference[i]);
        pobs.push_back(in.dataset.observations[i]);
    }

    std::vector<std::pair<std::string, std::string>> summary{
        {"final_loss", format_double(result.training.final_loss)},
        {"data_loss", format_double(result.training.final_breakdown.data)},
        {"physics_loss", format_double(result.training.final_breakdown.physics)},
        {"initial_condition_loss", format_double(result.training.final_breakdown.initial)},
        {"termination", std::string(optim::to_string(result.training.lbfgs.termination))},
        {"lbfgs_iterations", std::to_string(result.training.lbfgs.iterations)},
    };

    for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
        const double alpha = cfg.alphas[a];
        const double q = conformal::conformal_quantile(scores, alpha);
        result.alphas.push_back(alpha);
        result.half_widths.push_back(q);
        for (std::size_t i = 0; i < in.dataset.size(); ++i) {
            const auto iv = conformal::make_interval(prediction[i], q, alpha);
            std::vector<std::string> row{format_double(alpha)};
            for (double v : in.dataset.inputs.point(i)) row.push_back(format_double(v));
            row.insert(row.end(), {format_double(in.dataset.observations[i]), format_double(prediction[i]),
                                   format_double(q), format_double(iv.lower()), format_double(iv.upper()),
                                   conformal::covered(iv, in.dataset.observations[i]) ? "1" : "0", set_of[i]});
            csv::write_row(intervals, row);
        }
        svg::Band band;
        band.name = format_double(100.0 * (1.0 - alpha)) + "% interval";
        band.color = palette[(a + 1) % 5];
        band.opacity = 0.15 + 0.1 * static_cast<double>(a);
        for (std::size_t k = 0; k < px.size(); ++k) {
            band.x.push_back(px[k]);
            band.lower.push_back(py[k] - q);
            band.upper.push_back(py[k] + q);
        }
        fit.bands.push_back(band);

        log(options, "alpha " + format_double(alpha) + ": half-width " + format_double(q) + ", " +
                         std::to_string(cfg.trials) + " coverage trials");
        auto report = harness::repeated_split_coverage(holdout_pred, parts.holdout.observations,
                                                       cfg.n_calibration, cfg.n_validation, alpha, cfg.trials,
                                                       derive_seed(cfg.seed, streams::coverage_trial, a),
                                                       options.threads);
        harness::write_report(dirs.reports / ("coverage_alpha_" + alpha_tag(alpha) + ".csv"), report);
        if (cfg.plots) {
            svg::write(dirs.plots / ("coverage_alpha_" + alpha_tag(alpha) + ".svg"),
                       coverage_chart(report, "Running coverage, alpha = " + format_double(alpha)));
        }
        summary.emplace_back("half_width_alpha_" + alpha_tag(alpha), format_double(q));
        summary.emplace_back("coverage_alpha_" + alpha_tag(alpha), format_double(report.final_mean()));
        summary.emplace_back("theoretical_alpha_" + alpha_tag(alpha), format_double(report.theoretical));
        log(options, "  mean coverage " + format_double(report.final_mean()) + " (exact " +
                         format_double(report.theoretical) + ")");
        result.coverage.push_back(std::move(report));
    }

    fit.series = {
        {"observations", px, pobs, svg::Series::Style::points, "#555555"},
        {"reference", px, pref, svg::Series::Style::dashed, palette[3]},
        {"prediction", px, py, svg::Series::Style::line, palette[0]},
    };
    if (cfg.plots) {
        svg::write(dirs.plots / "fit.svg", fit);
    }
    write_summary(dirs.reports / "summary.csv", summary);
    return result;
}

} // namespace

ForwardResult run_forward_logistic(const ExperimentConfig& config, const RunOptions& options)
{
    config.validate();
    const auto dirs = prepare(config);
    const auto& problem = config.logistic;

    ForwardInputs in;
    in.config = &config;
    const auto t = datagen::linspace(problem.t_domain.lower, problem.t_domain.upper, config.logistic_points);
    const auto clean = datagen::logistic_dataset(problem.beta, problem.n0, t);
    in.reference = clean.observations;
    in.dataset = datagen::add_noise(clean, config.noise, derive_seed(config.seed, streams::noise, 0));
    in.plot_label = "t";

    const auto grid = physics::logistic_grid(problem, config.logistic_collocation);
    auto model = net::init_model(layers_for(1, config.hidden), derive_seed(config.seed, streams::model_init, 0),
                                 false);
    return run_forward(
        in, dirs, options,
        [&](const datagen::Dataset& train) { return physics::make_logistic_loss(problem, train, grid); },
        model);
}

ForwardResult run_forward_bl(const ExperimentConfig& config, const RunOptions& options)
{
    config.validate();
    const auto dirs = prepare(config);
    const auto& problem = config.bl;

    log(options, "reference solution on " + std::to_string(config.reference_nx) + " cells");
    const auto ref = datagen::solve_bl_reference(problem, config.reference_nx, config.reference_nt);
    {
        auto out = open_out(dirs.data / "reference.csv");
        csv::write_row(out, {"t", "x", "u"});
        for (std::size_t k = 0; k < ref.t.size(); ++k) {
            const auto row = ref.snapshot(k);
            for (std::size_t i = 0; i < ref.x.size(); ++i) {
                csv::write_row(out, {format_double(ref.t[k]), format_double(ref.x[i]), format_double(row[i])});
            }
        }
    }

    ForwardInputs in;
    in.config = &config;
    const auto clean = datagen::bl_dataset(ref, problem, config.bl_data_time, config.bl_points);
    in.reference = clean.observations;
    in.dataset = datagen::add_noise(clean, config.noise, derive_seed(config.seed, streams::noise, 0));
    in.plot_coordinate = 1;
    in.plot_label = "x (t = " + format_double(config.bl_data_time) + ")";

    const auto grid = physics::bl_grid(problem, config.bl_collocation_nt, config.bl_collocation_nx,
                                       config.bl_initial_points);
    auto model = net::init_model(layers_for(2, config.hidden), derive_seed(config.seed, streams::model_init, 0),
                                 false);
    auto result = run_forward(
        in, dirs, options,
        [&](const datagen::Dataset& train) { return physics::make_bl_loss(problem, train, grid); }, model);

    // Misfit against the reference at every cell centre on the data line.
    net::Batch cells(2);
    std::vector<double> ref_u(ref.x.size());
    for (std::size_t i = 0; i < ref.x.size(); ++i) {
        const double p[2] = {config.bl_data_time, ref.x[i]};
        cells.push_back(p);
        ref_u[i] = ref.sample(config.bl_data_time, ref.x[i]);
    }
    const auto pred = physics::predict(model, physics::scaling_for(problem), cells);
    std::vector<double> err(ref.x.size());
    {
        auto out = open_out(dirs.reports / "reference_error.csv");
        csv::write_row(out, {"x", "reference", "prediction", "abs_error"});
        for (std::size_t i = 0; i < ref.x.size(); ++i) {
            err[i] = std::abs(pred[i] - ref_u[i]);
            csv::write_row(out, {format_double(ref.x[i]), format_double(ref_u[i]), format_double(pred[i]),
                                 format_double(err[i])});
        }
    }
    auto sorted = err;
    std::sort(sorted.begin(), sorted.end());
    result.max_error = sorted.back();
    const auto n = sorted.size();
    result.median_error = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    {
        std::ofstream out(dirs.reports / "summary.csv", std::ios::app);
        csv::write_row(out, {"max_reference_error", format_double(result.max_error)});
        csv::write_row(out, {"median_reference_error", format_double(result.median_error)});
    }
    log(options, "reference error: max " + format_double(result.max_error) + ", median " +
                     format_double(result.median_error));
    if (config.plots) {
        svg::Chart c;
        c.title = "Surrogate against the finite-volume reference";
        c.x_label = "x";
        c.y_label = "u";
        c.series = {{"reference", ref.x, ref_u, svg::Series::Style::dashed, palette[3]},
                    {"prediction", ref.x, pred, svg::Series::Style::line, palette[0]}};
        svg::write(dirs.plots / "reference.svg", c);
    }
    return result;
}

InverseResult run_inverse(const ExperimentConfig& config, const RunOptions& options)
{
    config.validate();
    const auto dirs = prepare(config);
    InverseResult result;
    result.directory = dirs.root;

    auto setup = config.inverse;
    setup.layers = layers_for(1, config.hidden);
    setup.training = config.training;
    setup.validate();
    const auto models = dirs.models;
    const harness::Estimator estimator = [setup, models](double beta, std::uint64_t seed) {
        net::MlpModel model;
        auto record = harness::make_inverse_record(setup, beta, seed, &model);
        net::save_model(model, models / ("model-" + std::to_string(seed) + ".txt"));
        return record;
    };

    harness::RecordWriter writer(dirs.data / "records.csv");
    std::size_t done = 0;
    const auto total = config.inverse_mode == "random" ? config.datasets : config.equispaced_count;
    const harness::RecordSink sink = [&](std::size_t, const harness::InverseRecord& r) {
        writer.write(r);
        if (++done % 50 == 0 || done == total) {
            log(options, "records: " + std::to_string(done) + "/" + std::to_string(total));
        }
    };
    const auto record_seed = derive_seed(config.seed, streams::inverse_record, 0);
    if (config.inverse_mode == "random") {
        result.records = harness::run_inverse_pipeline(setup.prior, config.datasets, record_seed, estimator,
                                                       sink, options.threads);
    }
    else {
        const auto betas = harness::equispaced_betas(config.equispaced_count, setup.prior.upper);
        result.records = harness::run_inverse_pipeline(betas, record_seed, estimator, sink, options.threads);
    }
    {
        auto out = open_out(dirs.reports / "scatter.csv");
        csv::write_row(out, {"beta_true", "beta_hat"});
        for (const auto& r : result.records) {
            csv::write_row(out, {format_double(r.beta_true), format_double(r.beta_hat)});
        }
    }
    std::vector<std::pair<std::string, std::string>> summary{
        {"records", std::to_string(result.records.size())},
        {"numeric_failures",
         std::to_string(std::count_if(result.records.begin(), result.records.end(),
                                      [](const auto& r) { return r.termination == "numeric_failure"; }))},
    };

    if (config.inverse_mode == "random") {
        const auto theoretical = conformal::theoretical_coverage(config.inverse_calibration, config.inverse_alpha);
        auto out = open_out(dirs.reports / "fresh_test.csv");
        csv::write_row(out, {"trial", "coverage", "running_mean", "theoretical"});
        double sum = 0.0;
        std::size_t tests_done = 0;
        const harness::TrialSink trial_sink = [&](std::size_t i, double c) {
            sum += c;
            csv::write_row(out, {std::to_string(i + 1), format_double(c),
                                 format_double(sum / static_cast<double>(i + 1)), format_double(theoretical)});
            out.flush();
            if (++tests_done % 50 == 0 || tests_done == config.fresh_tests) {
                log(options, "fresh tests: " + std::to_string(tests_done) + "/" +
                                 std::to_string(config.fresh_tests));
            }
        };
        result.fresh_test = harness::inverse_fresh_test_coverage(
            result.records, config.inverse_calibration, config.inverse_alpha, config.fresh_tests,
            derive_seed(config.seed, streams::inverse_test, 0), setup.prior, estimator, trial_sink,
            options.threads);
        summary.emplace_back("fresh_test_coverage", format_double(result.fresh_test->final_mean()));
        summary.emplace_back("fresh_test_theoretical", format_double(result.fresh_test->theoretical));
        log(options, "fresh-test coverage " + format_double(result.fresh_test->final_mean()) + " (exact " +
                         format_double(result.fresh_test->theoretical) + ")");
        if (config.plots) {
            svg::write(dirs.plots / "fresh_test.svg", coverage_chart(*result.fresh_test, "Fresh-test coverage"));
        }
    }

    for (std::size_t a = 0; a < config.alphas.size(); ++a) {
        const double alpha = config.alphas[a];
        auto report = harness::inverse_repeated_split_coverage(
            result.records, config.n_calibration, config.n_validation, alpha, config.trials,
            derive_seed(config.seed, streams::coverage_trial, a), options.threads);
        harness::write_report(dirs.reports / ("coverage_alpha_" + alpha_tag(alpha) + ".csv"), report);
        summary.emplace_back("coverage_alpha_" + alpha_tag(alpha), format_double(report.final_mean()));
        summary.emplace_back("theoretical_alpha_" + alpha_tag(alpha), format_double(report.theoretical));
        if (config.plots) {
            svg::write(dirs.plots / ("coverage_alpha_" + alpha_tag(alpha) + ".svg"),
                       coverage_chart(report, "Repeated-split coverage, alpha = " + format_double(alpha)));
        }
        result.repeated_split.push_back(std::move(report));
    }

    if (config.plots) {
        svg::Chart c;
        c.title = "Estimated against true growth rate";
        c.x_label = "true beta";
        c.y_label = "estimated beta";
        svg::Series pts{"records", {}, {}, svg::Series::Style::points, palette[0]};
        for (const auto& r : result.records) {
            pts.x.push_back(r.beta_true);
            pts.y.push_back(r.beta_hat);
        }
        c.series = {pts, {"identity", {setup.prior.lower, setup.prior.upper},
                          {setup.prior.lower, setup.prior.upper}, svg::Series::Style::dashed, palette[3]}};
        svg::write(dirs.plots / "scatter.svg", c);
    }
    write_summary(dirs.reports / "summary.csv", summary);
    return result;
}

CoverageResult run_coverage(const ExperimentConfig& config, const RunOptions& options)
{
    config.validate();
    std::ifstream in(config.input);
    if (!in) {
        throw IoError("cannot open " + config.input.string());
    }
    const auto table = csv::read(in);
    const auto truths = table.numbers(config.truth_column);
    const auto predictions = table.numbers(config.prediction_column);
    auto n_c = config.n_calibration;
    auto n_v = config.n_validation;
    if (n_c == 0 && n_v == 0) {
        n_c = truths.size() * 4 / 5;
        n_v = truths.size() - n_c;
    }
    if (n_c + n_v != truths.size() || n_c == 0 || n_v == 0) {
        throw ConfigError("coverage: n_c = " + std::to_string(n_c) + " and n_v = " + std::to_string(n_v) +
                          " do not split the " + std::to_string(truths.size()) + " rows of " +
                          config.input.string());
    }

    const auto dirs = prepare(config);
    CoverageResult result;
    result.directory = dirs.root;
    for (std::size_t a = 0; a < config.alphas.size(); ++a) {
        const double alpha = config.alphas[a];
        auto report = harness::repeated_split_coverage(predictions, truths, n_c, n_v, alpha, config.trials,
                                                       derive_seed(config.seed, streams::coverage_trial, a),
                                                       options.threads);
        harness::write_report(dirs.reports / ("coverage_alpha_" + alpha_tag(alpha) + ".csv"), report);
        if (config.plots) {
            svg::write(dirs.plots / ("coverage_alpha_" + alpha_tag(alpha) + ".svg"),
                       coverage_chart(report, "Running coverage, alpha = " + format_double(alpha)));
        }
        log(options, "alpha " + format_double(alpha) + ": mean coverage " + format_double(report.final_mean()) +
                         " (exact " + format_double(report.theoretical) + ")");
        result.reports.push_back(std::move(report));
    }
    return result;
}

void run(const ExperimentConfig& config, const RunOptions& options)
{
    switch (config.experiment) {
    case Experiment::forward_logistic:
        run_forward_logistic(config, options);
        break;
    case Experiment::forward_bl:
        run_forward_bl(config, options);
        break;
    case Experiment::inverse:
        run_inverse(config, options);
        break;
    case Experiment::coverage:
        run_coverage(config, options);
        break;
    }
}

} // namespace confpinn::cli
