// Acceptance checks C1..C8. Prints one PASS/FAIL line per criterion and
// exits nonzero when any line fails.
//
//   confpinn_acceptance [--work DIR] [--only C1,C3,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "experiments.hpp"
#include "confpinn/conformal.hpp"
#include "confpinn/datagen.hpp"
#include "confpinn/error.hpp"
#include "confpinn/harness.hpp"
#include "confpinn/net.hpp"
#include "confpinn/physics.hpp"
#include "confpinn/random.hpp"

namespace fs = std::filesystem;
using namespace confpinn;
using cli::Experiment;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args)
{
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, format, args...);
    return buffer;
}

class Clock {
  public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::size_t alpha_index(const std::vector<double>& alphas, double alpha)
{
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (std::abs(alphas[i] - alpha) < 1e-12) {
            return i;
        }
    }
    throw ConfigError("alpha " + std::to_string(alpha) + " not configured");
}

/// Shared state: later criteria reuse the runs of earlier ones.
struct Workspace {
    fs::path root;
    cli::RunOptions options;
    std::optional<cli::ForwardResult> logistic;
    std::optional<cli::ForwardResult> bl;
    std::optional<cli::InverseResult> inverse_reduced;
    std::optional<cli::CoverageResult> coverage;

    cli::ExperimentConfig config(Experiment e, const std::string& label) const
    {
        auto c = cli::default_config(e);
        c.output = root / "runs";
        c.label = label;
        return c;
    }

    const cli::ForwardResult& logistic_run()
    {
        if (!logistic) {
            logistic = cli::run_forward_logistic(config(Experiment::forward_logistic, "noisy"), options);
        }
        return *logistic;
    }

    const cli::ForwardResult& bl_run()
    {
        if (!bl) {
            bl = cli::run_forward_bl(config(Experiment::forward_bl, "default"), options);
        }
        return *bl;
    }

    static void make_reduced(cli::ExperimentConfig& c)
    {
        c.datasets = 200;
        c.fresh_tests = 100;
        c.inverse_calibration = 160;
        c.n_calibration = 160;
        c.n_validation = 40;
    }

    const cli::InverseResult& inverse_reduced_run()
    {
        if (!inverse_reduced) {
            auto c = config(Experiment::inverse, "reduced");
            make_reduced(c);
            inverse_reduced = cli::run_inverse(c, options);
        }
        return *inverse_reduced;
    }

    const cli::CoverageResult& coverage_run()
    {
        if (!coverage) {
            auto c = config(Experiment::coverage, "holdout");
            c.input = logistic_run().directory / "reports" / "holdout_predictions.csv";
            coverage = cli::run_coverage(c, options);
        }
        return *coverage;
    }
};

Outcome coverage_within(const harness::CoverageReport& r, double target, double tolerance)
{
    const double got = r.final_mean();
    Outcome o;
    o.pass = std::abs(got - target) <= tolerance && std::abs(r.theoretical - target) < 1e-12;
    o.detail = fmt("alpha=%g n_c=%zu coverage=%.5f target=%.5f tol=%.3f", r.alpha,
                   r.n_calibration, got, target, tolerance);
    return o;
}

Outcome c1(Workspace& w)
{
    Clock clock;
    const auto& r = w.logistic_run();
    auto o = coverage_within(r.coverage[alpha_index(r.alphas, 0.1)], 73.0 / 81.0, 0.01);
    o.detail += fmt(" trials=%zu time=%.1fs", r.coverage.front().trials(), clock.seconds());
    return o;
}

Outcome c2(Workspace& w)
{
    Clock clock;
    const auto& r = w.bl_run();
    Outcome o{true, {}};
    for (const auto& report : r.coverage) {
        const auto part = coverage_within(report, report.theoretical, 0.015);
        o.pass = o.pass && part.pass;
        o.detail += part.detail + "; ";
    }
    const bool misfit = r.max_error > 10.0 * r.median_error;
    o.pass = o.pass && misfit;
    o.detail += fmt("max_error=%.4g median_error=%.4g ratio=%.4g time=%.1fs", r.max_error,
                    r.median_error, r.max_error / r.median_error, clock.seconds());
    return o;
}

Outcome fresh_test_outcome(const cli::InverseResult& r, double tolerance, double seconds)
{
    Outcome o;
    if (!r.fresh_test) {
        return {false, "no fresh-test report"};
    }
    const auto& f = *r.fresh_test;
    const double target = conformal::theoretical_coverage(f.n_calibration, f.alpha);
    o.pass = std::abs(f.final_mean() - target) <= tolerance;
    o.detail = fmt("records=%zu n_c=%zu alpha=%g tests=%zu coverage=%.5f target=%.5f tol=%.2f "
                   "time=%.1fs",
                   r.records.size(), f.n_calibration, f.alpha, f.trials(), f.final_mean(), target,
                   tolerance, seconds);
    return o;
}

Outcome c3(Workspace& w)
{
    Clock clock;
    const auto r = cli::run_inverse(w.config(Experiment::inverse, "full"), w.options);
    auto o = fresh_test_outcome(r, 0.03, clock.seconds());
    o.pass = o.pass && std::abs(conformal::theoretical_coverage(800, 0.2) - 641.0 / 801.0) < 1e-12;
    return o;
}

Outcome c3_reduced(Workspace& w)
{
    Clock clock;
    const auto& r = w.inverse_reduced_run();
    const double seconds = clock.seconds();
    auto o = fresh_test_outcome(r, 0.06, seconds);
    o.pass = o.pass && seconds < 600.0;
    return o;
}

Outcome c4(Workspace& w)
{
    Clock clock;
    auto c = w.config(Experiment::inverse, "noisy");
    c.inverse.noise_sigma = 0.03;
    const auto r = cli::run_inverse(c, w.options);
    return fresh_test_outcome(r, 0.03, clock.seconds());
}

// ------------------------------------------------------------------- C5 ---

bool close_rel(double a, double b, double rel, double abs_floor)
{
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

/// Checks every parameter of one model; returns the number of mismatches.
std::size_t gradient_mismatches(const physics::PinnLoss& loss, net::MlpModel m,
                                std::size_t& checked)
{
    constexpr double h = 1e-5;
    std::vector<double> grad(m.parameter_count());
    loss.evaluate(m, grad);
    std::size_t bad = 0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double saved = m.parameters()[i];
        m.parameters()[i] = saved + h;
        const double up = loss.evaluate(m).total;
        m.parameters()[i] = saved - h;
        const double down = loss.evaluate(m).total;
        m.parameters()[i] = saved;
        bad += close_rel(grad[i], (up - down) / (2 * h), 1e-4, 1e-7) ? 0 : 1;
        ++checked;
    }
    return bad;
}

Outcome c5a()
{
    std::size_t instances = 0;
    std::size_t checked = 0;
    std::size_t bad = 0;
    Rng rng(51);
    std::uniform_real_distribution<double> beta(0.0, 0.5);

    physics::LogisticProblem inverse;
    inverse.inverse_mode = true;
    inverse.t_domain = {0.0, 30.0};
    const auto inverse_loss = physics::make_logistic_loss(
        inverse, datagen::logistic_dataset(0.3, 0.1, datagen::linspace(0.0, 30.0, 10)),
        physics::logistic_grid(inverse, 40));
    for (int k = 0; k < 60; ++k, ++instances) {
        auto m = net::init_model({1, 10, 10, 1}, 1000 + k, true);
        m.set_beta(beta(rng));
        bad += gradient_mismatches(*inverse_loss, m, checked);
    }

    physics::LogisticProblem forward;
    const auto forward_data = datagen::add_noise(
        datagen::logistic_dataset(0.05, 0.1, datagen::linspace(0.0, 150.0, 25)), 0.08, 3);
    const auto forward_loss =
        physics::make_logistic_loss(forward, forward_data, physics::logistic_grid(forward, 50));
    for (int k = 0; k < 25; ++k, ++instances) {
        bad += gradient_mismatches(*forward_loss, net::init_model({1, 10, 10, 1}, 2000 + k, false),
                                   checked);
    }

    physics::BuckleyLeverettProblem bl;
    const auto ref = datagen::solve_bl_reference(bl, 200, 21);
    const auto bl_loss = physics::make_bl_loss(bl, datagen::bl_dataset(ref, bl, 1.0, 12),
                                               physics::bl_grid(bl, 6, 6, 10));
    for (int k = 0; k < 20; ++k, ++instances) {
        bad += gradient_mismatches(*bl_loss, net::init_model({2, 6, 6, 1}, 3000 + k, false),
                                   checked);
    }
    return {bad == 0 && instances >= 100,
            fmt("instances=%zu partials=%zu mismatches=%zu", instances, checked, bad)};
}

Outcome c5b()
{
    const auto t = datagen::linspace(0.0, 150.0, 150);
    const auto n = datagen::solve_ode_rk4(0.05, 0.1, t);
    double sup = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sup = std::max(sup, std::abs(n[i] - datagen::logistic_analytic(t[i], 0.05, 0.1)));
    }
    return {sup <= 1e-8, fmt("sup_error=%.3g", sup)};
}

Outcome c5c()
{
    Rng rng(53);
    std::uniform_int_distribution<std::size_t> size(1, 400);
    std::uniform_int_distribution<int> alpha_pick(1, 99);
    std::exponential_distribution<double> score(1.0);
    std::size_t mismatches = 0;
    for (int set = 0; set < 1000; ++set) {
        const std::size_t n = size(rng);
        std::vector<double> s(n);
        for (auto& v : s) {
            // Rounded so that ties occur.
            v = std::round(score(rng) * 20.0) / 20.0;
        }
        const int alpha_percent = alpha_pick(rng);
        const double alpha = alpha_percent / 100.0;
        // k = ceil((100 - alpha_percent) * (n + 1) / 100) in exact integers.
        const std::size_t k = ((100 - alpha_percent) * (n + 1) + 99) / 100;
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] < s[b]; });
        const double expected = k > n ? INFINITY : s[order[k - 1]];
        const double got = conformal::conformal_quantile(conformal::ScoreSet(s), alpha);
        mismatches += got == expected ? 0 : 1;
    }
    return {mismatches == 0, fmt("sets=1000 mismatches=%zu", mismatches)};
}

/// Marginal coverage of the split-conformal interval with fresh continuous
/// i.i.d. scores for every trial.
std::vector<double> mc_coverage(std::size_t n, const std::vector<double>& alphas,
                                std::size_t trials, std::uint64_t seed)
{
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::size_t> hits(alphas.size(), 0);
    std::vector<double> truths(n);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& v : truths) {
            v = noise(rng);
        }
        const std::vector<double> zeros(n, 0.0);
        const auto scores = conformal::nonconformity_scores(zeros, truths);
        const double test = noise(rng);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const auto interval =
                conformal::make_interval(0.0, conformal::conformal_quantile(scores, alphas[a]), alphas[a]);
            hits[a] += conformal::covered(interval, test) ? 1 : 0;
        }
    }
    std::vector<double> out;
    for (auto h : hits) {
        out.push_back(static_cast<double>(h) / static_cast<double>(trials));
    }
    return out;
}

Outcome c5d()
{
    Outcome o{true, {}};
    const std::vector<std::pair<std::size_t, double>> cases{{80, 0.1}, {20, 0.2}, {9, 0.5}, {800, 0.2}};
    std::uint64_t seed = 54;
    for (const auto& [n, alpha] : cases) {
        const double mc = mc_coverage(n, {alpha}, 100000, seed++).front();
        const double exact = conformal::theoretical_coverage(n, alpha);
        o.pass = o.pass && std::abs(mc - exact) <= 0.005;
        o.detail += fmt("n=%zu alpha=%g mc=%.5f exact=%.5f; ", n, alpha, mc, exact);
    }
    o.detail += "trials=100000 tol=0.005";
    return o;
}

Outcome c6()
{
    const std::vector<double> alphas{0.05, 0.1, 0.2, 0.5};
    constexpr double eps = 0.01;
    Outcome o{true, {}};
    std::uint64_t seed = 60;
    for (std::size_t n : {20u, 80u, 200u, 800u}) {
        const auto mc = mc_coverage(n, alphas, 100000, seed++);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const double lo = 1.0 - alphas[a] - eps;
            const double hi = 1.0 - alphas[a] + 1.0 / static_cast<double>(n + 1) + eps;
            const bool ok = mc[a] >= lo && mc[a] <= hi;
            o.pass = o.pass && ok;
            if (!ok) {
                o.detail += fmt("n_c=%zu alpha=%g coverage=%.5f outside [%.5f, %.5f]; ", n,
                                alphas[a], mc[a], lo, hi);
            }
        }
    }
    o.detail += "16 cases, 100000 trials each, eps=0.01";
    return o;
}

Outcome c7(Workspace& w)
{
    const auto& noisy = w.logistic_run();
    auto c = w.config(Experiment::forward_logistic, "noiseless");
    c.noise = 0.0;
    const auto clean = cli::run_forward_logistic(c, w.options);
    const double hw_noisy = noisy.half_widths[alpha_index(noisy.alphas, 0.1)];
    const double hw_clean = clean.half_widths[alpha_index(clean.alphas, 0.1)];
    return {hw_clean < hw_noisy,
            fmt("half_width noiseless=%.6g sigma0.08=%.6g", hw_clean, hw_noisy)};
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Paths of every CSV under `dir`, relative to it.
std::set<fs::path> csv_files(const fs::path& dir)
{
    std::set<fs::path> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            out.insert(fs::relative(entry.path(), dir));
        }
    }
    return out;
}

Outcome c8(Workspace& w)
{
    const std::vector<fs::path> runs{w.logistic_run().directory, w.bl_run().directory,
                                     w.inverse_reduced_run().directory, w.coverage_run().directory};
    Outcome o{true, {}};
    std::size_t compared = 0;
    for (const auto& dir : runs) {
        auto c = cli::load_config(dir / "config.ini");
        c.output = w.root / "rerun";
        const fs::path rerun = c.run_directory();
        cli::run(c, w.options);
        const auto original = csv_files(dir);
        const auto again = csv_files(rerun);
        if (original != again || original.empty()) {
            o.pass = false;
            o.detail += "file sets differ in " + dir.string() + "; ";
            continue;
        }
        for (const auto& rel : original) {
            ++compared;
            if (read_file(dir / rel) != read_file(rerun / rel)) {
                o.pass = false;
                o.detail += "differs: " + (dir / rel).string() + "; ";
            }
        }
    }
    o.detail += fmt("experiments=%zu csv_files=%zu", runs.size(), compared);
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    Workspace w;
    w.root = fs::temp_directory_path() / "confpinn-acceptance";
    std::set<std::string> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--work" && i + 1 < argc) {
            w.root = argv[++i];
        } else if (arg == "--only" && i + 1 < argc) {
            std::stringstream list(argv[++i]);
            for (std::string id; std::getline(list, id, ',');) {
                only.insert(id);
            }
        } else {
            std::cerr << "usage: confpinn_acceptance [--work DIR] [--only C1,C3,...]\n";
            return 2;
        }
    }
    fs::remove_all(w.root);
    fs::create_directories(w.root);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"C1", [&] { return c1(w); }},
        {"C2", [&] { return c2(w); }},
        {"C3", [&] { return c3(w); }},
        {"C3-reduced", [&] { return c3_reduced(w); }},
        {"C4", [&] { return c4(w); }},
        {"C5a", c5a},
        {"C5b", c5b},
        {"C5c", c5c},
        {"C5d", c5d},
        {"C6", c6},
        {"C7", [&] { return c7(w); }},
        {"C8", [&] { return c8(w); }},
    };

    int failures = 0;
    for (const auto& [id, check] : criteria) {
        const std::string group = id.substr(0, 2);
        if (!only.empty() && !only.contains(id) && !only.contains(group)) {
            continue;
        }
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << id << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
