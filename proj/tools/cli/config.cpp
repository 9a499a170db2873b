#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "confpinn/error.hpp"
#include "confpinn/format.hpp"

namespace confpinn::cli {

namespace pt = boost::property_tree;

std::string to_string(Experiment e)
{
    switch (e) {
    case Experiment::forward_logistic:
        return "forward-logistic";
    case Experiment::forward_bl:
        return "forward-bl";
    case Experiment::inverse:
        return "inverse";
    case Experiment::coverage:
        return "coverage";
    }
    return "unknown";
}

Experiment experiment_from_string(const std::string& name)
{
    for (auto e : {Experiment::forward_logistic, Experiment::forward_bl, Experiment::inverse,
                   Experiment::coverage}) {
        if (to_string(e) == name) {
            return e;
        }
    }
    throw ConfigError("unknown experiment '" + name + "'");
}

std::string ExperimentConfig::effective_label() const
{
    return label.empty() ? "seed-" + std::to_string(seed) : label;
}

std::filesystem::path ExperimentConfig::run_directory() const
{
    return output / to_string(experiment) / effective_label();
}

std::vector<double> parse_double_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(parse_double(item));
        }
        catch (const ParseError&) {
            throw ConfigError("bad number '" + item + "' in list '" + text + "'");
        }
    }
    return out;
}

std::string format_double_list(const std::vector<double>& values)
{
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += (i ? "," : "") + format_double(values[i]);
    }
    return s;
}

namespace {

std::string format_size_list(const std::vector<std::size_t>& values)
{
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += (i ? "," : "") + std::to_string(values[i]);
    }
    return s;
}

std::size_t parse_size(const std::string& key, const std::string& text)
{
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        if (text.empty() || text.front() == '-') {
            throw std::invalid_argument(text);
        }
        v = std::stoull(text, &pos);
    }
    catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
    }
    if (pos != text.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& text)
{
    std::vector<std::size_t> out;
    if (text.empty()) {
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_size(key, item));
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

/// One INI key bound to a config field, in both directions.
struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class Member>
Field number(std::string section, std::string key, Member member)
{
    const auto name = section + "." + key;
    return {section, key,
            [member](const ExperimentConfig& c) { return format_double(member(c)); },
            [member, name](ExperimentConfig& c, const std::string& v) {
                try {
                    member(c) = parse_double(v);
                }
                catch (const ParseError&) {
                    throw ConfigError(name + ": expected a number, got '" + v + "'");
                }
            }};
}

template <class Member>
Field size(std::string section, std::string key, Member member)
{
    const auto name = section + "." + key;
    return {section, key,
            [member](const ExperimentConfig& c) { return std::to_string(member(c)); },
            [member, name](ExperimentConfig& c, const std::string& v) { member(c) = parse_size(name, v); }};
}

template <class Member>
Field text(std::string section, std::string key, Member member)
{
    return {section, key,
            [member](const ExperimentConfig& c) { return std::string(member(c)); },
            [member](ExperimentConfig& c, const std::string& v) { member(c) = v; }};
}

#define CONFPINN_REF(expr) [](auto& c) -> auto& { return expr; }

std::vector<Field> common_fields()
{
    return {
        {"experiment", "name", [](const ExperimentConfig& c) { return to_string(c.experiment); },
         [](ExperimentConfig& c, const std::string& v) { c.experiment = experiment_from_string(v); }},
        text("experiment", "label", CONFPINN_REF(c.label)),
        {"experiment", "seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
         [](ExperimentConfig& c, const std::string& v) { c.seed = parse_size("experiment.seed", v); }},
        {"experiment", "output", [](const ExperimentConfig& c) { return c.output.string(); },
         [](ExperimentConfig& c, const std::string& v) { c.output = v; }},
        {"experiment", "plots", [](const ExperimentConfig& c) { return std::string(c.plots ? "true" : "false"); },
         [](ExperimentConfig& c, const std::string& v) { c.plots = parse_bool("experiment.plots", v); }},
    };
}

std::vector<Field> training_fields()
{
    return {
        {"network", "hidden", [](const ExperimentConfig& c) { return format_size_list(c.hidden); },
         [](ExperimentConfig& c, const std::string& v) { c.hidden = parse_size_list("network.hidden", v); }},
        size("training", "adam_epochs", CONFPINN_REF(c.training.adam.epochs)),
        number("training", "adam_lr_start", CONFPINN_REF(c.training.adam.lr_start)),
        number("training", "adam_lr_end", CONFPINN_REF(c.training.adam.lr_end)),
        number("training", "adam_beta1", CONFPINN_REF(c.training.adam.beta1)),
        number("training", "adam_beta2", CONFPINN_REF(c.training.adam.beta2)),
        number("training", "adam_epsilon", CONFPINN_REF(c.training.adam.epsilon)),
        size("training", "lbfgs_history", CONFPINN_REF(c.training.lbfgs.history_size)),
        size("training", "lbfgs_max_iterations", CONFPINN_REF(c.training.lbfgs.max_iterations)),
        number("training", "lbfgs_gradient_tolerance", CONFPINN_REF(c.training.lbfgs.gradient_tolerance)),
        number("training", "lbfgs_step_tolerance", CONFPINN_REF(c.training.lbfgs.step_tolerance)),
        number("training", "lbfgs_wolfe_c1", CONFPINN_REF(c.training.lbfgs.wolfe_c1)),
        number("training", "lbfgs_wolfe_c2", CONFPINN_REF(c.training.lbfgs.wolfe_c2)),
    };
}

std::vector<Field> split_fields()
{
    return {
        number("data", "noise", CONFPINN_REF(c.noise)),
        size("data", "n_train", CONFPINN_REF(c.n_train)),
        size("data", "n_holdout", CONFPINN_REF(c.n_holdout)),
        size("data", "n_test", CONFPINN_REF(c.n_test)),
        size("data", "n_calibration", CONFPINN_REF(c.n_calibration)),
        size("data", "n_validation", CONFPINN_REF(c.n_validation)),
    };
}

std::vector<Field> coverage_fields()
{
    return {
        {"coverage", "alphas", [](const ExperimentConfig& c) { return format_double_list(c.alphas); },
         [](ExperimentConfig& c, const std::string& v) { c.alphas = parse_double_list(v); }},
        size("coverage", "trials", CONFPINN_REF(c.trials)),
    };
}

std::vector<Field> fields_for(Experiment e)
{
    auto fields = common_fields();
    const auto add = [&fields](std::vector<Field> more) {
        fields.insert(fields.end(), more.begin(), more.end());
    };
    switch (e) {
    case Experiment::forward_logistic:
        add({
            number("logistic", "beta", CONFPINN_REF(c.logistic.beta)),
            number("logistic", "n0", CONFPINN_REF(c.logistic.n0)),
            number("logistic", "t_min", CONFPINN_REF(c.logistic.t_domain.lower)),
            number("logistic", "t_max", CONFPINN_REF(c.logistic.t_domain.upper)),
            size("logistic", "points", CONFPINN_REF(c.logistic_points)),
            size("logistic", "collocation", CONFPINN_REF(c.logistic_collocation)),
        });
        add(split_fields());
        add(coverage_fields());
        add(training_fields());
        break;
    case Experiment::forward_bl:
        add({
            number("buckley_leverett", "x_min", CONFPINN_REF(c.bl.x_domain.lower)),
            number("buckley_leverett", "x_max", CONFPINN_REF(c.bl.x_domain.upper)),
            number("buckley_leverett", "t_min", CONFPINN_REF(c.bl.t_domain.lower)),
            number("buckley_leverett", "t_max", CONFPINN_REF(c.bl.t_domain.upper)),
            number("buckley_leverett", "u_left", CONFPINN_REF(c.bl.u_left)),
            number("buckley_leverett", "u_right", CONFPINN_REF(c.bl.u_right)),
            size("buckley_leverett", "reference_nx", CONFPINN_REF(c.reference_nx)),
            size("buckley_leverett", "reference_nt", CONFPINN_REF(c.reference_nt)),
            number("buckley_leverett", "data_time", CONFPINN_REF(c.bl_data_time)),
            size("buckley_leverett", "points", CONFPINN_REF(c.bl_points)),
            size("buckley_leverett", "collocation_nt", CONFPINN_REF(c.bl_collocation_nt)),
            size("buckley_leverett", "collocation_nx", CONFPINN_REF(c.bl_collocation_nx)),
            size("buckley_leverett", "initial_points", CONFPINN_REF(c.bl_initial_points)),
        });
        add(split_fields());
        add(coverage_fields());
        add(training_fields());
        break;
    case Experiment::inverse:
        add({
            text("inverse", "mode", CONFPINN_REF(c.inverse_mode)),
            size("inverse", "datasets", CONFPINN_REF(c.datasets)),
            size("inverse", "equispaced_count", CONFPINN_REF(c.equispaced_count)),
            number("inverse", "prior_lower", CONFPINN_REF(c.inverse.prior.lower)),
            number("inverse", "prior_upper", CONFPINN_REF(c.inverse.prior.upper)),
            number("inverse", "n0", CONFPINN_REF(c.inverse.n0)),
            number("inverse", "t_max", CONFPINN_REF(c.inverse.t_max)),
            size("inverse", "points", CONFPINN_REF(c.inverse.points)),
            number("inverse", "noise", CONFPINN_REF(c.inverse.noise_sigma)),
            size("inverse", "collocation", CONFPINN_REF(c.inverse.collocation)),
            size("inverse", "n_calibration", CONFPINN_REF(c.inverse_calibration)),
            size("inverse", "fresh_tests", CONFPINN_REF(c.fresh_tests)),
            number("inverse", "alpha", CONFPINN_REF(c.inverse_alpha)),
            size("data", "n_calibration", CONFPINN_REF(c.n_calibration)),
            size("data", "n_validation", CONFPINN_REF(c.n_validation)),
        });
        add(coverage_fields());
        add(training_fields());
        break;
    case Experiment::coverage:
        add({
            {"coverage", "input", [](const ExperimentConfig& c) { return c.input.string(); },
             [](ExperimentConfig& c, const std::string& v) { c.input = v; }},
            text("coverage", "truth_column", CONFPINN_REF(c.truth_column)),
            text("coverage", "prediction_column", CONFPINN_REF(c.prediction_column)),
            size("data", "n_calibration", CONFPINN_REF(c.n_calibration)),
            size("data", "n_validation", CONFPINN_REF(c.n_validation)),
        });
        add(coverage_fields());
        break;
    }
    return fields;
}

#undef CONFPINN_REF

void check_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1), got " + format_double(alpha));
    }
}

} // namespace

ExperimentConfig default_config(Experiment e)
{
    ExperimentConfig c;
    c.experiment = e;
    switch (e) {
    case Experiment::forward_logistic:
        break;
    case Experiment::forward_bl:
        c.noise = 0.0;
        c.alphas = {0.1, 0.15};
        break;
    case Experiment::inverse:
        c.alphas = {0.2};
        c.n_calibration = 800;
        c.n_validation = 200;
        break;
    case Experiment::coverage:
        c.alphas = {0.1};
        c.n_calibration = 0;
        c.n_validation = 0;
        break;
    }
    return c;
}

void ExperimentConfig::validate() const
{
    const auto need = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    need(!alphas.empty(), "coverage.alphas must list at least one level");
    for (double a : alphas) {
        check_alpha(a);
    }
    need(trials >= 1, "coverage.trials must be at least 1");
    need(label.find('/') == std::string::npos && label != "." && label != "..",
         "experiment.label must be a plain directory name");

    const auto check_training = [&] {
        for (auto h : hidden) {
            need(h >= 1, "network.hidden entries must be positive");
        }
        training.adam.validate();
        training.lbfgs.validate();
    };
    const auto check_splits = [&](std::size_t total) {
        need(n_train + n_holdout + n_test == total,
             "data.n_train + n_holdout + n_test = " + std::to_string(n_train + n_holdout + n_test) +
                 " must equal the dataset size " + std::to_string(total));
        need(n_calibration + n_validation == n_holdout,
             "data.n_calibration + n_validation = " + std::to_string(n_calibration + n_validation) +
                 " must equal data.n_holdout = " + std::to_string(n_holdout));
        need(n_calibration >= 1 && n_validation >= 1,
             "data.n_calibration and data.n_validation must be positive");
        need(n_train >= 1, "data.n_train must be positive");
        need(noise >= 0.0 && std::isfinite(noise), "data.noise must be finite and non-negative");
    };

    switch (experiment) {
    case Experiment::forward_logistic:
        logistic.validate();
        need(!logistic.inverse_mode, "forward logistic runs with a fixed beta");
        need(logistic_points >= 2, "logistic.points must be at least 2");
        check_splits(logistic_points);
        check_training();
        break;
    case Experiment::forward_bl:
        bl.validate();
        need(reference_nx >= 16 && reference_nt >= 16,
             "buckley_leverett.reference_nx and reference_nt must be at least 16");
        need(bl.t_domain.contains(bl_data_time), "buckley_leverett.data_time outside the time domain");
        need(bl_points >= 2, "buckley_leverett.points must be at least 2");
        check_splits(bl_points);
        check_training();
        break;
    case Experiment::inverse: {
        inverse.validate();
        check_training();
        need(inverse_mode == "random" || inverse_mode == "equispaced",
             "inverse.mode must be 'random' or 'equispaced'");
        check_alpha(inverse_alpha);
        const auto records = inverse_mode == "random" ? datasets : equispaced_count;
        need(records >= 2, "the inverse pipeline needs at least two records");
        need(n_calibration + n_validation == records,
             "data.n_calibration + n_validation = " + std::to_string(n_calibration + n_validation) +
                 " must equal the number of records " + std::to_string(records));
        need(n_calibration >= 1 && n_validation >= 1,
             "data.n_calibration and data.n_validation must be positive");
        if (inverse_mode == "random") {
            need(inverse_calibration >= 1 && inverse_calibration <= datasets,
                 "inverse.n_calibration must lie in [1, inverse.datasets]");
            need(fresh_tests >= 1, "inverse.fresh_tests must be at least 1");
        }
        break;
    }
    case Experiment::coverage:
        need(!input.empty(), "coverage needs an input file");
        need(!truth_column.empty() && !prediction_column.empty(), "column names must not be empty");
        break;
    }
}

std::string to_ini(const ExperimentConfig& config)
{
    pt::ptree tree;
    for (const auto& f : fields_for(config.experiment)) {
        tree.put(pt::ptree::path_type(f.section + "/" + f.key, '/'), f.get(config));
    }
    std::ostringstream out;
    pt::write_ini(out, tree);
    return out.str();
}

ExperimentConfig from_ini(const std::string& text)
{
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    }
    catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
    }
    const auto name = tree.get_optional<std::string>(pt::ptree::path_type("experiment/name", '/'));
    if (!name) {
        throw ConfigError("config: missing [experiment] name");
    }
    auto config = default_config(experiment_from_string(*name));

    std::map<std::string, const Field*> by_key;
    const auto fields = fields_for(config.experiment);
    for (const auto& f : fields) {
        by_key[f.section + "." + f.key] = &f;
    }
    for (const auto& [section, entries] : tree) {
        if (entries.empty() && !entries.data().empty()) {
            throw ConfigError("config: key '" + section + "' outside any section");
        }
        for (const auto& [key, value] : entries) {
            const auto it = by_key.find(section + "." + key);
            if (it == by_key.end()) {
                throw ConfigError("config: unknown key '" + section + "." + key + "' for " +
                                  *name);
            }
            it->second->set(config, value.data());
        }
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_ini(ss.str());
}

} // namespace confpinn::cli
