#include "confpinn/dataset.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "confpinn/csv.hpp"
#include "confpinn/error.hpp"
#include "confpinn/format.hpp"

namespace confpinn::datagen {

void Dataset::validate() const
{
    if (inputs.size() != observations.size()) {
        throw ShapeError("dataset has " + std::to_string(inputs.size()) + " inputs but " +
                         std::to_string(observations.size()) + " observations");
    }
    if (input_names.size() != inputs.dim()) {
        throw ShapeError("dataset input names do not match the input dimension");
    }
    for (double v : inputs.coords()) {
        if (!std::isfinite(v)) {
            throw NumericError("dataset contains a non-finite input");
        }
    }
    for (double v : observations) {
        if (!std::isfinite(v)) {
            throw NumericError("dataset contains a non-finite observation");
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out;
    out.inputs = net::Batch(inputs.dim());
    out.input_names = input_names;
    out.observation_name = observation_name;
    out.meta = meta;
    out.observations.reserve(indices.size());
    for (auto i : indices) {
        if (i >= size()) {
            throw ShapeError("subset index " + std::to_string(i) + " out of range");
        }
        out.inputs.push_back(inputs.point(i));
        out.observations.push_back(observations[i]);
    }
    return out;
}

void write_dataset_csv(const Dataset& data, std::ostream& out)
{
    data.validate();
    std::vector<std::string> fields = data.input_names;
    fields.push_back(data.observation_name);
    csv::write_row(out, fields);
    for (std::size_t i = 0; i < data.size(); ++i) {
        fields.clear();
        for (double v : data.inputs.point(i)) {
            fields.push_back(format_double(v));
        }
        fields.push_back(format_double(data.observations[i]));
        csv::write_row(out, fields);
    }
}

Dataset read_dataset_csv(std::istream& in)
{
    const auto table = csv::read(in);
    if (table.header.size() < 2) {
        throw ParseError("dataset CSV needs at least one input column and one observation column");
    }
    Dataset data;
    const auto dim = table.header.size() - 1;
    data.input_names.assign(table.header.begin(), table.header.end() - 1);
    data.observation_name = table.header.back();
    data.inputs = net::Batch(dim);
    std::vector<double> point(dim);
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < dim; ++k) {
            point[k] = parse_double(row[k]);
        }
        data.inputs.push_back(point);
        data.observations.push_back(parse_double(row[dim]));
    }
    data.validate();
    return data;
}

std::string meta_to_json(const DatasetMeta& meta)
{
    nlohmann::ordered_json j;
    j["problem"] = meta.problem;
    if (meta.true_beta) {
        j["true_beta"] = *meta.true_beta;
    }
    else {
        j["true_beta"] = nullptr;
    }
    j["noise_sigma"] = meta.noise_sigma;
    j["seed"] = meta.seed;
    return j.dump(2) + "\n";
}

DatasetMeta meta_from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        DatasetMeta meta;
        meta.problem = j.at("problem").get<std::string>();
        if (j.contains("true_beta") && !j.at("true_beta").is_null()) {
            meta.true_beta = j.at("true_beta").get<double>();
        }
        meta.noise_sigma = j.at("noise_sigma").get<double>();
        meta.seed = j.at("seed").get<std::uint64_t>();
        return meta;
    }
    catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("dataset metadata: ") + e.what());
    }
}

namespace {
std::filesystem::path meta_path(const std::filesystem::path& csv_path)
{
    auto p = csv_path;
    p += ".meta.json";
    return p;
}
} // namespace

void save_dataset(const Dataset& data, const std::filesystem::path& csv_path)
{
    {
        std::ofstream out(csv_path);
        if (!out) {
            throw IoError("cannot open " + csv_path.string() + " for writing");
        }
        write_dataset_csv(data, out);
    }
    std::ofstream meta(meta_path(csv_path));
    if (!meta) {
        throw IoError("cannot open " + meta_path(csv_path).string() + " for writing");
    }
    meta << meta_to_json(data.meta);
}

Dataset load_dataset(const std::filesystem::path& csv_path)
{
    std::ifstream in(csv_path);
    if (!in) {
        throw IoError("cannot open " + csv_path.string());
    }
    auto data = read_dataset_csv(in);
    std::ifstream meta(meta_path(csv_path));
    if (meta) {
        std::stringstream ss;
        ss << meta.rdbuf();
        data.meta = meta_from_json(ss.str());
    }
    return data;
}

} // namespace confpinn::datagen
