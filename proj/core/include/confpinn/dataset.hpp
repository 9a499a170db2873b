#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "confpinn/net.hpp"

namespace confpinn::datagen {

/// Where a dataset came from.
struct DatasetMeta {
    std::string problem;               ///< "logistic", "buckley-leverett", ...
    std::optional<double> true_beta;   ///< generating growth rate, when there is one
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

/// Ordered (input, observation) pairs.
struct Dataset {
    net::Batch inputs;
    std::vector<double> observations;
    std::vector<std::string> input_names{"t"};
    std::string observation_name = "N";
    DatasetMeta meta;

    std::size_t size() const noexcept { return observations.size(); }
    bool empty() const noexcept { return observations.empty(); }
    std::size_t input_dim() const noexcept { return inputs.dim(); }

    /// Throws ShapeError/NumericError when inputs and observations disagree
    /// in count, names do not match the dimension, or a value is not finite.
    void validate() const;

    /// New dataset holding the rows at `indices`, in that order.
    Dataset subset(std::span<const std::size_t> indices) const;
};

/// CSV: header `<input names...>,<observation name>`, then one row per point,
/// values in shortest round-trip form (bit-exact on reload).
void write_dataset_csv(const Dataset& data, std::ostream& out);
Dataset read_dataset_csv(std::istream& in);

/// Writes `<path>` (CSV) and `<path>.meta.json` (DatasetMeta).
void save_dataset(const Dataset& data, const std::filesystem::path& csv_path);
/// Reads the CSV and, when present, the sidecar metadata.
Dataset load_dataset(const std::filesystem::path& csv_path);

std::string meta_to_json(const DatasetMeta& meta);
DatasetMeta meta_from_json(const std::string& text);

} // namespace confpinn::datagen
