#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace confpinn::cli::svg {

struct Series {
    enum class Style { line, dashed, points };

    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    Style style = Style::line;
    std::string color = "#1f77b4";
};

/// Shaded region between `lower` and `upper` over `x`.
struct Band {
    std::string name;
    std::vector<double> x;
    std::vector<double> lower;
    std::vector<double> upper;
    std::string color = "#1f77b4";
    double opacity = 0.2;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Band> bands;
    std::vector<Series> series;
    double width = 720;
    double height = 440;
};

/// Self-contained SVG document (inline styles, no external references).
/// Non-finite values are skipped; the axes fit the finite data.
std::string render(const Chart& chart);
void write(const std::filesystem::path& path, const Chart& chart);

} // namespace confpinn::cli::svg
