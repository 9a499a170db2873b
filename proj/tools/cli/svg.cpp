#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "confpinn/error.hpp"

namespace confpinn::cli::svg {

namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v)
    {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish()
    {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.04 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

/// About five round-numbered ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi)
{
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
        t.push_back(v);
    }
    return t;
}

} // namespace

std::string render(const Chart& chart)
{
    const double left = 70, right = 170, top = 40, bottom = 55;
    const double pw = chart.width - left - right;
    const double ph = chart.height - top - bottom;

    Range xr, yr;
    for (const auto& s : chart.series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                xr.add(s.x[i]);
                yr.add(s.y[i]);
            }
        }
    }
    for (const auto& b : chart.bands) {
        for (std::size_t i = 0; i < b.x.size(); ++i) {
            xr.add(b.x[i]);
            yr.add(b.lower[i]);
            yr.add(b.upper[i]);
        }
    }
    xr.finish();
    yr.finish();
    const auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto sy = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(chart.width)
      << "\" height=\"" << num(chart.height) << "\" viewBox=\"0 0 " << num(chart.width) << ' '
      << num(chart.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(chart.title) << "</text>\n";

    // Axes, grid and tick labels.
    o << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double t : ticks(xr.lo, xr.hi)) {
        o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(sx(t))
          << "\" y2=\"" << num(top + ph) << "\"/>\n";
    }
    for (double t : ticks(yr.lo, yr.hi)) {
        o << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(t)) << "\" x2=\""
          << num(left + pw) << "\" y2=\"" << num(sy(t)) << "\"/>\n";
    }
    o << "</g>\n";
    o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : ticks(xr.lo, xr.hi)) {
        o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(top + ph + 16)
          << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    for (double t : ticks(yr.lo, yr.hi)) {
        o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(t) + 4)
          << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(chart.height - 12)
      << "\" text-anchor=\"middle\">" << escape(chart.x_label) << "</text>\n";
    o << "<text transform=\"translate(16 " << num(top + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(chart.y_label) << "</text>\n";

    for (const auto& b : chart.bands) {
        std::ostringstream pts;
        bool any = false;
        for (std::size_t i = 0; i < b.x.size(); ++i) {
            if (std::isfinite(b.upper[i]) && std::isfinite(b.x[i])) {
                pts << num(sx(b.x[i])) << ',' << num(sy(b.upper[i])) << ' ';
                any = true;
            }
        }
        for (std::size_t i = b.x.size(); i-- > 0;) {
            if (std::isfinite(b.lower[i]) && std::isfinite(b.x[i])) {
                pts << num(sx(b.x[i])) << ',' << num(sy(b.lower[i])) << ' ';
            }
        }
        if (any) {
            o << "<polygon points=\"" << pts.str() << "\" fill=\"" << b.color
              << "\" fill-opacity=\"" << b.opacity << "\" stroke=\"none\"/>\n";
        }
    }

    for (const auto& s : chart.series) {
        const auto n = std::min(s.x.size(), s.y.size());
        if (s.style == Series::Style::points) {
            o << "<g fill=\"" << s.color << "\">\n";
            for (std::size_t i = 0; i < n; ++i) {
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                    o << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i]))
                      << "\" r=\"2.5\"/>\n";
                }
            }
            o << "</g>\n";
            continue;
        }
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\""
          << (s.style == Series::Style::dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                o << num(sx(s.x[i])) << ',' << num(sy(s.y[i])) << ' ';
            }
        }
        o << "\"/>\n";
    }

    // Legend.
    double ly = top + 10;
    const double lx = left + pw + 14;
    for (const auto& b : chart.bands) {
        o << "<rect x=\"" << num(lx) << "\" y=\"" << num(ly - 8) << "\" width=\"18\" height=\"10\" fill=\""
          << b.color << "\" fill-opacity=\"" << b.opacity << "\"/>\n";
        o << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly + 1) << "\">" << escape(b.name)
          << "</text>\n";
        ly += 18;
    }
    for (const auto& s : chart.series) {
        if (s.style == Series::Style::points) {
            o << "<circle cx=\"" << num(lx + 9) << "\" cy=\"" << num(ly - 3) << "\" r=\"3\" fill=\""
              << s.color << "\"/>\n";
        }
        else {
            o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 3) << "\" x2=\"" << num(lx + 18)
              << "\" y2=\"" << num(ly - 3) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
              << (s.style == Series::Style::dashed ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
        }
        o << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly + 1) << "\">" << escape(s.name)
          << "</text>\n";
        ly += 18;
    }
    o << "</svg>\n";
    return o.str();
}

void write(const std::filesystem::path& path, const Chart& chart)
{
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << render(chart);
}

} // namespace confpinn::cli::svg
