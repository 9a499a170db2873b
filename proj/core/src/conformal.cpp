#include "confpinn/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "confpinn/error.hpp"

namespace confpinn::conformal {

namespace {

void check_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("miscoverage level alpha must lie in (0, 1), got " +
                          std::to_string(alpha));
    }
}

} // namespace

ScoreSet::ScoreSet(std::vector<double> scores) : scores_{std::move(scores)}
{
    for (double s : scores_) {
        if (!std::isfinite(s) || s < 0.0) {
            throw NumericError("nonconformity scores must be finite and non-negative");
        }
    }
}

ScoreSet nonconformity_scores(std::span<const double> predictions, std::span<const double> truths)
{
    if (predictions.size() != truths.size()) {
        throw ShapeError("nonconformity scores: " + std::to_string(predictions.size()) +
                         " predictions but " + std::to_string(truths.size()) + " truths");
    }
    if (predictions.empty()) {
        throw ShapeError("nonconformity scores: no points");
    }
    std::vector<double> scores(predictions.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = std::abs(truths[i] - predictions[i]);
    }
    return ScoreSet(std::move(scores));
}

std::size_t conformal_rank(std::size_t n_calibration, double alpha)
{
    check_alpha(alpha);
    const double target = (1.0 - alpha) * static_cast<double>(n_calibration + 1);
    const double nearest = std::round(target);
    if (std::abs(target - nearest) <= 1e-9 * std::max(1.0, target)) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::ceil(target));
}

double conformal_quantile(const ScoreSet& scores, double alpha)
{
    check_alpha(alpha);
    if (scores.empty()) {
        throw ConfigError("conformal quantile needs at least one calibration score");
    }
    const auto k = conformal_rank(scores.size(), alpha);
    if (k > scores.size()) {
        return std::numeric_limits<double>::infinity();
    }
    if (k == 0) {
        return 0.0;
    }
    std::vector<double> sorted(scores.scores().begin(), scores.scores().end());
    std::stable_sort(sorted.begin(), sorted.end());
    return sorted[k - 1];
}

PredictionInterval make_interval(double prediction, double half_width, double alpha)
{
    return PredictionInterval{prediction, half_width, alpha};
}

double theoretical_coverage(std::size_t n_calibration, double alpha)
{
    if (n_calibration < 1) {
        throw ConfigError("theoretical coverage needs n_c >= 1");
    }
    const auto k = conformal_rank(n_calibration, alpha);
    return std::min(1.0, static_cast<double>(k) / static_cast<double>(n_calibration + 1));
}

bool covered(const PredictionInterval& interval, double truth) noexcept
{
    if (std::isinf(interval.half_width)) {
        return true;
    }
    return std::abs(truth - interval.center) <= interval.half_width;
}

} // namespace confpinn::conformal
