#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace confpinn::conformal {

/// Non-negative, finite nonconformity scores of a calibration set.
class ScoreSet {
  public:
    ScoreSet() = default;
    /// Throws NumericError on a negative or non-finite score.
    explicit ScoreSet(std::vector<double> scores);

    std::size_t size() const noexcept { return scores_.size(); }
    bool empty() const noexcept { return scores_.empty(); }
    std::span<const double> scores() const noexcept { return scores_; }

  private:
    std::vector<double> scores_;
};

/// |truth_i - prediction_i|. Throws ShapeError on length mismatch or empty input.
ScoreSet nonconformity_scores(std::span<const double> predictions, std::span<const double> truths);

/// k = ceil((1 - alpha)(n_c + 1)). Products within a relative 1e-9 of an
/// integer count as that integer, so that decimal alphas like 0.1 or 0.2
/// do not pick up an extra rank from binary rounding.
std::size_t conformal_rank(std::size_t n_calibration, double alpha);

/// The k-th smallest score (1-based) with k = conformal_rank(n_c, alpha), or
/// +infinity when k > n_c. Throws ConfigError unless 0 < alpha < 1 and
/// the score set is non-empty.
double conformal_quantile(const ScoreSet& scores, double alpha);

/// Closed interval [center - half_width, center + half_width].
struct PredictionInterval {
    double center = 0.0;
    double half_width = 0.0; ///< may be +infinity
    double alpha = 0.1;

    double lower() const noexcept { return center - half_width; }
    double upper() const noexcept { return center + half_width; }
};

PredictionInterval make_interval(double prediction, double half_width, double alpha);

/// ceil((1 - alpha)(n_c + 1)) / (n_c + 1), capped at 1.
double theoretical_coverage(std::size_t n_calibration, double alpha);

/// truth in [center - half_width, center + half_width]; boundary included.
bool covered(const PredictionInterval& interval, double truth) noexcept;

} // namespace confpinn::conformal
