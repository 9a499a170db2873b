#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace confpinn::optim {

/// Evaluates the objective at `x` and writes its gradient into `grad`
/// (same length as x). Returns the objective value.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Adam with a learning rate annealed linearly from lr_start to lr_end.
struct AdamConfig {
    std::size_t epochs = 100;
    double lr_start = 1e-2;
    double lr_end = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Return the parameters with the lowest loss seen (including the start
    /// point and the final iterate) rather than the last iterate.
    bool keep_best = true;

    void validate() const;
};

struct AdamResult {
    /// Loss at the start of each epoch, before that epoch's update.
    std::vector<double> loss_trace;
    /// Learning rate used by each epoch's update.
    std::vector<double> learning_rates;
    double initial_loss = 0.0;
    /// Loss at the returned parameters.
    double final_loss = 0.0;
    std::size_t steps = 0;
};

/// lr_start + (lr_end - lr_start) * epoch / (epochs - 1); lr_start when epochs == 1.
double adam_learning_rate(const AdamConfig& config, std::size_t epoch);

/// Full-batch Adam. Throws NumericError naming the epoch if the loss stops
/// being finite.
AdamResult run_adam(std::vector<double>& x, const Objective& objective, const AdamConfig& config);

enum class Termination {
    gradient_tolerance,
    step_tolerance,
    max_iterations,
    line_search_failure,
};

std::string_view to_string(Termination reason) noexcept;
/// Inverse of to_string; throws ParseError on unknown names.
Termination termination_from_string(std::string_view name);

struct LbfgsConfig {
    std::size_t history_size = 50;
    std::size_t max_iterations = 5000;
    /// Stop when the Euclidean norm of the gradient drops below this.
    double gradient_tolerance = 1e-9;
    /// Stop when an accepted step moves no coordinate by more than this.
    double step_tolerance = 1e-12;
    /// Sufficient-decrease constant of the strong Wolfe conditions.
    double wolfe_c1 = 1e-4;
    /// Curvature constant of the strong Wolfe conditions.
    double wolfe_c2 = 0.9;
    std::size_t max_line_search_evaluations = 25;

    void validate() const;
};

struct LbfgsResult {
    Termination termination = Termination::max_iterations;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double gradient_norm = 0.0;
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
/// safeguarded cubic zoom). `x` always ends at the best point seen, so
/// final_loss <= initial_loss.
LbfgsResult run_lbfgs(std::vector<double>& x, const Objective& objective,
                      const LbfgsConfig& config);

} // namespace confpinn::optim
