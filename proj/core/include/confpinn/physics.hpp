#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "confpinn/dataset.hpp"
#include "confpinn/net.hpp"
#include "confpinn/optim.hpp"

namespace confpinn::physics {

struct Interval {
    double lower = 0.0;
    double upper = 1.0;

    double width() const noexcept { return upper - lower; }
    bool contains(double v) const noexcept { return v >= lower && v <= upper; }
};

/// dN/dt = beta N (1 - N), N(0) = n0, on t_domain.
struct LogisticProblem {
    double beta = 0.05;
    double n0 = 0.1;
    Interval t_domain{0.0, 150.0};
    /// beta is a trainable model parameter instead of a fixed constant.
    bool inverse_mode = false;

    void validate() const;
};

/// u_t - f(u)_x = 0 on x_domain x t_domain with Riemann initial data
/// u(0, x) = u_left for x < 0 and u_right for x > 0.
struct BuckleyLeverettProblem {
    Interval x_domain{-1.0, 1.0};
    Interval t_domain{0.0, 1.0};
    double u_left = -3.0;
    double u_right = 3.0;

    void validate() const;
    double initial_value(double x) const noexcept { return x < 0.0 ? u_left : u_right; }
};

/// f(u) = 4u^2 / (4u^2 + (1 - u)^2). The denominator 5u^2 - 2u + 1 has no
/// real roots, so f is smooth on the whole real line.
double flux(double u) noexcept;
/// f'(u) = 8u(1 - u) / (5u^2 - 2u + 1)^2.
double flux_derivative(double u) noexcept;
double flux_second_derivative(double u) noexcept;
/// Stationary points of f: its global minimum (u = 0) and maximum (u = 1).
inline constexpr double flux_critical_points[] = {0.0, 1.0};

// ------------------------------------------------------------- surrogates ---

/// Affine map from each physical input coordinate onto [-1, 1], applied
/// before the network. Residuals chain-rule through it.
class InputScaling {
  public:
    InputScaling() = default;
    explicit InputScaling(std::vector<Interval> domains);

    std::size_t dim() const noexcept { return shift_.size(); }
    net::Batch apply(const net::Batch& physical) const;
    /// d(scaled_k)/d(physical_k).
    double factor(std::size_t k) const { return scale_[k]; }

  private:
    std::vector<double> shift_;
    std::vector<double> scale_;
};

InputScaling scaling_for(const LogisticProblem& problem);
InputScaling scaling_for(const BuckleyLeverettProblem& problem);

/// Network prediction at physical inputs (applies the problem's scaling).
std::vector<double> predict(const net::MlpModel& model, const InputScaling& scaling,
                            const net::Batch& physical);

/// r(t) = dN/dt - beta N (1 - N) with exact dN/dt. beta comes from the model
/// in inverse mode and from the problem otherwise.
std::vector<double> logistic_residual(const net::MlpModel& model, const LogisticProblem& problem,
                                      std::span<const double> t_points);

/// r(t, x) = u_t - f'(u) u_x with exact u_t, u_x. Points are (t, x) rows.
std::vector<double> bl_residual(const net::MlpModel& model, const BuckleyLeverettProblem& problem,
                                const net::Batch& tx_points);

// ------------------------------------------------------------------ losses ---

/// Points where the residual is enforced plus initial-condition points with
/// their target values.
struct CollocationGrid {
    net::Batch interior;
    net::Batch initial;
    std::vector<double> initial_values;
};

/// `count` uniform points on the problem's time domain (endpoints included),
/// and the single initial-condition point t = 0.
CollocationGrid logistic_grid(const LogisticProblem& problem, std::size_t count);

/// nt x nx cell-centred (t, x) interior grid and n_initial cell-centred
/// points on t = 0. Initial points that land exactly on x = 0 are dropped:
/// the initial data is undefined there.
CollocationGrid bl_grid(const BuckleyLeverettProblem& problem, std::size_t nt, std::size_t nx,
                        std::size_t n_initial);

struct LossWeights {
    double data = 1.0;
    double physics = 1.0;
    double initial = 1.0;
};

struct LossBreakdown {
    double total = 0.0;
    double data = 0.0;    ///< MSE against observations (unweighted)
    double physics = 0.0; ///< mean squared residual (unweighted)
    double initial = 0.0; ///< MSE against initial-condition targets (unweighted)
};

/// Composite PINN objective w_data MSE(data) + w_phys MSE(residual) +
/// w_ic MSE(initial condition) over a fixed set of points.
class PinnLoss {
  public:
    virtual ~PinnLoss() = default;

    /// Loss components at `model`; when `grad` is non-empty it receives the
    /// gradient of the total with respect to model.parameters().
    virtual LossBreakdown evaluate(const net::MlpModel& model, std::span<double> grad) const = 0;
    LossBreakdown evaluate(const net::MlpModel& model) const { return evaluate(model, {}); }

    virtual const InputScaling& scaling() const noexcept = 0;
};

/// Throws ConfigError when the dataset and the grid are both empty, or when
/// the dataset's input dimension is not 1.
std::unique_ptr<PinnLoss> make_logistic_loss(const LogisticProblem& problem,
                                             const datagen::Dataset& data,
                                             const CollocationGrid& grid,
                                             const LossWeights& weights = {});

/// Dataset inputs are (t, x).
std::unique_ptr<PinnLoss> make_bl_loss(const BuckleyLeverettProblem& problem,
                                       const datagen::Dataset& data,
                                       const CollocationGrid& grid,
                                       const LossWeights& weights = {});

/// Scalar loss value for `model` (convenience wrapper over PinnLoss).
LossBreakdown pinn_loss(const net::MlpModel& model, const PinnLoss& loss);

// ---------------------------------------------------------------- training ---

struct TrainingConfig {
    optim::AdamConfig adam;
    optim::LbfgsConfig lbfgs;
};

struct TrainingReport {
    optim::AdamResult adam;
    optim::LbfgsResult lbfgs;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    LossBreakdown final_breakdown;
};

/// Adam for the configured epochs, then L-BFGS until one of its stopping
/// rules fires. Loss weights stay fixed across both phases.
TrainingReport train(net::MlpModel& model, const PinnLoss& loss, const TrainingConfig& config);

} // namespace confpinn::physics
