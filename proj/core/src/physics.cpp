#include "confpinn/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "confpinn/error.hpp"

namespace confpinn::physics {

void LogisticProblem::validate() const
{
    if (!(t_domain.upper > t_domain.lower)) {
        throw ConfigError("logistic problem: empty time domain");
    }
    if (!std::isfinite(beta) || !std::isfinite(n0)) {
        throw ConfigError("logistic problem: beta and n0 must be finite");
    }
}

void BuckleyLeverettProblem::validate() const
{
    if (!(x_domain.upper > x_domain.lower) || !(t_domain.upper > t_domain.lower)) {
        throw ConfigError("buckley-leverett problem: empty domain");
    }
    if (!std::isfinite(u_left) || !std::isfinite(u_right)) {
        throw ConfigError("buckley-leverett problem: initial states must be finite");
    }
}

// -------------------------------------------------------------------- flux ---

namespace {
double flux_denominator(double u) noexcept { return 5.0 * u * u - 2.0 * u + 1.0; }
} // namespace

double flux(double u) noexcept { return 4.0 * u * u / flux_denominator(u); }

double flux_derivative(double u) noexcept
{
    const double d = flux_denominator(u);
    return 8.0 * u * (1.0 - u) / (d * d);
}

double flux_second_derivative(double u) noexcept
{
    // d/du [8u(1-u) D^-2] = 8(1-2u) D^-2 - 16u(1-u) D' D^-3,  D' = 10u - 2
    const double d = flux_denominator(u);
    return 8.0 * ((1.0 - 2.0 * u) * d - 2.0 * u * (1.0 - u) * (10.0 * u - 2.0)) / (d * d * d);
}

// ------------------------------------------------------------- surrogates ---

InputScaling::InputScaling(std::vector<Interval> domains)
{
    for (const auto& d : domains) {
        if (!(d.upper > d.lower)) {
            throw ConfigError("input scaling needs non-empty domains");
        }
        scale_.push_back(2.0 / d.width());
        shift_.push_back(0.5 * (d.lower + d.upper));
    }
}

net::Batch InputScaling::apply(const net::Batch& physical) const
{
    if (physical.empty()) {
        return net::Batch(dim());
    }
    if (physical.dim() != dim()) {
        throw ShapeError("input dimension " + std::to_string(physical.dim()) +
                         " does not match the problem dimension " + std::to_string(dim()));
    }
    std::vector<double> coords(physical.coords().begin(), physical.coords().end());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const auto k = i % dim();
        coords[i] = (coords[i] - shift_[k]) * scale_[k];
    }
    return net::Batch(dim(), std::move(coords));
}

InputScaling scaling_for(const LogisticProblem& problem)
{
    return InputScaling({problem.t_domain});
}

InputScaling scaling_for(const BuckleyLeverettProblem& problem)
{
    return InputScaling({problem.t_domain, problem.x_domain});
}

std::vector<double> predict(const net::MlpModel& model, const InputScaling& scaling,
                            const net::Batch& physical)
{
    return net::forward(model, scaling.apply(physical));
}

namespace {

double logistic_beta(const net::MlpModel& model, const LogisticProblem& problem)
{
    if (problem.inverse_mode != model.inverse_mode()) {
        throw ConfigError(problem.inverse_mode
                              ? "inverse logistic problem needs an inverse-mode model"
                              : "forward logistic problem needs a model without trainable beta");
    }
    return problem.inverse_mode ? *model.beta() : problem.beta;
}

} // namespace

std::vector<double> logistic_residual(const net::MlpModel& model, const LogisticProblem& problem,
                                      std::span<const double> t_points)
{
    const double beta = logistic_beta(model, problem);
    const auto scaling = scaling_for(problem);
    const auto out =
        net::input_derivatives(model, scaling.apply(net::Batch::from_scalars(t_points)));
    std::vector<double> r(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double n = out.values[i];
        r[i] = out.derivative(i, 0) * scaling.factor(0) - beta * n * (1.0 - n);
    }
    return r;
}

std::vector<double> bl_residual(const net::MlpModel& model, const BuckleyLeverettProblem& problem,
                                const net::Batch& tx_points)
{
    const auto scaling = scaling_for(problem);
    const auto out = net::input_derivatives(model, scaling.apply(tx_points));
    std::vector<double> r(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double u = out.values[i];
        const double u_t = out.derivative(i, 0) * scaling.factor(0);
        const double u_x = out.derivative(i, 1) * scaling.factor(1);
        r[i] = u_t - flux_derivative(u) * u_x;
    }
    return r;
}

// ------------------------------------------------------------------- grids ---

CollocationGrid logistic_grid(const LogisticProblem& problem, std::size_t count)
{
    CollocationGrid grid;
    grid.interior = net::Batch(1);
    grid.initial = net::Batch(1);
    const auto& dom = problem.t_domain;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? dom.lower
                                    : dom.lower + dom.width() * static_cast<double>(i) /
                                                      static_cast<double>(count - 1);
        grid.interior.push_back(std::span<const double>(&t, 1));
    }
    const double t0 = 0.0;
    if (dom.contains(t0)) {
        grid.initial.push_back(std::span<const double>(&t0, 1));
        grid.initial_values.push_back(problem.n0);
    }
    return grid;
}

CollocationGrid bl_grid(const BuckleyLeverettProblem& problem, std::size_t nt, std::size_t nx,
                        std::size_t n_initial)
{
    CollocationGrid grid;
    grid.interior = net::Batch(2);
    grid.initial = net::Batch(2);
    const auto& td = problem.t_domain;
    const auto& xd = problem.x_domain;
    for (std::size_t i = 0; i < nt; ++i) {
        const double t = td.lower + td.width() * (static_cast<double>(i) + 0.5) / static_cast<double>(nt);
        for (std::size_t j = 0; j < nx; ++j) {
            const double x =
                xd.lower + xd.width() * (static_cast<double>(j) + 0.5) / static_cast<double>(nx);
            const double p[2] = {t, x};
            grid.interior.push_back(p);
        }
    }
    for (std::size_t j = 0; j < n_initial; ++j) {
        const double x =
            xd.lower + xd.width() * (static_cast<double>(j) + 0.5) / static_cast<double>(n_initial);
        if (x == 0.0) {
            continue;
        }
        const double p[2] = {td.lower, x};
        grid.initial.push_back(p);
        grid.initial_values.push_back(problem.initial_value(x));
    }
    return grid;
}

// ------------------------------------------------------------------ losses ---

namespace {

/// Points of one loss, laid out as [data | interior | initial] in a single
/// scaled batch so one sweep serves every term.
struct LossLayout {
    net::Batch scaled;
    std::size_t n_data = 0;
    std::size_t n_interior = 0;
    std::size_t n_initial = 0;
    std::vector<double> observations;
    std::vector<double> initial_values;
};

LossLayout make_layout(const InputScaling& scaling, const datagen::Dataset& data,
                       const CollocationGrid& grid)
{
    if (data.empty() && grid.interior.empty()) {
        throw ConfigError("PINN loss needs data points or collocation points");
    }
    if (!data.empty()) {
        data.validate();
        if (data.input_dim() != scaling.dim()) {
            throw ShapeError("dataset input dimension " + std::to_string(data.input_dim()) +
                             " does not match the problem dimension " +
                             std::to_string(scaling.dim()));
        }
    }
    if (grid.initial.size() != grid.initial_values.size()) {
        throw ShapeError("initial-condition points and target values differ in count");
    }
    LossLayout layout;
    layout.scaled = net::Batch(scaling.dim());
    layout.scaled.append(scaling.apply(data.inputs));
    layout.scaled.append(scaling.apply(grid.interior));
    layout.scaled.append(scaling.apply(grid.initial));
    layout.n_data = data.size();
    layout.n_interior = grid.interior.size();
    layout.n_initial = grid.initial.size();
    layout.observations = data.observations;
    layout.initial_values = grid.initial_values;
    return layout;
}

/// Residual at one interior point and its partials with respect to the
/// network value, each input derivative and beta.
struct ResidualTerms {
    double r = 0.0;
    double dr_du = 0.0;
    double dr_dderiv[2] = {0.0, 0.0};
    double dr_dbeta = 0.0;
};

/// Shared shape of both PINN losses; Derived supplies residual_terms().
template <class Derived>
class CompositeLoss : public PinnLoss {
  public:
    CompositeLoss(InputScaling scaling, LossLayout layout, LossWeights weights)
        : scaling_{std::move(scaling)}, layout_{std::move(layout)}, weights_{weights}
    {}

    const InputScaling& scaling() const noexcept override { return scaling_; }

    LossBreakdown evaluate(const net::MlpModel& model, std::span<double> grad) const override
    {
        static_cast<const Derived&>(*this).check_model(model);
        LossBreakdown breakdown;
        auto closure = [&](const net::NetworkOutputs& out, const net::MlpModel& m) {
            return seeds(out, m, breakdown);
        };
        if (grad.empty()) {
            const auto out = net::input_derivatives(model, layout_.scaled);
            seeds(out, model, breakdown);
            return breakdown;
        }
        if (grad.size() != model.parameter_count()) {
            throw ShapeError("gradient buffer does not match the parameter count");
        }
        const auto g = net::grad_params(model, layout_.scaled, closure, true);
        std::copy(g.parameters.begin(), g.parameters.end(), grad.begin());
        return breakdown;
    }

  private:
    net::OutputSensitivity seeds(const net::NetworkOutputs& out, const net::MlpModel& model,
                                 LossBreakdown& breakdown) const
    {
        const auto dim = out.input_dim;
        net::OutputSensitivity s;
        s.d_values.assign(out.size(), 0.0);
        s.d_input_derivatives.assign(out.size() * dim, 0.0);

        double data_sse = 0.0;
        for (std::size_t i = 0; i < layout_.n_data; ++i) {
            const double e = out.values[i] - layout_.observations[i];
            data_sse += e * e;
            s.d_values[i] = weights_.data * 2.0 * e / static_cast<double>(layout_.n_data);
        }

        double phys_sse = 0.0;
        const auto first_interior = layout_.n_data;
        for (std::size_t j = 0; j < layout_.n_interior; ++j) {
            const auto i = first_interior + j;
            const auto terms = static_cast<const Derived&>(*this).residual_terms(out, i, model);
            phys_sse += terms.r * terms.r;
            const double dl_dr =
                weights_.physics * 2.0 * terms.r / static_cast<double>(layout_.n_interior);
            s.d_values[i] += dl_dr * terms.dr_du;
            for (std::size_t k = 0; k < dim; ++k) {
                s.d_input_derivatives[i * dim + k] += dl_dr * terms.dr_dderiv[k];
            }
            s.d_beta += dl_dr * terms.dr_dbeta;
        }

        double ic_sse = 0.0;
        const auto first_initial = layout_.n_data + layout_.n_interior;
        for (std::size_t j = 0; j < layout_.n_initial; ++j) {
            const auto i = first_initial + j;
            const double e = out.values[i] - layout_.initial_values[j];
            ic_sse += e * e;
            s.d_values[i] += weights_.initial * 2.0 * e / static_cast<double>(layout_.n_initial);
        }

        breakdown.data = layout_.n_data ? data_sse / static_cast<double>(layout_.n_data) : 0.0;
        breakdown.physics =
            layout_.n_interior ? phys_sse / static_cast<double>(layout_.n_interior) : 0.0;
        breakdown.initial =
            layout_.n_initial ? ic_sse / static_cast<double>(layout_.n_initial) : 0.0;
        breakdown.total = weights_.data * breakdown.data + weights_.physics * breakdown.physics +
                          weights_.initial * breakdown.initial;
        s.loss = breakdown.total;
        return s;
    }

  protected:
    InputScaling scaling_;
    LossLayout layout_;
    LossWeights weights_;
};

class LogisticLoss final : public CompositeLoss<LogisticLoss> {
  public:
    LogisticLoss(const LogisticProblem& problem, LossLayout layout, LossWeights weights)
        : CompositeLoss(scaling_for(problem), std::move(layout), weights), problem_{problem}
    {}

    void check_model(const net::MlpModel& model) const
    {
        if (model.input_dim() != 1) {
            throw ShapeError("logistic PINN needs a one-input network");
        }
        logistic_beta(model, problem_);
    }

    ResidualTerms residual_terms(const net::NetworkOutputs& out, std::size_t i,
                                 const net::MlpModel& model) const
    {
        const double beta = problem_.inverse_mode ? *model.beta() : problem_.beta;
        const double n = out.values[i];
        const double c = scaling_.factor(0);
        ResidualTerms t;
        t.r = c * out.derivative(i, 0) - beta * n * (1.0 - n);
        t.dr_du = -beta * (1.0 - 2.0 * n);
        t.dr_dderiv[0] = c;
        t.dr_dbeta = problem_.inverse_mode ? -n * (1.0 - n) : 0.0;
        return t;
    }

  private:
    LogisticProblem problem_;
};

class BuckleyLeverettLoss final : public CompositeLoss<BuckleyLeverettLoss> {
  public:
    BuckleyLeverettLoss(const BuckleyLeverettProblem& problem, LossLayout layout,
                        LossWeights weights)
        : CompositeLoss(scaling_for(problem), std::move(layout), weights)
    {}

    void check_model(const net::MlpModel& model) const
    {
        if (model.input_dim() != 2) {
            throw ShapeError("Buckley-Leverett PINN needs a two-input (t, x) network");
        }
    }

    ResidualTerms residual_terms(const net::NetworkOutputs& out, std::size_t i,
                                 const net::MlpModel&) const
    {
        const double u = out.values[i];
        const double ct = scaling_.factor(0);
        const double cx = scaling_.factor(1);
        const double u_x = cx * out.derivative(i, 1);
        ResidualTerms t;
        t.r = ct * out.derivative(i, 0) - flux_derivative(u) * u_x;
        t.dr_du = -flux_second_derivative(u) * u_x;
        t.dr_dderiv[0] = ct;
        t.dr_dderiv[1] = -flux_derivative(u) * cx;
        return t;
    }
};

} // namespace

std::unique_ptr<PinnLoss> make_logistic_loss(const LogisticProblem& problem,
                                             const datagen::Dataset& data,
                                             const CollocationGrid& grid, const LossWeights& weights)
{
    problem.validate();
    auto layout = make_layout(scaling_for(problem), data, grid);
    return std::make_unique<LogisticLoss>(problem, std::move(layout), weights);
}

std::unique_ptr<PinnLoss> make_bl_loss(const BuckleyLeverettProblem& problem,
                                       const datagen::Dataset& data, const CollocationGrid& grid,
                                       const LossWeights& weights)
{
    problem.validate();
    auto layout = make_layout(scaling_for(problem), data, grid);
    return std::make_unique<BuckleyLeverettLoss>(problem, std::move(layout), weights);
}

LossBreakdown pinn_loss(const net::MlpModel& model, const PinnLoss& loss)
{
    return loss.evaluate(model);
}

// ---------------------------------------------------------------- training ---

TrainingReport train(net::MlpModel& model, const PinnLoss& loss, const TrainingConfig& config)
{
    net::MlpModel work = model;
    const optim::Objective objective = [&](std::span<const double> x, std::span<double> grad) {
        std::copy(x.begin(), x.end(), work.parameters().begin());
        try {
            return loss.evaluate(work, grad).total;
        }
        catch (const NumericError&) {
            std::fill(grad.begin(), grad.end(), 0.0);
            return std::numeric_limits<double>::infinity();
        }
    };

    std::vector<double> x(model.parameters().begin(), model.parameters().end());
    TrainingReport report;
    report.adam = optim::run_adam(x, objective, config.adam);
    report.initial_loss = report.adam.initial_loss;
    report.lbfgs = optim::run_lbfgs(x, objective, config.lbfgs);

    std::copy(x.begin(), x.end(), model.parameters().begin());
    report.final_breakdown = loss.evaluate(model);
    report.final_loss = report.final_breakdown.total;
    return report;
}

} // namespace confpinn::physics
